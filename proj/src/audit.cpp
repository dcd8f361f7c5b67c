#include "stereoscope/audit.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <httplib.h>
#include <json.hpp>
#include <regex>
#include <set>
#include <sstream>
#include <thread>
#include <toml.hpp>

#include "stereoscope/csv.hpp"
#include "stereoscope/error.hpp"
#include "stereoscope/remote_probe.hpp"
#include "stereoscope/svg.hpp"
#include "stereoscope/text.hpp"

namespace stereoscope {

using nlohmann::json;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string_view to_string(SourceDataset s) {
  switch (s) {
    case SourceDataset::mgsd: return "MGSD";
    case SourceDataset::awinoqueer: return "AWinoQueer";
    case SourceDataset::aseegull: return "ASeeGULL";
  }
  return "?";
}

SourceDataset parse_source_dataset(std::string_view s) {
  const std::string v = to_lower(trim(s));
  if (v == "mgsd") return SourceDataset::mgsd;
  if (v == "awinoqueer") return SourceDataset::awinoqueer;
  if (v == "aseegull") return SourceDataset::aseegull;
  throw DataError("unknown source dataset '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Prompts

PromptSet parse_prompts(std::string_view csv_text) {
  const auto table = csv::parse(csv_text);
  const char* names[] = {"initial_text", "initial_prediction", "prompt", "prompt_prediction", "source_dataset", "group"};
  std::size_t col[6];
  for (int i = 0; i < 6; ++i) {
    col[i] = table.column(names[i]);
    if (col[i] == std::string::npos) throw DataError(std::string("prompt file lacks column '") + names[i] + "'");
  }
  PromptSet out;
  std::vector<std::string> errors;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    try {
      if (row.size() != table.header.size()) throw DataError("expected " + std::to_string(table.header.size()) + " fields");
      ProbeSentence p;
      p.prompt_id = static_cast<int>(out.prompts.size()) + 1;
      p.initial_text = trim(row[col[0]]);
      p.stem = trim(row[col[2]]);
      if (p.stem.empty()) throw DataError("empty prompt");
      p.source = parse_source_dataset(row[col[4]]);
      p.group = parse_stereotype_type(trim(row[col[5]]));
      out.prompts.push_back(std::move(p));
    } catch (const DataError& e) {
      errors.push_back("row " + std::to_string(r + 1) + ": " + e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid prompt file:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw DataError(msg);
  }
  if (out.prompts.empty()) throw DataError("prompt file has no prompts");

  std::map<std::pair<SourceDataset, StereotypeType>, std::size_t> counts;
  for (const auto& p : out.prompts) ++counts[{p.source, p.group}];
  for (const auto& [key, n] : counts) {
    if (n != kPromptsPerCombination) {
      out.warnings.push_back(std::string(to_string(key.first)) + "/" + std::string(to_string(key.second)) + " has " +
                             std::to_string(n) + " prompts, expected " + std::to_string(kPromptsPerCombination));
    }
  }
  return out;
}

PromptSet load_prompts(const std::string& path) { return parse_prompts(read_text(path)); }

void check_stem_neutrality(const std::vector<ProbeSentence>& prompts, const Probe& probe, double threshold) {
  std::vector<std::string> stems;
  for (const auto& p : prompts) stems.push_back(p.stem);
  const auto probs = probe.predict_proba(std::span<const std::string>(stems));
  std::string offenders;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (probs[i] >= threshold) {
      offenders += "\n  prompt " + std::to_string(prompts[i].prompt_id) + " \"" + prompts[i].stem +
                   "\" p=" + shortest(probs[i]);
    }
  }
  if (!offenders.empty()) throw DataError("prompt stems are not neutral under " + probe.id() + ":" + offenders);
}

std::string build_batch_prompt(const std::vector<ProbeSentence>& prompts) {
  if (prompts.empty()) throw UsageError("no prompts to batch");
  std::string out(kAuditInstruction);
  for (std::size_t i = 0; i < prompts.size(); ++i) out += "\n" + std::to_string(i + 1) + ". " + prompts[i].stem;
  return out;
}

std::vector<ResponseLine> parse_response(const std::string& response, std::size_t count) {
  static const std::regex line_re(R"(^\s*(\d+)\s*[.):]\s*(.*)$)");
  std::vector<ResponseLine> out;
  std::set<int> seen;
  std::istringstream in(response);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ResponseLine r;
    r.raw = line;
    std::smatch m;
    if (std::regex_match(line, m, line_re)) {
      const std::string digits = m[1].str();
      int idx = 0;
      const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
      const std::string text = trim(m[2].str());
      if (res.ec == std::errc() && idx >= 1 && static_cast<std::size_t>(idx) <= count && !text.empty() &&
          seen.insert(idx).second) {
        r.index = idx;
        r.text = text;
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Provider config

std::map<std::string, ProviderConfig> parse_provider_configs(std::string_view toml_text, const std::string& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "invalid provider config: " << e.description() << " at line " << e.source().begin.line;
    throw UsageError(msg.str());
  }
  const auto* providers = root["provider"].as_table();
  if (!providers || providers->empty()) throw UsageError("provider config has no [provider.<name>] tables");
  std::map<std::string, ProviderConfig> out;
  for (const auto& [key, node] : *providers) {
    const auto* t = node.as_table();
    const std::string name(key.str());
    if (!t) throw UsageError("provider." + name + " is not a table");
    ProviderConfig c;
    c.name = name;
    auto str = [&](const char* k, std::string& dst) {
      if (auto v = (*t)[k].value<std::string>()) dst = *v;
    };
    str("model", c.model);
    str("endpoint", c.endpoint);
    str("auth_header", c.auth_header);
    str("auth_env", c.auth_env);
    str("auth_prefix", c.auth_prefix);
    str("body_template", c.body_template);
    str("response_path", c.response_path);
    str("release_date", c.release_date);
    str("replay_path", c.replay_path);
    if (auto v = (*t)["max_in_flight"].value<std::int64_t>()) {
      if (*v < 1) throw UsageError("provider." + name + ".max_in_flight must be positive");
      c.max_in_flight = static_cast<std::size_t>(*v);
    }
    if (auto v = (*t)["max_attempts"].value<std::int64_t>()) {
      if (*v < 1) throw UsageError("provider." + name + ".max_attempts must be positive");
      c.max_attempts = static_cast<int>(*v);
    }
    if (auto v = (*t)["backoff_base_ms"].value<std::int64_t>()) c.backoff_base = std::chrono::milliseconds(*v);
    if (auto v = (*t)["timeout_s"].value<std::int64_t>()) c.timeout = std::chrono::seconds(*v);
    if (auto v = (*t)["temperature"].value<double>()) c.temperature = *v;
    if (auto v = (*t)["max_tokens"].value<std::int64_t>()) c.max_tokens = static_cast<int>(*v);
    if (c.model.empty()) c.model = name;
    if (c.endpoint.empty() && c.replay_path.empty()) {
      throw UsageError("provider." + name + " needs an endpoint or a replay_path");
    }
    if (!c.replay_path.empty() && std::filesystem::path(c.replay_path).is_relative()) {
      c.replay_path = (std::filesystem::path(base_dir) / c.replay_path).string();
    }
    out.emplace(name, std::move(c));
  }
  return out;
}

std::map<std::string, ProviderConfig> load_provider_configs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open provider config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_provider_configs(buf.str(), dir.empty() ? "." : dir.string());
}

// ---------------------------------------------------------------------------
// HTTP provider

namespace {

constexpr std::string_view kDefaultBody =
    R"({"model": "{{model}}", "messages": [{"role": "user", "content": "{{prompt}}"}],)"
    R"( "temperature": "{{temperature}}", "max_tokens": "{{max_tokens}}"})";

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

void fill_template(json& node, const ProviderConfig& cfg, const std::string& prompt, std::uint64_t seed) {
  if (node.is_object() || node.is_array()) {
    for (auto& child : node) fill_template(child, cfg, prompt, seed);
    return;
  }
  if (!node.is_string()) return;
  auto s = node.get<std::string>();
  if (s == "{{temperature}}") {
    node = cfg.temperature;
  } else if (s == "{{max_tokens}}") {
    node = cfg.max_tokens;
  } else if (s == "{{seed}}") {
    node = seed;
  } else {
    replace_all(s, "{{prompt}}", prompt);
    replace_all(s, "{{model}}", cfg.model);
    node = s;
  }
}

}  // namespace

HttpProvider::HttpProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.endpoint.empty()) throw UsageError("provider " + cfg_.name + " has no endpoint");
  split_url(cfg_.endpoint);  // validates the scheme
  if (!cfg_.auth_env.empty()) {
    const char* v = std::getenv(cfg_.auth_env.c_str());
    if (!v || !*v) throw UsageError("environment variable " + cfg_.auth_env + " is not set");
    token_ = v;
  }
  try {
    const auto probe_body = json::parse(cfg_.body_template.empty() ? std::string(kDefaultBody) : cfg_.body_template);
    if (!probe_body.is_object()) throw UsageError("provider " + cfg_.name + " body_template must be a JSON object");
  } catch (const json::parse_error& e) {
    throw UsageError("provider " + cfg_.name + " body_template is not JSON: " + e.what());
  }
}

std::string HttpProvider::render_body(const std::string& prompt, std::uint64_t seed) const {
  json body = json::parse(cfg_.body_template.empty() ? std::string(kDefaultBody) : cfg_.body_template);
  fill_template(body, cfg_, prompt, seed);
  return body.dump();
}

std::string HttpProvider::complete(const std::string& prompt, int iteration, std::uint64_t seed) const {
  const auto [base, path] = split_url(cfg_.endpoint);
  httplib::Client client(base);
  client.set_connection_timeout(cfg_.timeout);
  client.set_read_timeout(cfg_.timeout);
  client.set_write_timeout(cfg_.timeout);
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace(cfg_.auth_header, cfg_.auth_prefix + token_);
  const std::string body = render_body(prompt, seed);
  std::string last;
  for (int attempt = 0; attempt < cfg_.max_attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(cfg_.backoff_base * (1 << (attempt - 1)));
    auto res = client.Post(path.empty() ? "/" : path, headers, body, "application/json");
    if (!res) {
      last = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      // Body may echo request headers on some gateways; keep it out of messages.
      throw ProtocolError("provider " + cfg_.name + " answered HTTP " + std::to_string(res->status));
    }
    try {
      const auto doc = json::parse(res->body);
      const auto& node = doc.at(json::json_pointer(cfg_.response_path));
      if (!node.is_string()) throw ProtocolError("response field " + cfg_.response_path + " is not a string");
      return node.get<std::string>();
    } catch (const json::exception& e) {
      throw ProtocolError("provider " + cfg_.name + " response lacks " + cfg_.response_path + ": " + e.what());
    }
  }
  throw NetworkError("provider " + cfg_.name + " iteration " + std::to_string(iteration) + " failed after " +
                     std::to_string(cfg_.max_attempts) + " attempt(s): " + last);
}

ReplayProvider::ReplayProvider(const std::string& path, std::string model, std::size_t max_in_flight)
    : model_(std::move(model)), max_in_flight_(std::max<std::size_t>(1, max_in_flight)) {
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      const int it = j.at("iteration").get<int>();
      const auto hash = j.at("request_hash").get<std::string>();
      const bool ok = j.contains("response");
      const auto payload = ok ? j.at("response").get<std::string>() : j.at("error").get<std::string>();
      entries_.emplace(std::make_pair(it, hash), std::make_pair(ok, payload));
    } catch (const json::exception& e) {
      throw DataError(std::string("bad replay entry: ") + e.what(), row);
    }
  }
}

std::string ReplayProvider::complete(const std::string& prompt, int iteration, std::uint64_t) const {
  const auto hash = fnv1a_hex(prompt);
  const auto it = entries_.find({iteration, hash});
  if (it == entries_.end()) {
    throw DataError("replay fixture has no entry for iteration " + std::to_string(iteration) + ", request " + hash);
  }
  if (!it->second.first) throw NetworkError("replayed failure: " + it->second.second);
  return it->second.second;
}

ProviderPtr make_provider(const ProviderConfig& cfg) {
  if (!cfg.replay_path.empty()) return std::make_shared<ReplayProvider>(cfg.replay_path, cfg.model, cfg.max_in_flight);
  return std::make_shared<HttpProvider>(cfg);
}

// ---------------------------------------------------------------------------
// Runs

std::size_t AuditRun::parsed_count() const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const auto& r) { return r.parsed; }));
}

std::size_t AuditRun::failed_iterations() const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const auto& r) { return r.error.has_value(); }));
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

AuditRun run_audit(const LlmProvider& provider, const std::vector<ProbeSentence>& prompts, const Probe& probe,
                   const AuditOptions& opts) {
  if (opts.iterations < 1) throw UsageError("iterations must be positive");
  const std::string batch = build_batch_prompt(prompts);
  const auto clock = opts.clock ? opts.clock : std::function<std::string()>(utc_timestamp);

  struct Outcome {
    std::string response;
    std::string error;
    bool failed = false;
    std::string ts;
  };
  const auto n_iter = static_cast<std::size_t>(opts.iterations);
  std::vector<Outcome> outcomes(n_iter);
  std::vector<std::exception_ptr> fatal(n_iter);
  auto run_one = [&](std::size_t i) {
    const int iteration = static_cast<int>(i) + 1;
    try {
      outcomes[i].response = provider.complete(batch, iteration, opts.seed + i);
    } catch (const NetworkError& e) {
      outcomes[i].failed = true;
      outcomes[i].error = e.what();
    } catch (const ProtocolError& e) {
      outcomes[i].failed = true;
      outcomes[i].error = e.what();
    } catch (...) {
      fatal[i] = std::current_exception();
    }
    outcomes[i].ts = clock();
  };
  const std::size_t workers = std::min(std::max<std::size_t>(1, provider.max_in_flight()), n_iter);
  if (workers == 1) {
    for (std::size_t i = 0; i < n_iter; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n_iter; i = next++) run_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : fatal) {
    if (e) std::rethrow_exception(e);
  }

  AuditRun run;
  run.model = provider.model();
  run.run_id = opts.run_id.empty() ? run.model + "-s" + std::to_string(opts.seed) : opts.run_id;
  run.iterations = opts.iterations;
  std::vector<std::size_t> to_classify;
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < n_iter; ++i) {
    AuditRecord base;
    base.run_id = run.run_id;
    base.model = run.model;
    base.iteration = static_cast<int>(i) + 1;
    base.ts = outcomes[i].ts;
    if (outcomes[i].failed) {
      base.error = outcomes[i].error;
      run.records.push_back(std::move(base));
      continue;
    }
    for (auto& line : parse_response(outcomes[i].response, prompts.size())) {
      AuditRecord r = base;
      if (line.index) {
        r.parsed = true;
        r.prompt_id = prompts[static_cast<std::size_t>(*line.index - 1)].prompt_id;
        r.group = prompts[static_cast<std::size_t>(*line.index - 1)].group;
        r.response = line.text;
        to_classify.push_back(run.records.size());
        texts.push_back(line.text);
      } else {
        r.response = line.raw;
      }
      run.records.push_back(std::move(r));
    }
  }
  if (run.failed_iterations() == n_iter) throw NetworkError("every audit iteration failed for " + run.model);
  if (texts.empty()) throw DataError("no response line could be parsed for " + run.model);
  const auto probs = probe.predict_proba(std::span<const std::string>(texts));
  for (std::size_t k = 0; k < to_classify.size(); ++k) {
    auto& r = run.records[to_classify[k]];
    r.probability = probs[k];
    r.label = probs[k] >= opts.threshold ? 1 : 0;
  }
  return run;
}

std::string record_json(const AuditRecord& r) {
  nlohmann::ordered_json j;
  j["run_id"] = r.run_id;
  j["model"] = r.model;
  j["prompt_id"] = r.prompt_id ? json(*r.prompt_id) : json(nullptr);
  j["iteration"] = r.iteration;
  j["response"] = r.response;
  j["parsed"] = r.parsed;
  j["label"] = r.label ? json(*r.label) : json(nullptr);
  j["probability"] = r.probability ? json(*r.probability) : json(nullptr);
  j["ts"] = r.ts;
  j["group"] = r.group ? json(std::string(to_string(*r.group))) : json(nullptr);
  if (r.error) j["error"] = *r.error;
  return j.dump();
}

std::string run_jsonl(const AuditRun& run) {
  std::string out;
  for (const auto& r : run.records) out += record_json(r) + "\n";
  return out;
}

void write_run_jsonl(const std::string& path, const AuditRun& run) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << run_jsonl(run);
}

AuditRun parse_run_jsonl(std::string_view text) {
  AuditRun run;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t row = 0;
  std::set<int> iterations;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      AuditRecord r;
      r.run_id = j.at("run_id").get<std::string>();
      r.model = j.at("model").get<std::string>();
      if (!j.at("prompt_id").is_null()) r.prompt_id = j.at("prompt_id").get<int>();
      if (j.contains("group") && !j.at("group").is_null()) r.group = parse_stereotype_type(j.at("group").get<std::string>());
      r.iteration = j.at("iteration").get<int>();
      r.response = j.at("response").get<std::string>();
      r.parsed = j.at("parsed").get<bool>();
      if (!j.at("label").is_null()) r.label = j.at("label").get<int>();
      if (!j.at("probability").is_null()) r.probability = j.at("probability").get<double>();
      r.ts = j.at("ts").get<std::string>();
      if (j.contains("error")) r.error = j.at("error").get<std::string>();
      if (r.parsed && (!r.label || !r.probability)) throw DataError("parsed record without label/probability");
      if (run.records.empty()) {
        run.run_id = r.run_id;
        run.model = r.model;
      } else if (r.model != run.model || r.run_id != run.run_id) {
        throw DataError("records from several runs in one file");
      }
      iterations.insert(r.iteration);
      run.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError(std::string("bad run record: ") + e.what(), row);
    } catch (const DataError& e) {
      if (e.row()) throw;
      throw DataError(e.what(), row);
    }
  }
  if (run.records.empty()) throw DataError("run file has no records");
  run.iterations = static_cast<int>(iterations.size());
  return run;
}

AuditRun read_run_jsonl(const std::string& path) { return parse_run_jsonl(read_text(path)); }

// ---------------------------------------------------------------------------
// Prevalence

ModelPrevalence prevalence(const AuditRun& run) {
  ModelPrevalence m;
  m.model = run.model;
  for (auto t : kStereotypeTypes) m.groups[t] = {};
  for (const auto& r : run.records) {
    if (!r.parsed) {
      if (!r.error) ++m.unparsed;
      continue;
    }
    if (!r.group) throw DataError("parsed record without a group");
    const int y = *r.label == 1 ? 1 : 0;
    ++m.n;
    m.stereotypes += static_cast<std::size_t>(y);
    auto& g = m.groups[*r.group];
    ++g.n;
    g.stereotypes += static_cast<std::size_t>(y);
  }
  if (m.n == 0) throw DataError("run " + run.run_id + " has no parsed records");
  m.p = static_cast<double>(m.stereotypes) / static_cast<double>(m.n);
  for (auto& [t, g] : m.groups) {
    if (g.n > 0) g.p = static_cast<double>(g.stereotypes) / static_cast<double>(g.n);
  }
  return m;
}

std::vector<ModelPrevalence> prevalence_by_model(const std::vector<AuditRun>& runs) {
  if (runs.empty()) throw UsageError("no runs to report");
  std::vector<AuditRun> pooled;
  for (const auto& run : runs) {
    auto it = std::find_if(pooled.begin(), pooled.end(), [&](const AuditRun& p) { return p.model == run.model; });
    if (it == pooled.end()) {
      pooled.push_back(run);
    } else {
      it->records.insert(it->records.end(), run.records.begin(), run.records.end());
      it->iterations += run.iterations;
    }
  }
  std::vector<ModelPrevalence> out;
  for (const auto& p : pooled) out.push_back(prevalence(p));
  return out;
}

std::string model_prevalence_csv(const std::vector<ModelPrevalence>& models) {
  std::ostringstream out;
  csv::write_row(out, {"model", "P_M", "n"});
  for (const auto& m : models) csv::write_row(out, {m.model, shortest(m.p), std::to_string(m.n)});
  return out.str();
}

std::string group_prevalence_csv(const std::vector<ModelPrevalence>& models) {
  std::ostringstream out;
  csv::write_row(out, {"model", "group", "P_M", "n_g"});
  for (const auto& m : models) {
    for (const auto& [t, g] : m.groups) {
      csv::write_row(out, {m.model, std::string(to_string(t)), g.p ? shortest(*g.p) : "", std::to_string(g.n)});
    }
  }
  return out.str();
}

namespace {

// Decimal year for "YYYY-MM-DD" or "YYYY-MM"; nullopt when malformed.
std::optional<double> decimal_year(const std::string& date) {
  int y = 0;
  unsigned mo = 1, d = 1;
  char tail = 0;
  const int n = std::sscanf(date.c_str(), "%4d-%2u-%2u%c", &y, &mo, &d, &tail);
  if (n < 2 || n > 3) return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok()) return std::nullopt;
  const auto start = sys_days{year{y} / January / 1};
  const auto next = sys_days{year{y + 1} / January / 1};
  return y + static_cast<double>((sys_days{ymd} - start).count()) / static_cast<double>((next - start).count());
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

}  // namespace

BiasReport emit_report(std::vector<ModelPrevalence> models, const std::map<std::string, std::string>& release_dates,
                       const std::string& out_dir) {
  if (models.empty()) throw UsageError("no models to report");
  BiasReport report;
  for (auto& m : models) {
    if (const auto it = release_dates.find(m.model); it != release_dates.end()) m.release_date = it->second;
  }
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "model_prevalence.csv", model_prevalence_csv(models));
  const bool has_groups = std::any_of(models.begin(), models.end(), [](const auto& m) { return !m.groups.empty(); });
  if (has_groups) write_file(dir / "group_prevalence.csv", group_prevalence_csv(models));

  std::vector<svg::Bar> bars;
  for (const auto& m : models) bars.push_back({m.model, m.p});
  svg::ChartOptions bar_opts;
  bar_opts.title = "Stereotype prevalence by model";
  bar_opts.x_label = "model";
  bar_opts.y_label = "P_M";
  write_file(dir / "prevalence_bar.svg", svg::bar_chart(bars, bar_opts));

  struct Dated {
    double x;
    const ModelPrevalence* m;
  };
  std::vector<Dated> dated;
  for (const auto& m : models) {
    if (m.release_date.empty()) {
      report.warnings.push_back("no release date for " + m.model + "; omitted from the trend chart");
      continue;
    }
    const auto x = decimal_year(m.release_date);
    if (!x) {
      report.warnings.push_back("unreadable release date '" + m.release_date + "' for " + m.model +
                                "; omitted from the trend chart");
      continue;
    }
    dated.push_back({*x, &m});
  }
  std::stable_sort(dated.begin(), dated.end(), [](const Dated& a, const Dated& b) { return a.x < b.x; });
  if (!dated.empty()) {
    svg::Series overall{"overall", {}, {}};
    std::vector<std::string> labels;
    for (const auto& d : dated) {
      overall.x.push_back(d.x);
      overall.y.push_back(d.m->p);
      labels.push_back(d.m->model);
    }
    svg::ChartOptions trend;
    trend.title = "Stereotype prevalence by release date";
    trend.x_label = "release date (year)";
    trend.y_label = "P_M";
    write_file(dir / "prevalence_trend.svg", svg::line_chart({overall}, trend, true, labels));

    if (has_groups) {
      std::vector<svg::Series> series;
      for (auto t : kStereotypeTypes) {
        svg::Series s{std::string(to_string(t)), {}, {}};
        for (const auto& d : dated) {
          const auto it = d.m->groups.find(t);
          if (it != d.m->groups.end() && it->second.p) {
            s.x.push_back(d.x);
            s.y.push_back(*it->second.p);
          }
        }
        if (!s.x.empty()) series.push_back(std::move(s));
      }
      if (!series.empty()) {
        trend.title = "Stereotype prevalence by group and release date";
        write_file(dir / "group_trend.svg", svg::line_chart(series, trend, true));
      }
    }
  }
  report.models = std::move(models);
  return report;
}

std::vector<ModelPrevalence> load_summary_csv(const std::string& path) {
  const auto table = csv::read_file(path);
  const auto cm = table.column("model"), cp = table.column("P_M");
  if (cm == std::string::npos || cp == std::string::npos) throw DataError("summary CSV needs model and P_M columns");
  const auto cn = table.column("n"), cd = table.column("release_date");
  std::vector<ModelPrevalence> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    if (row.size() != table.header.size()) throw DataError("wrong field count", line);
    ModelPrevalence m;
    m.model = trim(row[cm]);
    const std::string p = trim(row[cp]);
    const auto res = std::from_chars(p.data(), p.data() + p.size(), m.p);
    if (res.ec != std::errc() || res.ptr != p.data() + p.size() || !(m.p >= 0.0 && m.p <= 1.0)) {
      throw DataError("P_M '" + p + "' is not a proportion in [0, 1]", line);
    }
    if (cn != std::string::npos && !trim(row[cn]).empty()) m.n = std::stoul(trim(row[cn]));
    if (cd != std::string::npos) m.release_date = trim(row[cd]);
    out.push_back(std::move(m));
  }
  if (out.empty()) throw DataError("summary CSV has no rows");
  return out;
}

}  // namespace stereoscope
