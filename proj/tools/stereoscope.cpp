// Command-line entry point. Every subcommand that takes --out writes a
// manifest.json there echoing the resolved configuration.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "stereoscope/agreement.hpp"
#include "stereoscope/audit.hpp"
#include "stereoscope/classifier.hpp"
#include "stereoscope/conformance.hpp"
#include "stereoscope/corpus.hpp"
#include "stereoscope/csv.hpp"
#include "stereoscope/error.hpp"
#include "stereoscope/evaluate.hpp"
#include "stereoscope/explain.hpp"
#include "stereoscope/filters.hpp"
#include "stereoscope/kde.hpp"
#include "stereoscope/prompts.hpp"
#include "stereoscope/remote_probe.hpp"
#include "stereoscope/svg.hpp"
#include "stereoscope/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stereoscope;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kUsage = 1, kData = 2, kRemote = 3 };

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

std::string fixed(double v, int decimals = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

// Collects the resolved configuration and the files a run produced.
class Manifest {
 public:
  Manifest(std::string command, fs::path out) : out_(std::move(out)) {
    doc_["command"] = std::move(command);
    doc_["version"] = kVersion;
    doc_["started"] = utc_timestamp();
    doc_["config"] = json::object();
    doc_["outputs"] = json::array();
    if (!out_.empty()) fs::create_directories(out_);
  }

  json& config() { return doc_["config"]; }
  const fs::path& dir() const { return out_; }

  fs::path output(const std::string& name, const std::string& content) {
    const fs::path p = out_ / name;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_file(p, content);
    doc_["outputs"].push_back(name);
    return p;
  }

  void set(const std::string& key, json value) { doc_[key] = std::move(value); }

  void finish() {
    if (out_.empty()) return;
    doc_["finished"] = utc_timestamp();
    write_file(out_ / "manifest.json", doc_.dump(2) + "\n");
  }

 private:
  fs::path out_;
  json doc_;
};

// --- probe selection --------------------------------------------------------

struct ProbeArgs {
  std::string model_path;
  std::string url;
  std::string model_id;
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;

  void add(CLI::App* cmd) {
    cmd->add_option("--model", model_path, "Local LR-TFIDF model file (from `train`)");
    cmd->add_option("--url", url, "Base URL of a server implementing POST /predict");
    cmd->add_option("--model-id", model_id, "Model identifier the server must echo, if any");
    cmd->add_option("--batch-size", batch_size, "Texts per /predict request")->capture_default_str();
    cmd->add_option("--max-in-flight", max_in_flight, "Concurrent /predict requests")->capture_default_str();
  }

  ProbePtr make() const {
    if (model_path.empty() == url.empty()) throw UsageError("give exactly one of --model or --url");
    if (!model_path.empty()) return load_model(model_path);
    RemoteProbeOptions o;
    o.batch_size = batch_size;
    o.max_in_flight = max_in_flight;
    return std::make_shared<RemoteProbe>(url, model_id, o);
  }

  json describe() const {
    if (!model_path.empty()) return {{"model", model_path}};
    return {{"url", url}, {"model_id", model_id}, {"batch_size", batch_size}, {"max_in_flight", max_in_flight}};
  }
};

// --- text inputs ---------------------------------------------------------------

struct TextItem {
  std::string id;
  std::string text;
};

// A .csv file uses its "text" column (and "text_id"/"id" when present); any
// other file is one text per non-blank line.
std::vector<TextItem> read_texts(const std::string& path) {
  std::vector<TextItem> out;
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
    const auto table = csv::read_file(path);
    const auto ct = table.column("text");
    if (ct == std::string::npos) throw DataError(path + " has no 'text' column");
    auto ci = table.column("text_id");
    if (ci == std::string::npos) ci = table.column("id");
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& row = table.rows[r];
      if (row.size() != table.header.size()) throw DataError("wrong field count", table.line_numbers[r]);
      out.push_back({ci == std::string::npos ? std::to_string(r + 1) : row[ci], row[ct]});
    }
  } else {
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty()) continue;
      out.push_back({std::to_string(out.size() + 1), line});
    }
  }
  if (out.empty()) throw DataError(path + " contains no texts");
  return out;
}

// --- explainer settings --------------------------------------------------------

struct ExplainArgs {
  std::string method = "shap";
  std::uint64_t seed = 42;
  std::size_t exact_limit = kExactLimit;
  std::size_t samples = 2048;
  std::size_t lime_samples = 1000;
  double kernel_width = 25.0;
  double ridge_lambda = 1e-3;

  void add(CLI::App* cmd, bool with_method) {
    if (with_method) {
      cmd->add_option("--method", method, "shap (exact up to the limit, else sampled), shap_exact, shap_sampled, lime")
          ->check(CLI::IsMember({"shap", "shap_exact", "shap_sampled", "lime"}))
          ->capture_default_str();
    }
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_option("--exact-limit", exact_limit, "Largest token count explained exactly")->capture_default_str();
    cmd->add_option("--samples", samples, "Permutations for sampled SHAP (even)")->capture_default_str();
    cmd->add_option("--lime-samples", lime_samples, "LIME perturbations")->capture_default_str();
    cmd->add_option("--kernel-width", kernel_width, "LIME kernel width")->capture_default_str();
    cmd->add_option("--ridge-lambda", ridge_lambda, "LIME ridge penalty")->capture_default_str();
  }

  json describe() const {
    return {{"method", method},         {"seed", seed},           {"exact_limit", exact_limit},
            {"samples", samples},       {"lime_samples", lime_samples}, {"kernel_width", kernel_width},
            {"ridge_lambda", ridge_lambda}};
  }

  Attribution shap(const Probe& probe, const std::string& text, CoalitionCache& cache, bool force_exact,
                   bool force_sampled) const {
    const std::size_t n = tokenize(text).size();
    if (force_exact || (!force_sampled && n <= exact_limit)) {
      ShapOptions o;
      o.exact_limit = exact_limit;
      return shap_exact(probe, text, &cache, o);
    }
    SampledShapOptions o;
    o.samples = samples;
    o.seed = seed;
    return shap_sampled(probe, text, o, &cache);
  }

  Attribution lime(const Probe& probe, const std::string& text, CoalitionCache& cache) const {
    LimeOptions o;
    o.num_samples = lime_samples;
    o.kernel_width = kernel_width;
    o.ridge_lambda = ridge_lambda;
    o.seed = seed;
    return lime_explain(probe, text, o, &cache);
  }

  Attribution run(const Probe& probe, const std::string& text, CoalitionCache& cache) const {
    if (method == "lime") return lime(probe, text, cache);
    return shap(probe, text, cache, method == "shap_exact", method == "shap_sampled");
  }
};

// --- subcommands ---------------------------------------------------------------

struct TrainArgs {
  std::string data, test, out, penalty = "l1";
  double C = 1.0, test_fraction = 0.2;
  std::uint64_t seed = 42;
  int max_iterations = 1000;
};

int cmd_train(const TrainArgs& a) {
  Manifest m("train", a.out);
  LogisticOptions opts;
  opts.penalty = parse_penalty(a.penalty);
  if (!(a.C > 0.0)) throw UsageError("--C must be positive");
  opts.C = a.C;
  opts.seed = a.seed;
  opts.max_iterations = a.max_iterations;
  m.config() = {{"data", a.data},     {"test", a.test},   {"penalty", a.penalty},
                {"C", a.C},           {"seed", a.seed},   {"test_fraction", a.test_fraction},
                {"max_iterations", a.max_iterations}};

  const auto ds = load_dataset(a.data, format_from_path(a.data));
  LabeledDataset train, test;
  if (a.test.empty()) {
    auto split = stratified_split(ds, {a.test_fraction, a.seed});
    train = std::move(split.train);
    test = std::move(split.test);
  } else {
    train = ds;
    test = load_dataset(a.test, format_from_path(a.test));
  }
  const auto t0 = std::chrono::steady_clock::now();
  auto fit = train_classifier(train, opts);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto report = evaluate(*fit.probe, test);

  m.output("model.json", serialize_model(*fit.probe, opts, fit.trace));
  m.output("eval.json", eval_report_json(report));
  m.set("summary", {{"train_size", train.size()},
                    {"test_size", test.size()},
                    {"vocabulary", fit.probe->vectorizer().size()},
                    {"iterations", fit.trace.iterations},
                    {"converged", fit.trace.converged},
                    {"macro_f1", report.macro_f1}});
  m.finish();

  std::cout << "train " << train.size() << " / test " << test.size() << ", vocabulary "
            << fit.probe->vectorizer().size() << "\n"
            << "optimizer: " << fit.trace.iterations << " iterations, "
            << (fit.trace.converged ? "converged" : "not converged") << ", " << fixed(seconds, 2) << " s\n"
            << "macro F1: " << fixed(report.macro_f1 * 100.0, 1) << "%\n";
  for (const auto& [group, f1] : report.per_group_f1) std::cout << "  " << group << ": " << fixed(f1 * 100.0, 1) << "%\n";
  if (!fit.trace.converged) std::cerr << "warning: optimizer stopped at the iteration limit\n";
  return kOk;
}

int cmd_evaluate(const ProbeArgs& p, const std::string& data, const std::string& out) {
  Manifest m("evaluate", out);
  m.config() = {{"probe", p.describe()}, {"data", data}};
  const auto probe = p.make();
  const auto ds = load_dataset(data, format_from_path(data));
  const auto report = evaluate(*probe, ds);
  const auto text = eval_report_json(report);
  if (!out.empty()) m.output("eval.json", text);
  m.finish();
  std::cout << text;
  return kOk;
}

int cmd_explain(const ProbeArgs& p, const ExplainArgs& e, const std::string& text, const std::string& file,
                const std::string& out, std::size_t top) {
  if (text.empty() == file.empty()) throw UsageError("give exactly one of --text or --file");
  Manifest m("explain", out);
  m.config() = {{"probe", p.describe()}, {"explainer", e.describe()}, {"text", text}, {"file", file}};
  const auto probe = p.make();
  const auto items = file.empty() ? std::vector<TextItem>{{"1", text}} : read_texts(file);
  std::ostringstream ranking_csv;
  csv::write_row(ranking_csv, {"text_id", "rank", "token", "position", "value"});
  for (const auto& item : items) {
    CoalitionCache cache;
    const auto attr = e.run(*probe, item.text, cache);
    const auto ranking = rank_tokens(attr);
    const double full = probe->predict_proba(item.text);
    std::cout << item.text << "\n  p(stereotype) = " << fixed(full) << ", method " << to_string(attr.method)
              << ", base " << fixed(attr.base_value) << "\n  " << format_ranking(ranking, top) << "\n";
    for (std::size_t r = 0; r < ranking.size(); ++r) {
      csv::write_row(ranking_csv, {item.id, std::to_string(r + 1), ranking[r].token, std::to_string(ranking[r].position),
                                   fixed(ranking[r].value, 6)});
    }
    if (!out.empty()) {
      m.output("explain_" + item.id + ".json", attribution_json(attr));
      m.output("explain_" + item.id + ".svg", attribution_svg(attr));
    }
  }
  if (!out.empty()) m.output("ranking.csv", ranking_csv.str());
  m.finish();
  return kOk;
}

int cmd_confidence(const ProbeArgs& p, const ExplainArgs& e, const std::string& file, const std::string& out) {
  Manifest m("confidence", out);
  m.config() = {{"probe", p.describe()}, {"explainer", e.describe()}, {"file", file}};
  const auto probe = p.make();
  const auto items = read_texts(file);
  std::vector<AttributionPair> pairs;
  std::vector<std::string> ids;
  for (const auto& item : items) {
    CoalitionCache cache;
    auto shap = e.shap(*probe, item.text, cache, false, false);
    auto lime = e.lime(*probe, item.text, cache);
    pairs.push_back({std::move(shap), std::move(lime)});
    ids.push_back(item.id);
  }
  const auto scores = score_batch(pairs);
  m.output("scores.csv", scores_csv(scores, ids));
  std::cout << "instances: " << scores.size() << "\n";
  if (scores.size() >= 2) {
    const auto report = aggregate(scores);
    m.output("aggregate.json", aggregate_json(report));
    auto row = [](const char* name, const MetricSummary& s) {
      std::cout << "  " << name << ": " << fixed(s.mean) << " (" << fixed(s.std) << "), K=" << s.k
                << ", z=" << fixed(s.z, 2) << ", p " << format_p(s.p)
                << (s.undefined ? ", undefined " + std::to_string(s.undefined) : std::string()) << "\n";
    };
    row("cosine", report.cosine);
    row("pearson", report.pearson);
    row("jsd", report.jsd);
  } else {
    std::cerr << "warning: one instance; aggregate statistics need at least two\n";
  }
  m.finish();
  return kOk;
}

int cmd_eda(const std::string& data, const std::string& out, std::size_t grid_points, double bandwidth) {
  Manifest m("eda", out);
  m.config() = {{"data", data}, {"grid_points", grid_points}, {"bandwidth", bandwidth > 0 ? json(bandwidth) : json()}};
  const auto ds = load_dataset(data, format_from_path(data));

  std::ostringstream dist;
  csv::write_row(dist, {"grouping", "level", "count", "proportion"});
  for (const auto& r : distribution_report(ds)) {
    csv::write_row(dist, {r.grouping, r.level, std::to_string(r.count), fixed(r.proportion, 6)});
  }
  m.output("distribution.csv", dist.str());

  const auto lengths = text_lengths(ds);
  const double hi = *std::max_element(lengths.begin(), lengths.end());
  const auto grid = linear_grid(0.0, hi * 1.1 + 1.0, grid_points);
  std::vector<std::pair<std::string, std::vector<DensityPoint>>> curves;
  auto add_curve = [&](const std::string& name, const LabeledDataset& subset) {
    try {
      curves.emplace_back(name, kde_text_length(subset, bandwidth > 0 ? std::optional(bandwidth) : std::nullopt, grid));
    } catch (const DataError& err) {
      std::cerr << "warning: no density for " << name << ": " << err.what() << "\n";
    }
  };
  add_curve("all", ds);
  for (auto c : {Category::stereotype, Category::neutral, Category::unrelated}) {
    LabeledDataset subset;
    for (const auto& i : ds.instances) {
      if (i.category == c) subset.instances.push_back(i);
    }
    if (!subset.empty()) add_curve(std::string(to_string(c)), subset);
  }
  std::ostringstream kde;
  csv::Row header{"length"};
  for (const auto& [name, _] : curves) header.push_back(name);
  csv::write_row(kde, header);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    csv::Row row{fixed(grid[g], 4)};
    for (const auto& [_, pts] : curves) row.push_back(fixed(pts[g].density, 8));
    csv::write_row(kde, row);
  }
  m.output("kde.csv", kde.str());
  std::vector<svg::Series> series;
  for (const auto& [name, pts] : curves) {
    svg::Series s{name, {}, {}};
    for (const auto& pt : pts) {
      s.x.push_back(pt.x);
      s.y.push_back(pt.density);
    }
    series.push_back(std::move(s));
  }
  svg::ChartOptions o;
  o.title = "Text length density";
  o.x_label = "characters";
  o.y_label = "density";
  if (!series.empty()) m.output("kde.svg", svg::line_chart(series, o));
  m.finish();
  std::cout << "instances: " << ds.size() << "\n";
  for (const auto& r : distribution_report(ds)) {
    std::cout << "  " << r.grouping << "/" << r.level << ": " << r.count << " (" << fixed(r.proportion * 100, 1) << "%)\n";
  }
  return kOk;
}

int cmd_filter(const std::string& which, const std::string& data, const std::string& out) {
  Manifest m("filter " + which, out);
  m.config() = {{"dataset", which}, {"data", data}};
  FilterConfig cfg;
  cfg.validate();
  std::vector<Removal> removals;
  std::size_t kept = 0;
  if (which == "winoqueer") {
    const auto ds = load_dataset(data, format_from_path(data));
    const auto res = filter_winoqueer(ds, cfg);
    kept = res.kept.size();
    removals = res.removals();
    m.output("kept.csv", format_dataset_csv(res.kept));
  } else {
    const auto res = filter_seegull(load_seegull_csv(data), cfg);
    kept = res.kept.size();
    removals = res.removals;
    std::ostringstream k;
    csv::write_row(k, {"phrase"});
    for (const auto& p : res.kept) csv::write_row(k, {p});
    m.output("kept.csv", k.str());
  }
  m.output("removals.csv", format_removals_csv(removals));
  std::map<std::string, std::size_t> counts;
  for (const auto& r : removals) ++counts[std::string(to_string(r.reason))];
  json jc = counts;
  m.set("summary", {{"kept", kept}, {"removed", removals.size()}, {"reasons", jc}});
  m.finish();
  std::cout << "kept " << kept << ", removed " << removals.size() << "\n";
  for (const auto& [reason, n] : counts) std::cout << "  " << reason << ": " << n << "\n";
  return kOk;
}

struct AuditArgs {
  std::string config, prompts = "data/llm_prompts.csv", out;
  std::vector<std::string> providers;
  int iterations = 30;
  std::uint64_t seed = 42;
  bool skip_neutrality = false;
};

int cmd_audit(const ProbeArgs& p, const AuditArgs& a) {
  Manifest m("audit", a.out);
  const auto configs = load_provider_configs(a.config);
  std::vector<std::string> names = a.providers;
  if (names.empty()) {
    for (const auto& [name, _] : configs) names.push_back(name);
  }
  json provider_desc = json::array();
  for (const auto& n : names) {
    const auto it = configs.find(n);
    if (it == configs.end()) throw UsageError("provider '" + n + "' is not in " + a.config);
    // Names only: tokens stay in the environment.
    provider_desc.push_back({{"name", n},
                             {"model", it->second.model},
                             {"endpoint", it->second.endpoint},
                             {"replay_path", it->second.replay_path},
                             {"auth_env", it->second.auth_env},
                             {"max_in_flight", it->second.max_in_flight},
                             {"max_attempts", it->second.max_attempts}});
  }
  m.config() = {{"probe", p.describe()}, {"providers_config", a.config}, {"providers", provider_desc},
                {"prompts", a.prompts}, {"iterations", a.iterations},   {"seed", a.seed},
                {"skip_neutrality", a.skip_neutrality}};

  const auto probe = p.make();
  const auto set = load_prompts(a.prompts);
  for (const auto& w : set.warnings) std::cerr << "warning: " << w << "\n";
  if (set.prompts.size() != 35) std::cerr << "warning: " << set.prompts.size() << " prompts, the protocol uses 35\n";
  if (a.skip_neutrality) {
    std::cerr << "warning: stem neutrality not checked\n";
  } else {
    check_stem_neutrality(set.prompts, *probe);
  }

  std::vector<AuditRun> runs;
  std::map<std::string, std::string> dates;
  for (const auto& n : names) {
    const auto& cfg = configs.at(n);
    const auto provider = make_provider(cfg);
    AuditOptions o;
    o.iterations = a.iterations;
    o.seed = a.seed;
    o.run_id = n + "-s" + std::to_string(a.seed);
    auto run = run_audit(*provider, set.prompts, *probe, o);
    m.output("runs/" + n + ".jsonl", run_jsonl(run));
    std::cout << n << ": " << run.parsed_count() << " parsed records, " << run.failed_iterations()
              << " failed iterations\n";
    if (!cfg.release_date.empty()) dates[cfg.model] = cfg.release_date;
    runs.push_back(std::move(run));
  }
  const auto report = emit_report(prevalence_by_model(runs), dates, a.out);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& mp : report.models) {
    std::cout << "  " << mp.model << ": P_M = " << fixed(mp.p) << " (n=" << mp.n << ", unparsed " << mp.unparsed << ")\n";
  }
  m.finish();
  return kOk;
}

std::map<std::string, std::string> read_release_dates(const std::string& config, const std::string& csv_path) {
  std::map<std::string, std::string> dates;
  if (!config.empty()) {
    for (const auto& [_, c] : load_provider_configs(config)) {
      if (!c.release_date.empty()) dates[c.model] = c.release_date;
    }
  }
  if (!csv_path.empty()) {
    const auto t = csv::read_file(csv_path);
    const auto cm = t.column("model"), cd = t.column("release_date");
    if (cm == std::string::npos || cd == std::string::npos) throw DataError(csv_path + " needs model,release_date");
    for (const auto& row : t.rows) dates[row.at(cm)] = row.at(cd);
  }
  return dates;
}

int cmd_report(const std::vector<std::string>& runs_paths, const std::string& summary, const std::string& config,
               const std::string& dates_csv, const std::string& out) {
  if (runs_paths.empty() == summary.empty()) throw UsageError("give either --runs or --summary");
  Manifest m("report", out);
  m.config() = {{"runs", runs_paths}, {"summary", summary}, {"providers_config", config}, {"release_dates", dates_csv}};
  std::vector<ModelPrevalence> models;
  if (!summary.empty()) {
    models = load_summary_csv(summary);
  } else {
    std::vector<AuditRun> runs;
    for (const auto& p : runs_paths) runs.push_back(read_run_jsonl(p));
    models = prevalence_by_model(runs);
  }
  const auto report = emit_report(models, read_release_dates(config, dates_csv), out);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& mp : report.models) std::cout << mp.model << ": P_M = " << fixed(mp.p) << "\n";
  json outputs = json::array();
  for (const auto* f : {"model_prevalence.csv", "group_prevalence.csv", "prevalence_bar.svg", "prevalence_trend.svg",
                        "group_trend.svg"}) {
    if (fs::exists(fs::path(out) / f)) outputs.push_back(f);
  }
  m.set("outputs", outputs);
  m.finish();
  return kOk;
}

std::vector<double> parse_logits(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("bad logit '" + item + "'");
    }
  }
  if (out.size() < 2) throw UsageError("--logits needs at least two values");
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Stereotype classification, explanation and LLM audit toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // train
  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train the LR-TFIDF classifier and evaluate it on a held-out split");
  c_train->add_option("--data", train.data, "Dataset (.csv or .jsonl)")->required()->check(CLI::ExistingFile);
  c_train->add_option("--test", train.test, "Separate test set; skips the split")->check(CLI::ExistingFile);
  c_train->add_option("--out", train.out, "Output directory")->required();
  c_train->add_option("--penalty", train.penalty, "none, l1 or l2")
      ->check(CLI::IsMember({"none", "l1", "l2"}))
      ->capture_default_str();
  c_train->add_option("--C", train.C, "Inverse regularisation strength")->capture_default_str();
  c_train->add_option("--seed", train.seed, "Random seed")->capture_default_str();
  c_train->add_option("--test-fraction", train.test_fraction, "Held-out fraction")->capture_default_str();
  c_train->add_option("--max-iter", train.max_iterations, "Optimizer iteration limit")->capture_default_str();

  // evaluate
  ProbeArgs eval_probe;
  std::string eval_data, eval_out;
  auto* c_eval = app.add_subcommand("evaluate", "Macro F1 of a probe on a labelled dataset");
  eval_probe.add(c_eval);
  c_eval->add_option("--data", eval_data, "Dataset (.csv or .jsonl)")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--out", eval_out, "Output directory");

  // explain
  ProbeArgs ex_probe;
  ExplainArgs ex;
  std::string ex_text, ex_file, ex_out;
  std::size_t ex_top = 0;
  auto* c_explain = app.add_subcommand("explain", "Token attributions for one or more texts");
  ex_probe.add(c_explain);
  ex.add(c_explain, true);
  c_explain->add_option("--text", ex_text, "Text to explain");
  c_explain->add_option("--file", ex_file, "Texts to explain (.csv with a text column, or one per line)")
      ->check(CLI::ExistingFile);
  c_explain->add_option("--top", ex_top, "Tokens shown in the ranking (0 = all)")->capture_default_str();
  c_explain->add_option("--out", ex_out, "Output directory");

  // confidence
  ProbeArgs cf_probe;
  ExplainArgs cf;
  std::string cf_file, cf_out;
  auto* c_conf = app.add_subcommand("confidence", "SHAP/LIME agreement scores and their significance");
  cf_probe.add(c_conf);
  cf.add(c_conf, false);
  c_conf->add_option("--file", cf_file, "Texts (.csv with a text column, or one per line)")
      ->required()
      ->check(CLI::ExistingFile);
  c_conf->add_option("--out", cf_out, "Output directory")->required();

  // eda
  std::string eda_data, eda_out;
  std::size_t eda_grid = 200;
  double eda_bw = 0.0;
  auto* c_eda = app.add_subcommand("eda", "Dataset distributions and text-length densities");
  c_eda->add_option("--data", eda_data, "Dataset (.csv or .jsonl)")->required()->check(CLI::ExistingFile);
  c_eda->add_option("--out", eda_out, "Output directory")->required();
  c_eda->add_option("--grid-points", eda_grid, "Density grid size")->capture_default_str();
  c_eda->add_option("--bandwidth", eda_bw, "Kernel bandwidth (default: Silverman's rule)");

  // filter
  std::string flt_which, flt_data, flt_out;
  auto* c_filter = app.add_subcommand("filter", "Apply the WinoQueer or SeeGULL selection rules");
  c_filter->add_option("dataset", flt_which, "winoqueer or seegull")
      ->required()
      ->check(CLI::IsMember({"winoqueer", "seegull"}));
  c_filter->add_option("--data", flt_data, "Input CSV")->required()->check(CLI::ExistingFile);
  c_filter->add_option("--out", flt_out, "Output directory")->required();

  // audit
  ProbeArgs au_probe;
  AuditArgs au;
  auto* c_audit = app.add_subcommand("audit", "Measure stereotype prevalence in LLM continuations");
  au_probe.add(c_audit);
  c_audit->add_option("--config", au.config, "Provider config (TOML)")->required()->check(CLI::ExistingFile);
  c_audit->add_option("--provider", au.providers, "Provider names to run (default: all)");
  c_audit->add_option("--prompts", au.prompts, "Prompt table")->capture_default_str()->check(CLI::ExistingFile);
  c_audit->add_option("--iterations", au.iterations, "Iterations per provider")->capture_default_str();
  c_audit->add_option("--seed", au.seed, "Random seed")->capture_default_str();
  c_audit->add_option("--out", au.out, "Output directory")->required();
  c_audit->add_flag("--skip-neutrality-check", au.skip_neutrality, "Do not require neutral stems");

  // report
  std::vector<std::string> rp_runs;
  std::string rp_summary, rp_config, rp_dates, rp_out;
  auto* c_report = app.add_subcommand("report", "Prevalence tables and charts from audit runs or a summary table");
  c_report->add_option("--runs", rp_runs, "Run files (.jsonl)")->check(CLI::ExistingFile);
  c_report->add_option("--summary", rp_summary, "Summary CSV: model,P_M[,n][,release_date]")->check(CLI::ExistingFile);
  c_report->add_option("--config", rp_config, "Provider config supplying release dates")->check(CLI::ExistingFile);
  c_report->add_option("--release-dates", rp_dates, "CSV model,release_date")->check(CLI::ExistingFile);
  c_report->add_option("--out", rp_out, "Output directory")->required();

  // conformance
  auto* c_conf_suite = app.add_subcommand("conformance", "Golden suite for /predict servers");
  c_conf_suite->require_subcommand(1);
  ConformanceSpec gen;
  std::string gen_out, gen_logits = "0.25,1.5";
  auto* c_gen = c_conf_suite->add_subcommand("generate", "Write the golden JSONL");
  c_gen->add_option("--out", gen_out, "Output file")->required();
  c_gen->add_option("--logits", gen_logits, "Stub logits, comma separated")->capture_default_str();
  c_gen->add_option("--label-index", gen.label_index, "Stereotype class index")->capture_default_str();
  c_gen->add_option("--max-batch", gen.max_batch, "Largest batch")->capture_default_str();
  c_gen->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  std::string chk_golden, chk_url;
  auto* c_chk = c_conf_suite->add_subcommand("check", "Replay the golden JSONL against a server");
  c_chk->add_option("--golden", chk_golden, "Golden file")->required()->check(CLI::ExistingFile);
  c_chk->add_option("--url", chk_url, "Server base URL")->required();

  // augment-prompt
  std::string ap_template, ap_items_file;
  std::vector<std::string> ap_items;
  auto* c_aug = app.add_subcommand("augment-prompt", "Render a dataset-augmentation prompt");
  c_aug->add_option("--template", ap_template, "winoqueer, seegull_sentences or seegull_neutral_unrelated")->required();
  c_aug->add_option("--item", ap_items, "Batch item (repeatable)");
  c_aug->add_option("--items", ap_items_file, "File with one batch item per line")->check(CLI::ExistingFile);

  // emissions
  double em_rate = 0.0, em_seconds = 0.0;
  auto* c_em = app.add_subcommand("emissions", "CO2 estimate from an emission rate and a runtime");
  c_em->add_option("--rate", em_rate, "Grams of CO2 per second")->required();
  c_em->add_option("--seconds", em_seconds, "Runtime in seconds")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*c_train) return cmd_train(train);
  if (*c_eval) return cmd_evaluate(eval_probe, eval_data, eval_out);
  if (*c_explain) return cmd_explain(ex_probe, ex, ex_text, ex_file, ex_out, ex_top);
  if (*c_conf) return cmd_confidence(cf_probe, cf, cf_file, cf_out);
  if (*c_eda) return cmd_eda(eda_data, eda_out, eda_grid, eda_bw);
  if (*c_filter) return cmd_filter(flt_which, flt_data, flt_out);
  if (*c_audit) return cmd_audit(au_probe, au);
  if (*c_report) return cmd_report(rp_runs, rp_summary, rp_config, rp_dates, rp_out);
  if (*c_gen) {
    gen.logits = parse_logits(gen_logits);
    write_file(gen_out, generate_conformance(gen));
    std::cout << "wrote " << gen_out << " (p = " << stub_probability(gen.logits, gen.label_index) << ")\n";
    return kOk;
  }
  if (*c_chk) {
    const auto res = check_conformance(read_file(chk_golden), chk_url);
    for (const auto& f : res.failures) std::cout << "FAIL " << f << "\n";
    std::cout << res.passed << "/" << res.cases << " cases passed\n";
    return res.ok() ? kOk : kRemote;
  }
  if (*c_aug) {
    std::vector<std::string> items = ap_items;
    if (!ap_items_file.empty()) {
      std::istringstream in(read_file(ap_items_file));
      std::string line;
      while (std::getline(in, line)) {
        if (!trim(line).empty()) items.push_back(trim(line));
      }
    }
    std::cout << render_augmentation_prompt(parse_augmentation_template(ap_template), items) << "\n";
    return kOk;
  }
  if (*c_em) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", estimate_emissions(em_rate, em_seconds));
    std::cout << buf << " g\n";
    return kOk;
  }
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NetworkError& e) {
    std::cerr << "remote error: " << e.what() << "\n";
    return kRemote;
  } catch (const ProtocolError& e) {
    std::cerr << "remote error: " << e.what() << "\n";
    return kRemote;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
}
