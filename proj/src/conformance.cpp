#include "stereoscope/conformance.hpp"

#include <charconv>
#include <cmath>
#include <httplib.h>
#include <json.hpp>
#include <sstream>

#include "stereoscope/error.hpp"
#include "stereoscope/remote_probe.hpp"
#include "stereoscope/rng.hpp"

namespace stereoscope {

using nlohmann::json;

namespace {

constexpr const char* kWords[] = {"the",   "people", "from",  "that",   "city",   "are",  "always", "very",
                                  "quiet", "nurse",  "was",   "kind",   "to",     "her",  "friends", "engineer",
                                  "likes", "maths",  "my",    "friend", "cooked", "rice", "every",  "morning"};

// Texts that tend to break JSON handling or tokenizers.
const std::vector<std::string> kAwkward = {
    "",
    "Zoë's café is naïve",
    "quote \" and backslash \\ inside",
    "line\nbreak\tand tab",
    "日本語の文",
    "emoji \U0001F600 here",
};

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

double stub_probability(const std::vector<double>& logits, std::size_t index) {
  if (index >= logits.size()) throw UsageError("label index outside the logit vector");
  double denom = 0.0;
  for (double l : logits) denom += std::exp(l - logits[index]);
  return 1.0 / denom;
}

std::string format_predict_response(const std::vector<double>& probabilities) {
  std::string out = "{\"probabilities\":[";
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (i) out += ",";
    out += shortest(probabilities[i]);
  }
  return out + "]}";
}

std::string generate_conformance(const ConformanceSpec& spec) {
  if (spec.max_batch == 0) throw UsageError("max_batch must be positive");
  const double p = stub_probability(spec.logits, spec.label_index);
  std::ostringstream out;
  out << json{{"kind", "header"},
              {"format_version", 1},
              {"logits", spec.logits},
              {"label_index", spec.label_index},
              {"probability", p},
              {"tolerance", spec.tolerance},
              {"seed", spec.seed}}
             .dump()
      << "\n";
  out << json{{"kind", "health"}, {"path", "/healthz"}, {"expect_status", 200}}.dump() << "\n";

  Rng rng(spec.seed);
  std::size_t awkward = 0;
  for (std::size_t b = 1; b <= spec.max_batch; ++b) {
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < b; ++i) {
      if (i == b / 2 && awkward < kAwkward.size()) {
        texts.push_back(kAwkward[awkward++]);
        continue;
      }
      const auto len = 1 + rng.uniform_index(12);
      std::string t;
      for (std::uint64_t w = 0; w < len; ++w) {
        if (w) t += ' ';
        t += kWords[rng.uniform_index(std::size(kWords))];
      }
      texts.push_back(std::move(t));
    }
    const std::vector<double> probs(b, p);
    json c;
    c["kind"] = "case";
    c["id"] = b;
    c["request"] = {{"texts", texts}};
    c["expect_status"] = 200;
    c["response_body"] = format_predict_response(probs);
    out << c.dump() << "\n";
  }

  const std::vector<std::pair<std::string, std::string>> bad = {
      {"not_json", "{\"texts\": ["},
      {"missing_texts", "{\"inputs\": [\"a\"]}"},
      {"texts_not_list", "{\"texts\": \"a\"}"},
      {"non_string_text", "{\"texts\": [\"a\", 3]}"},
  };
  for (const auto& [id, body] : bad) {
    out << json{{"kind", "error_case"}, {"id", id}, {"request_body", body}, {"expect_status", 400}}.dump() << "\n";
  }
  return out.str();
}

ConformanceResult check_conformance(const std::string& golden_jsonl, const std::string& url) {
  const auto [base, prefix] = split_url(url);
  httplib::Client client(base);
  client.set_read_timeout(std::chrono::seconds(60));
  ConformanceResult result;
  double tolerance = 1e-6;
  std::istringstream in(golden_jsonl);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json c;
    try {
      c = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(std::string("bad golden line: ") + e.what());
    }
    const auto kind = c.value("kind", "");
    if (kind == "header") {
      tolerance = c.value("tolerance", tolerance);
      continue;
    }
    ++result.cases;
    const std::string label = kind + " " + (c.contains("id") ? c["id"].dump() : c.value("path", ""));
    auto fail = [&](const std::string& why) { result.failures.push_back(label + ": " + why); };
    const int expect = c.value("expect_status", 200);
    httplib::Result res;
    if (kind == "health") {
      res = client.Get(prefix + c.value("path", "/healthz"));
    } else if (kind == "case") {
      res = client.Post(prefix + "/predict", c["request"].dump(), "application/json");
    } else if (kind == "error_case") {
      res = client.Post(prefix + "/predict", c.value("request_body", ""), "application/json");
    } else {
      fail("unknown case kind");
      continue;
    }
    if (!res) {
      fail("transport error: " + httplib::to_string(res.error()));
      continue;
    }
    if (res->status != expect) {
      fail("HTTP " + std::to_string(res->status) + ", expected " + std::to_string(expect));
      continue;
    }
    if (kind == "case") {
      try {
        const auto n = c["request"]["texts"].size();
        const auto got = parse_predict_response(res->body, n);
        const auto want = json::parse(c["response_body"].get<std::string>())["probabilities"].get<std::vector<double>>();
        bool same = true;
        for (std::size_t i = 0; i < n; ++i) same = same && std::abs(got[i] - want[i]) <= tolerance;
        if (!same) {
          fail("probabilities differ from golden beyond " + shortest(tolerance));
          continue;
        }
      } catch (const Error& e) {
        fail(e.what());
        continue;
      }
    }
    ++result.passed;
  }
  return result;
}

}  // namespace stereoscope
