#include "stereoscope/classifier.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "stereoscope/error.hpp"

namespace stereoscope {

namespace {

using nlohmann::json;

struct Decimal {
  unsigned __int128 digits = 0;
  int exponent = 0;
};

// Shortest round-trip decimal form of a finite non-negative double.
Decimal to_decimal(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
  const std::string s(buf, res.ptr);
  Decimal d;
  const auto e = s.find('e');
  int frac_digits = 0;
  bool after_point = false;
  for (std::size_t i = 0; i < e; ++i) {
    if (s[i] == '.') {
      after_point = true;
      continue;
    }
    d.digits = d.digits * 10 + static_cast<unsigned>(s[i] - '0');
    if (after_point) ++frac_digits;
  }
  d.exponent = std::stoi(s.substr(e + 1)) - frac_digits;
  return d;
}

std::string to_string_u128(unsigned __int128 v) {
  if (v == 0) return "0";
  std::string out;
  while (v > 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return {out.rbegin(), out.rend()};
}

}  // namespace

LogisticTfidfProbe::LogisticTfidfProbe(TfidfVectorizer vectorizer, LogisticModel model, std::string id)
    : vectorizer_(std::move(vectorizer)), model_(std::move(model)), id_(std::move(id)) {
  if (model_.weights.size() != vectorizer_.size()) {
    throw DataError("model has " + std::to_string(model_.weights.size()) + " weights for a vocabulary of " +
                    std::to_string(vectorizer_.size()));
  }
}

std::vector<double> LogisticTfidfProbe::predict_proba(std::span<const std::string> texts) const {
  const SparseMatrix X = vectorizer_.transform(texts, exec_);
  return model_.predict_proba(X, exec_);
}

ClassifierTraining train_classifier(const LabeledDataset& train, const LogisticOptions& opts) {
  if (train.empty()) throw DataError("training set is empty");
  std::vector<std::string> docs;
  std::vector<int> y;
  docs.reserve(train.size());
  for (const auto& i : train.instances) {
    docs.push_back(i.text);
    y.push_back(i.binary_label());
  }
  TfidfVectorizer vec = TfidfVectorizer::fit(docs);
  const SparseMatrix X = vec.transform(docs, opts.exec);
  TrainResult fit = train_logistic(X, y, opts);
  ClassifierTraining out;
  out.probe = std::make_shared<LogisticTfidfProbe>(std::move(vec), std::move(fit.model));
  out.trace = std::move(fit.trace);
  return out;
}

std::string serialize_model(const LogisticTfidfProbe& probe, const LogisticOptions& opts, const TrainingTrace& trace) {
  json doc;
  doc["format_version"] = 1;
  doc["kind"] = "lr-tfidf";
  doc["vectorizer"] = {
      {"vocabulary", probe.vectorizer().vocabulary()},
      {"idf", probe.vectorizer().idf()},
      {"doc_count", probe.vectorizer().doc_count()},
  };
  doc["model"] = {
      {"weights", probe.model().weights},
      {"bias", probe.model().bias},
      {"penalty", std::string(to_string(probe.model().penalty))},
      {"C", probe.model().C},
  };
  doc["training"] = {
      {"seed", opts.seed},
      {"max_iterations", opts.max_iterations},
      {"tolerance", opts.tolerance},
      {"iterations", trace.iterations},
      {"converged", trace.converged},
      {"gradient_norm", trace.gradient_norm},
  };
  return doc.dump() + "\n";
}

void save_model(const std::string& path, const LogisticTfidfProbe& probe, const LogisticOptions& opts,
                const TrainingTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << serialize_model(probe, opts, trace);
}

std::shared_ptr<LogisticTfidfProbe> parse_model(const std::string& json_text, std::string id) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != 1) throw DataError("unsupported model format_version");
    const auto& v = doc.at("vectorizer");
    TfidfVectorizer vec(v.at("vocabulary").get<std::vector<std::string>>(), v.at("idf").get<std::vector<double>>(),
                        v.at("doc_count").get<std::size_t>());
    const auto& m = doc.at("model");
    LogisticModel model;
    model.weights = m.at("weights").get<std::vector<double>>();
    model.bias = m.at("bias").get<double>();
    model.penalty = parse_penalty(m.at("penalty").get<std::string>());
    model.C = m.at("C").get<double>();
    return std::make_shared<LogisticTfidfProbe>(std::move(vec), std::move(model), std::move(id));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

std::shared_ptr<LogisticTfidfProbe> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string id = path;
  const auto slash = id.find_last_of('/');
  if (slash != std::string::npos) id = id.substr(slash + 1);
  return parse_model(buf.str(), "lr-tfidf:" + id);
}

double estimate_emissions(double co2_grams_per_second, double runtime_seconds) {
  if (!std::isfinite(co2_grams_per_second) || !std::isfinite(runtime_seconds)) {
    throw UsageError("emission inputs must be finite");
  }
  if (co2_grams_per_second < 0.0 || runtime_seconds < 0.0) throw UsageError("emission inputs must be non-negative");
  if (co2_grams_per_second == 0.0 || runtime_seconds == 0.0) return 0.0;
  const Decimal a = to_decimal(co2_grams_per_second);
  const Decimal b = to_decimal(runtime_seconds);
  const std::string text = to_string_u128(a.digits * b.digits) + "e" + std::to_string(a.exponent + b.exponent);
  double out = 0.0;
  std::from_chars(text.data(), text.data() + text.size(), out);
  return out;
}

}  // namespace stereoscope
