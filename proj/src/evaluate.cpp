#include "stereoscope/evaluate.hpp"

#include <json.hpp>

#include "stereoscope/error.hpp"
#include "stereoscope/text.hpp"

namespace stereoscope {

Confusion confusion_matrix(std::span<const int> actual, std::span<const int> predicted) {
  if (actual.size() != predicted.size()) throw UsageError("label vectors differ in length");
  Confusion c{};
  for (std::size_t i = 0; i < actual.size(); ++i) ++c[actual[i] ? 1 : 0][predicted[i] ? 1 : 0];
  return c;
}

double class_f1(const Confusion& c, int cls) {
  const auto k = static_cast<std::size_t>(cls);
  const auto o = 1 - k;
  const double tp = static_cast<double>(c[k][k]);
  const double fp = static_cast<double>(c[o][k]);
  const double fn = static_cast<double>(c[k][o]);
  if (tp + fp == 0.0 || tp + fn == 0.0) return 0.0;
  const double precision = tp / (tp + fp);
  const double recall = tp / (tp + fn);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double macro_f1(const Confusion& c) { return (class_f1(c, 0) + class_f1(c, 1)) / 2.0; }

EvalReport evaluate_predictions(const LabeledDataset& test, std::span<const double> probabilities, double threshold) {
  if (test.empty()) throw DataError("test set is empty");
  if (probabilities.size() != test.size()) throw UsageError("prediction count does not match test size");
  std::vector<int> actual, predicted;
  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> groups;
  std::map<std::size_t, std::pair<std::vector<int>, std::vector<int>>> lengths;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& inst = test.instances[i];
    const int a = inst.binary_label();
    const int p = probabilities[i] >= threshold ? 1 : 0;
    actual.push_back(a);
    predicted.push_back(p);
    auto& g = groups[std::string(to_string(inst.stereotype_type))];
    g.first.push_back(a);
    g.second.push_back(p);
    auto& l = lengths[scalar_count(inst.text)];
    l.first.push_back(a);
    l.second.push_back(p);
  }
  EvalReport r;
  r.test_size = test.size();
  r.confusion = confusion_matrix(actual, predicted);
  r.per_class_f1 = {class_f1(r.confusion, 0), class_f1(r.confusion, 1)};
  r.macro_f1 = (r.per_class_f1[0] + r.per_class_f1[1]) / 2.0;
  for (const auto& [name, v] : groups) r.per_group_f1[name] = macro_f1(confusion_matrix(v.first, v.second));
  for (const auto& [len, v] : lengths) {
    if (v.first.size() >= kMinSamplesPerLength) r.per_length_f1[len] = macro_f1(confusion_matrix(v.first, v.second));
  }
  return r;
}

EvalReport evaluate(const Probe& probe, const LabeledDataset& test, double threshold) {
  if (test.empty()) throw DataError("test set is empty");
  std::vector<std::string> texts;
  texts.reserve(test.size());
  for (const auto& i : test.instances) texts.push_back(i.text);
  const auto probs = probe.predict_proba(std::span<const std::string>(texts));
  return evaluate_predictions(test, probs, threshold);
}

std::string eval_report_json(const EvalReport& r) {
  nlohmann::json j;
  j["macro_f1"] = r.macro_f1;
  j["per_class_f1"] = {r.per_class_f1[0], r.per_class_f1[1]};
  j["per_group_f1"] = r.per_group_f1;
  nlohmann::json lengths = nlohmann::json::object();
  for (const auto& [len, f1] : r.per_length_f1) lengths[std::to_string(len)] = f1;
  j["per_length_f1"] = lengths;
  j["confusion"] = {{"tn", r.confusion[0][0]}, {"fp", r.confusion[0][1]}, {"fn", r.confusion[1][0]},
                    {"tp", r.confusion[1][1]}};
  j["test_size"] = r.test_size;
  return j.dump(2) + "\n";
}

}  // namespace stereoscope
