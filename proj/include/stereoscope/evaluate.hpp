#pragma once

#include <array>
#include <map>
#include <span>
#include <string>

#include "stereoscope/corpus.hpp"
#include "stereoscope/probe.hpp"

namespace stereoscope {

inline constexpr double kDecisionThreshold = 0.5;

// confusion[actual][predicted]
using Confusion = std::array<std::array<std::size_t, 2>, 2>;

Confusion confusion_matrix(std::span<const int> actual, std::span<const int> predicted);

// F1 of one class; 0 whenever precision or recall is 0/0.
double class_f1(const Confusion& c, int cls);
double macro_f1(const Confusion& c);

struct EvalReport {
  double macro_f1 = 0.0;
  std::array<double, 2> per_class_f1{};
  std::map<std::string, double> per_group_f1;   // macro F1 per stereotype_type
  std::map<std::size_t, double> per_length_f1;  // macro F1 per character length, >= 10 samples
  Confusion confusion{};
  std::size_t test_size = 0;
};

inline constexpr std::size_t kMinSamplesPerLength = 10;

EvalReport evaluate_predictions(const LabeledDataset& test, std::span<const double> probabilities,
                                double threshold = kDecisionThreshold);

// Prediction 1 iff probability >= threshold.
EvalReport evaluate(const Probe& probe, const LabeledDataset& test, double threshold = kDecisionThreshold);

std::string eval_report_json(const EvalReport& r);

}  // namespace stereoscope
