#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stereoscope/explain.hpp"
#include "stereoscope/parallel.hpp"

namespace stereoscope {

// Undefined (nullopt) when either vector has zero norm.
std::optional<double> cosine_similarity(std::span<const double> phi, std::span<const double> beta);

// Undefined for fewer than two entries or zero variance in either vector.
std::optional<double> pearson_correlation(std::span<const double> phi, std::span<const double> beta);

struct JsdResult {
  double value = 0.0;
  bool phi_uniform = false;   // phi had zero mass after the shift
  bool beta_uniform = false;
};

// Square root of the base-2 Jensen-Shannon divergence between the two vectors
// after shifting each by |min| and normalising. Always in [0, 1].
JsdResult js_divergence(std::span<const double> phi, std::span<const double> beta);

// Each vector shifted by the absolute value of its minimum, then normalised.
// Zero mass yields the uniform distribution.
std::vector<double> shift_normalize(std::span<const double> v, bool* was_degenerate = nullptr);

struct AgreementScores {
  std::optional<double> cosine;
  std::optional<double> pearson;
  double jsd = 0.0;
  std::vector<std::string> flags;
};

AgreementScores score_vectors(std::span<const double> phi, std::span<const double> beta);

// Requires identical tokens; a mismatch means the explainers diverged.
AgreementScores score_instance(const Attribution& shap, const Attribution& lime);

struct AttributionPair {
  Attribution shap;
  Attribution lime;
};

std::vector<AgreementScores> score_batch(std::span<const AttributionPair> pairs, Exec exec = Exec::parallel);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
  std::size_t k = 0;
  double z = 0.0;
  double p = 1.0;
  double threshold = 0.0;
  std::size_t undefined = 0;  // instances excluded from k
};

struct AggregateReport {
  MetricSummary cosine;
  MetricSummary pearson;
  MetricSummary jsd;
};

inline constexpr double kCosineThreshold = 0.0;
inline constexpr double kPearsonThreshold = 0.0;
inline constexpr double kJsdThreshold = 1.0;

// Mean, sample std, z = (mean - threshold) / (std / sqrt(k)), two-sided p.
MetricSummary summarize_metric(std::span<const double> values, double threshold);

AggregateReport aggregate(std::span<const AgreementScores> scores);

// Two-sided normal tail 2 * P(Z > |z|).
double two_sided_p(double z);

// "<0.001" below 1e-3, otherwise three decimals.
std::string format_p(double p);

std::string scores_csv(std::span<const AgreementScores> scores, std::span<const std::string> text_ids);
std::string aggregate_json(const AggregateReport& report);

}  // namespace stereoscope
