#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "stereoscope/parallel.hpp"
#include "stereoscope/probe.hpp"
#include "stereoscope/text.hpp"

namespace stereoscope {

using Mask = std::vector<std::uint8_t>;  // 1 = token kept

// A tokenized text whose tokens can be deleted.
class MaskedInstance {
 public:
  explicit MaskedInstance(std::string_view text);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<Token>& tokens() const { return tokens_; }

  // Kept tokens joined by single spaces; "" for the empty mask.
  std::string render(const Mask& mask) const;
  // Same, with the coalition given as bits (token j present iff bit j set).
  std::string render_bits(std::uint64_t bits) const;

  Mask full_mask() const { return Mask(tokens_.size(), 1); }

 private:
  std::vector<Token> tokens_;
};

// Memo of probe outputs keyed by rendered text. Shareable between explainers
// run on the same instance; thread-safe.
class CoalitionCache {
 public:
  // Values for each text, in order. Missing texts are sent to the probe in a
  // single batch call, deduplicated, in first-occurrence order.
  std::vector<double> evaluate(const Probe& probe, const std::vector<std::string>& texts);

  std::size_t size() const;
  std::size_t misses() const { return misses_; }

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, double> values_;
  std::size_t misses_ = 0;
};

double coalition_value(const Probe& probe, const MaskedInstance& inst, const Mask& mask,
                       CoalitionCache* cache = nullptr);

enum class Method { shap_exact, shap_sampled, lime };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

struct Attribution {
  std::string text;
  std::vector<Token> tokens;
  std::vector<double> values;
  double base_value = 0.0;
  Method method = Method::shap_exact;
  std::string probe_id;
  std::uint64_t seed = 0;
  std::vector<double> std_errors;  // shap_sampled only
};

inline constexpr std::size_t kExactLimit = 12;

struct ShapOptions {
  std::size_t exact_limit = kExactLimit;
  Exec exec = Exec::parallel;
};

Attribution shap_exact(const Probe& probe, const std::string& text, CoalitionCache* cache = nullptr,
                       const ShapOptions& opts = {});

// phi_j = sum over coalitions S without j of w(|S|) * (v[S | j] - v[S]),
// w(s) = s! (n - s - 1)! / n!. `values` is indexed by coalition bits.
std::vector<double> shapley_from_table(std::span<const double> values, std::size_t n, Exec exec);

// s! (n - s - 1)! / n!
double shapley_weight(std::size_t n, std::size_t s);

struct SampledShapOptions {
  std::size_t samples = 2048;  // permutations, counting each antithetic reverse
  std::uint64_t seed = 42;
  Exec exec = Exec::parallel;
};

Attribution shap_sampled(const Probe& probe, const std::string& text, const SampledShapOptions& opts = {},
                         CoalitionCache* cache = nullptr);

struct LimeOptions {
  std::size_t num_samples = 1000;
  double kernel_width = 25.0;
  double ridge_lambda = 1e-3;
  std::uint64_t seed = 42;
  Exec exec = Exec::parallel;
};

Attribution lime_explain(const Probe& probe, const std::string& text, const LimeOptions& opts = {},
                         CoalitionCache* cache = nullptr);

// Distinct non-empty masks; the full mask comes first. Enumerates every mask
// when num_samples >= 2^n - 1.
std::vector<Mask> lime_design(std::size_t n, std::size_t num_samples, std::uint64_t seed);

// exp(-d^2 / width^2), d = cosine distance between the full mask and `mask`.
double lime_proximity(const Mask& mask, double kernel_width);

// Weighted ridge fit with an unpenalized intercept. Returns [intercept, beta...].
std::vector<double> weighted_ridge(const std::vector<Mask>& design, std::span<const double> y,
                                   std::span<const double> weights, double lambda, Exec exec);

struct RankedToken {
  std::string token;
  std::size_t position = 0;
  double value = 0.0;
};

using TokenRanking = std::vector<RankedToken>;

// Descending by value; ties keep ascending position.
TokenRanking rank_tokens(const Attribution& attr);

// "housewife": 0.446, "woman": 0.159, ...
std::string format_ranking(const TokenRanking& ranking, std::size_t limit = 0);

std::string attribution_json(const Attribution& attr);
Attribution attribution_from_json(const std::string& json_text);
std::string attribution_svg(const Attribution& attr);

}  // namespace stereoscope
