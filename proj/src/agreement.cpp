#include "stereoscope/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <json.hpp>
#include <sstream>

#include "stereoscope/csv.hpp"
#include "stereoscope/error.hpp"

namespace stereoscope {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw UsageError("attribution vectors differ in length (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw UsageError("attribution vectors are empty");
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Exact test for zero variance; a computed variance picks up rounding noise.
bool all_equal(std::span<const double> v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

// (1 + x) ln(1 + x) + (1 - x) ln(1 - x) for x in [-1, 1]. The series branch
// keeps full relative accuracy for nearly equal masses, where the direct
// form cancels and the final square root would magnify the error.
double js_kernel(double x) {
  const double x2 = x * x;
  if (std::abs(x) < 1e-2) {
    double sum = 0.0, pow = x2;
    for (int k = 1; k <= 6; ++k, pow *= x2) sum += pow / (k * (2.0 * k - 1.0));
    return sum;
  }
  const double a = x > -1.0 ? (1.0 + x) * std::log1p(x) : 0.0;
  const double b = x < 1.0 ? (1.0 - x) * std::log1p(-x) : 0.0;
  return a + b;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::optional<double> cosine_similarity(std::span<const double> phi, std::span<const double> beta) {
  check_lengths(phi, beta);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    dot += phi[i] * beta[i];
    na += phi[i] * phi[i];
    nb += beta[i] * beta[i];
  }
  if (na == 0.0 || nb == 0.0) return std::nullopt;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::optional<double> pearson_correlation(std::span<const double> phi, std::span<const double> beta) {
  check_lengths(phi, beta);
  if (phi.size() < 2 || all_equal(phi) || all_equal(beta)) return std::nullopt;
  const double ma = mean_of(phi), mb = mean_of(beta);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double da = phi[i] - ma, db = beta[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) return std::nullopt;
  return std::clamp(cov / (std::sqrt(va) * std::sqrt(vb)), -1.0, 1.0);
}

std::vector<double> shift_normalize(std::span<const double> v, bool* was_degenerate) {
  const double shift = std::abs(*std::min_element(v.begin(), v.end()));
  std::vector<double> out(v.begin(), v.end());
  double total = 0.0;
  for (auto& x : out) {
    x += shift;
    total += x;
  }
  const bool degenerate = !(total > 0.0);
  if (was_degenerate) *was_degenerate = degenerate;
  for (auto& x : out) x = degenerate ? 1.0 / static_cast<double>(out.size()) : x / total;
  return out;
}

JsdResult js_divergence(std::span<const double> phi, std::span<const double> beta) {
  check_lengths(phi, beta);
  JsdResult r;
  const auto P = shift_normalize(phi, &r.phi_uniform);
  const auto Q = shift_normalize(beta, &r.beta_uniform);
  // With m = (p + q) / 2 and x = (p - q) / (p + q), the per-term divergence
  // 1/2 [p log2(p/m) + q log2(q/m)] equals m f(x) / (2 ln 2), f = js_kernel.
  double js = 0.0;
  for (std::size_t j = 0; j < P.size(); ++j) {
    const double m = 0.5 * (P[j] + Q[j]);
    if (m == 0.0 || P[j] == Q[j]) continue;
    const double x = std::clamp((P[j] - Q[j]) / (P[j] + Q[j]), -1.0, 1.0);
    js += 0.5 * m * js_kernel(x);
  }
  js /= std::log(2.0);
  r.value = std::clamp(std::sqrt(std::max(js, 0.0)), 0.0, 1.0);
  return r;
}

AgreementScores score_vectors(std::span<const double> phi, std::span<const double> beta) {
  AgreementScores s;
  s.cosine = cosine_similarity(phi, beta);
  s.pearson = pearson_correlation(phi, beta);
  const auto j = js_divergence(phi, beta);
  s.jsd = j.value;
  if (!s.cosine) s.flags.emplace_back("cosine_undefined");
  if (!s.pearson) s.flags.emplace_back("pearson_undefined");
  if (j.phi_uniform) s.flags.emplace_back("jsd_shap_uniform");
  if (j.beta_uniform) s.flags.emplace_back("jsd_lime_uniform");
  return s;
}

AgreementScores score_instance(const Attribution& shap, const Attribution& lime) {
  if (shap.tokens != lime.tokens || shap.values.size() != lime.values.size()) {
    throw UsageError("SHAP and LIME attributions are not aligned on the same tokens");
  }
  return score_vectors(shap.values, lime.values);
}

std::vector<AgreementScores> score_batch(std::span<const AttributionPair> pairs, Exec exec) {
  std::vector<AgreementScores> out(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
  auto one = [&](std::size_t i) {
    try {
      out[i] = score_instance(pairs[i].shap, pairs[i].lime);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(pairs.size()); ++i) one(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < pairs.size(); ++i) one(i);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

MetricSummary summarize_metric(std::span<const double> values, double threshold) {
  if (values.size() < 2) throw DataError("need at least 2 defined scores, got " + std::to_string(values.size()));
  MetricSummary m;
  m.k = values.size();
  m.threshold = threshold;
  if (all_equal(values)) throw NumericError("scores have zero spread; z is undefined");
  m.mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(m.k - 1));
  if (m.std == 0.0) throw NumericError("scores have zero spread; z is undefined");
  m.z = (m.mean - threshold) / (m.std / std::sqrt(static_cast<double>(m.k)));
  m.p = two_sided_p(m.z);
  return m;
}

AggregateReport aggregate(std::span<const AgreementScores> scores) {
  std::vector<double> cos, pear, jsd;
  std::size_t cos_undef = 0, pear_undef = 0;
  for (const auto& s : scores) {
    if (s.cosine) cos.push_back(*s.cosine); else ++cos_undef;
    if (s.pearson) pear.push_back(*s.pearson); else ++pear_undef;
    jsd.push_back(s.jsd);
  }
  auto metric = [](const char* name, std::span<const double> v, double t) {
    try {
      return summarize_metric(v, t);
    } catch (const Error& e) {
      throw DataError(std::string(name) + ": " + e.what());
    }
  };
  AggregateReport r;
  r.cosine = metric("cosine", cos, kCosineThreshold);
  r.cosine.undefined = cos_undef;
  r.pearson = metric("pearson", pear, kPearsonThreshold);
  r.pearson.undefined = pear_undef;
  r.jsd = metric("jsd", jsd, kJsdThreshold);
  return r;
}

std::string format_p(double p) {
  if (p < 1e-3) return "<0.001";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", p);
  return buf;
}

std::string scores_csv(std::span<const AgreementScores> scores, std::span<const std::string> text_ids) {
  if (scores.size() != text_ids.size()) throw UsageError("one text id per score row required");
  std::ostringstream out;
  csv::write_row(out, {"text_id", "cosine", "pearson", "jsd", "flags"});
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    std::string flags;
    for (const auto& f : s.flags) flags += (flags.empty() ? "" : ";") + f;
    csv::write_row(out, {text_ids[i], s.cosine ? fmt(*s.cosine) : "", s.pearson ? fmt(*s.pearson) : "", fmt(s.jsd),
                         flags});
  }
  return out.str();
}

std::string aggregate_json(const AggregateReport& report) {
  auto metric = [](const MetricSummary& m) {
    return nlohmann::json{{"mean", m.mean},
                          {"std", m.std},
                          {"k", m.k},
                          {"z", m.z},
                          {"p", m.p},
                          {"p_display", format_p(m.p)},
                          {"threshold", m.threshold},
                          {"undefined", m.undefined}};
  };
  nlohmann::json j;
  j["cosine"] = metric(report.cosine);
  j["pearson"] = metric(report.pearson);
  j["jsd"] = metric(report.jsd);
  return j.dump(2) + "\n";
}

}  // namespace stereoscope
