#include "stereoscope/explain.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <set>

#include "stereoscope/error.hpp"
#include "stereoscope/rng.hpp"
#include "stereoscope/svg.hpp"

namespace stereoscope {

MaskedInstance::MaskedInstance(std::string_view text) : tokens_(tokenize(text)) {}

std::string MaskedInstance::render(const Mask& mask) const {
  if (mask.size() != tokens_.size()) throw UsageError("mask length does not match token count");
  std::string out;
  for (std::size_t j = 0; j < tokens_.size(); ++j) {
    if (!mask[j]) continue;
    if (!out.empty()) out.push_back(' ');
    out += tokens_[j].text;
  }
  return out;
}

std::string MaskedInstance::render_bits(std::uint64_t bits) const {
  std::string out;
  for (std::size_t j = 0; j < tokens_.size(); ++j) {
    if (!((bits >> j) & 1U)) continue;
    if (!out.empty()) out.push_back(' ');
    out += tokens_[j].text;
  }
  return out;
}

std::vector<double> CoalitionCache::evaluate(const Probe& probe, const std::vector<std::string>& texts) {
  std::vector<std::string> missing;
  {
    std::lock_guard lock(mu_);
    std::unordered_map<std::string_view, bool> queued;
    for (const auto& t : texts) {
      if (values_.count(t) || queued.count(t)) continue;
      queued.emplace(t, true);
      missing.push_back(t);
    }
  }
  if (!missing.empty()) {
    const auto fresh = probe.predict_proba(std::span<const std::string>(missing));
    if (fresh.size() != missing.size()) throw ProtocolError("probe returned the wrong number of values");
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < missing.size(); ++i) {
      if (values_.emplace(missing[i], fresh[i]).second) ++misses_;
    }
  }
  std::vector<double> out;
  out.reserve(texts.size());
  std::lock_guard lock(mu_);
  for (const auto& t : texts) out.push_back(values_.at(t));
  return out;
}

std::size_t CoalitionCache::size() const {
  std::lock_guard lock(mu_);
  return values_.size();
}

double coalition_value(const Probe& probe, const MaskedInstance& inst, const Mask& mask, CoalitionCache* cache) {
  const std::string text = inst.render(mask);
  if (cache) return cache->evaluate(probe, {text})[0];
  return probe.predict_proba(text);
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::shap_exact: return "shap_exact";
    case Method::shap_sampled: return "shap_sampled";
    case Method::lime: return "lime";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  if (s == "shap_exact") return Method::shap_exact;
  if (s == "shap_sampled") return Method::shap_sampled;
  if (s == "lime") return Method::lime;
  throw UsageError("unknown explanation method '" + std::string(s) + "'");
}

namespace {

Attribution skeleton(const MaskedInstance& inst, const std::string& text, Method method, const Probe& probe,
                     std::uint64_t seed) {
  if (inst.size() == 0) throw DataError("text has no tokens to explain");
  Attribution a;
  a.text = text;
  a.tokens = inst.tokens();
  a.method = method;
  a.probe_id = probe.id();
  a.seed = seed;
  return a;
}

std::vector<double> evaluate_texts(const Probe& probe, const std::vector<std::string>& texts, CoalitionCache* cache) {
  if (cache) return cache->evaluate(probe, texts);
  CoalitionCache local;
  return local.evaluate(probe, texts);
}

}  // namespace

double shapley_weight(std::size_t n, std::size_t s) {
  // 1 / (n * C(n-1, s))
  double binom = 1.0;
  const std::size_t k = std::min(s, n - 1 - s);
  for (std::size_t i = 1; i <= k; ++i) binom = binom * static_cast<double>(n - k - 1 + i) / static_cast<double>(i);
  return 1.0 / (static_cast<double>(n) * binom);
}

std::vector<double> shapley_from_table(std::span<const double> values, std::size_t n, Exec exec) {
  const std::uint64_t count = std::uint64_t{1} << n;
  if (values.size() != count) throw UsageError("coalition table must have 2^n entries");
  std::vector<double> weight(n);
  for (std::size_t s = 0; s < n; ++s) weight[s] = shapley_weight(n, s);
  std::vector<double> phi(n, 0.0);
  // Each token's sum runs in coalition order, so both paths agree bitwise.
  auto token = [&](std::size_t j) {
    const std::uint64_t bit = std::uint64_t{1} << j;
    double acc = 0.0;
    for (std::uint64_t S = 0; S < count; ++S) {
      if (S & bit) continue;
      acc += weight[static_cast<std::size_t>(std::popcount(S))] * (values[S | bit] - values[S]);
    }
    phi[j] = acc;
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n); ++j) token(static_cast<std::size_t>(j));
  } else {
    for (std::size_t j = 0; j < n; ++j) token(j);
  }
  return phi;
}

Attribution shap_exact(const Probe& probe, const std::string& text, CoalitionCache* cache, const ShapOptions& opts) {
  const MaskedInstance inst(text);
  Attribution a = skeleton(inst, text, Method::shap_exact, probe, 0);
  const std::size_t n = inst.size();
  if (n > opts.exact_limit) {
    throw UsageError("text has " + std::to_string(n) + " tokens, above the exact limit of " +
                     std::to_string(opts.exact_limit) + "; use shap_sampled");
  }
  const std::uint64_t count = std::uint64_t{1} << n;
  std::vector<std::string> texts(count);
  for (std::uint64_t S = 0; S < count; ++S) texts[S] = inst.render_bits(S);
  const auto values = evaluate_texts(probe, texts, cache);
  a.values = shapley_from_table(values, n, opts.exec);
  a.base_value = values[0];
  return a;
}

Attribution shap_sampled(const Probe& probe, const std::string& text, const SampledShapOptions& opts,
                         CoalitionCache* cache) {
  const MaskedInstance inst(text);
  Attribution a = skeleton(inst, text, Method::shap_sampled, probe, opts.seed);
  const std::size_t n = inst.size();
  if (opts.samples < 2 * n) {
    throw UsageError("shap_sampled needs at least " + std::to_string(2 * n) + " samples for " + std::to_string(n) +
                     " tokens");
  }
  if (opts.samples % 2 != 0) throw UsageError("shap_sampled needs an even sample count (antithetic pairs)");
  const std::size_t pairs = opts.samples / 2;

  Rng rng(opts.seed);
  std::vector<std::vector<std::size_t>> perms(pairs, std::vector<std::size_t>(n));
  for (auto& p : perms) {
    std::iota(p.begin(), p.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(p));
  }

  // Texts laid out per pair: forward prefixes 0..n, then reverse prefixes 0..n.
  const std::size_t stride = 2 * (n + 1);
  std::vector<std::string> texts(pairs * stride);
  auto fill = [&](std::size_t p) {
    for (int dir = 0; dir < 2; ++dir) {
      Mask mask(n, 0);
      const std::size_t base = p * stride + static_cast<std::size_t>(dir) * (n + 1);
      texts[base] = "";
      for (std::size_t k = 0; k < n; ++k) {
        mask[dir == 0 ? perms[p][k] : perms[p][n - 1 - k]] = 1;
        texts[base + k + 1] = inst.render(mask);
      }
    }
  };
  if (opts.exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(pairs); ++p) fill(static_cast<std::size_t>(p));
  } else {
    for (std::size_t p = 0; p < pairs; ++p) fill(p);
  }
  const auto values = evaluate_texts(probe, texts, cache);

  // Per-pair mean of the forward and reverse marginal for each token.
  std::vector<double> pair_marginal(pairs * n, 0.0);
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t fwd = p * stride;
    const std::size_t rev = fwd + n + 1;
    for (std::size_t k = 0; k < n; ++k) {
      pair_marginal[p * n + perms[p][k]] += 0.5 * (values[fwd + k + 1] - values[fwd + k]);
      pair_marginal[p * n + perms[p][n - 1 - k]] += 0.5 * (values[rev + k + 1] - values[rev + k]);
    }
  }
  a.values.assign(n, 0.0);
  a.std_errors.assign(n, 0.0);
  auto token = [&](std::size_t j) {
    double mean = 0.0;
    for (std::size_t p = 0; p < pairs; ++p) mean += pair_marginal[p * n + j];
    mean /= static_cast<double>(pairs);
    double ss = 0.0;
    for (std::size_t p = 0; p < pairs; ++p) {
      const double d = pair_marginal[p * n + j] - mean;
      ss += d * d;
    }
    a.values[j] = mean;
    a.std_errors[j] = pairs > 1 ? std::sqrt(ss / static_cast<double>(pairs - 1)) / std::sqrt(static_cast<double>(pairs))
                                : std::numeric_limits<double>::infinity();
  };
  if (opts.exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n); ++j) token(static_cast<std::size_t>(j));
  } else {
    for (std::size_t j = 0; j < n; ++j) token(j);
  }
  a.base_value = values[0];
  return a;
}

std::vector<Mask> lime_design(std::size_t n, std::size_t num_samples, std::uint64_t seed) {
  if (n == 0) throw UsageError("cannot build a design for zero tokens");
  if (num_samples == 0) throw UsageError("num_samples must be positive");
  const bool small = n < 63;
  const std::uint64_t total = small ? (std::uint64_t{1} << n) - 1 : std::numeric_limits<std::uint64_t>::max();
  std::vector<Mask> design;
  Mask full(n, 1);
  design.push_back(full);
  if (small && num_samples >= total) {
    for (std::uint64_t bits = 1; bits < total; ++bits) {
      Mask m(n);
      for (std::size_t j = 0; j < n; ++j) m[j] = static_cast<std::uint8_t>((bits >> j) & 1U);
      design.push_back(std::move(m));
    }
    return design;
  }
  Rng rng(seed);
  std::set<Mask> seen{full};
  std::vector<std::size_t> idx(n);
  while (design.size() < num_samples) {
    const std::size_t card = 1 + static_cast<std::size_t>(rng.uniform_index(n));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Mask m(n, 0);
    for (std::size_t i = 0; i < card; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
      std::swap(idx[i], idx[j]);
      m[idx[i]] = 1;
    }
    if (seen.insert(m).second) design.push_back(std::move(m));
  }
  return design;
}

double lime_proximity(const Mask& mask, double kernel_width) {
  const auto kept = static_cast<double>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
  const double d = 1.0 - std::sqrt(kept / static_cast<double>(mask.size()));
  return std::exp(-(d * d) / (kernel_width * kernel_width));
}

std::vector<double> weighted_ridge(const std::vector<Mask>& design, std::span<const double> y,
                                   std::span<const double> weights, double lambda, Exec exec) {
  if (design.empty()) throw UsageError("empty design");
  if (y.size() != design.size() || weights.size() != design.size()) throw UsageError("design/response size mismatch");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("ridge lambda must be finite and non-negative");
  const std::size_t n = design[0].size();
  const std::size_t p = n + 1;
  const std::size_t K = design.size();

  // Accumulates rows [begin, end) of Z' W Z and Z' W y, Z = [1 | mask].
  auto accumulate = [&](std::size_t begin, std::size_t end, double* A, double* b) {
    std::vector<double> z(p);
    for (std::size_t k = begin; k < end; ++k) {
      z[0] = 1.0;
      for (std::size_t j = 0; j < n; ++j) z[j + 1] = design[k][j];
      const double w = weights[k];
      for (std::size_t r = 0; r < p; ++r) {
        if (z[r] == 0.0) continue;
        const double wr = w * z[r];
        b[r] += wr * y[k];
        for (std::size_t c = 0; c < p; ++c) A[r * p + c] += wr * z[c];
      }
    }
  };

  std::vector<double> A(p * p, 0.0), b(p, 0.0);
  if (exec == Exec::parallel) {
    std::vector<double> partA(kReductionBlocks * p * p, 0.0), partB(kReductionBlocks * p, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(kReductionBlocks); ++blk) {
      const auto r = block_range(K, static_cast<std::size_t>(blk));
      accumulate(r.begin, r.end, &partA[static_cast<std::size_t>(blk) * p * p], &partB[static_cast<std::size_t>(blk) * p]);
    }
    for (std::size_t blk = 0; blk < kReductionBlocks; ++blk) {
      for (std::size_t i = 0; i < p * p; ++i) A[i] += partA[blk * p * p + i];
      for (std::size_t i = 0; i < p; ++i) b[i] += partB[blk * p + i];
    }
  } else {
    accumulate(0, K, A.data(), b.data());
  }
  for (std::size_t j = 1; j < p; ++j) A[j * p + j] += lambda;

  Eigen::MatrixXd M(p, p);
  Eigen::VectorXd rhs(p);
  for (std::size_t r = 0; r < p; ++r) {
    rhs(static_cast<Eigen::Index>(r)) = b[r];
    for (std::size_t c = 0; c < p; ++c) M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = A[r * p + c];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  if (qr.rank() < static_cast<Eigen::Index>(p)) {
    throw NumericError(lambda == 0.0 ? "surrogate system is singular at lambda = 0; use a positive ridge lambda"
                                     : "surrogate system is singular");
  }
  const Eigen::VectorXd sol = qr.solve(rhs);
  return {sol.data(), sol.data() + sol.size()};
}

Attribution lime_explain(const Probe& probe, const std::string& text, const LimeOptions& opts, CoalitionCache* cache) {
  const MaskedInstance inst(text);
  Attribution a = skeleton(inst, text, Method::lime, probe, opts.seed);
  if (!(opts.kernel_width > 0.0)) throw UsageError("kernel_width must be positive");
  const auto design = lime_design(inst.size(), opts.num_samples, opts.seed);
  std::vector<std::string> texts;
  std::vector<double> weights;
  texts.reserve(design.size());
  weights.reserve(design.size());
  for (const auto& m : design) {
    texts.push_back(inst.render(m));
    weights.push_back(lime_proximity(m, opts.kernel_width));
  }
  const auto y = evaluate_texts(probe, texts, cache);
  const auto sol = weighted_ridge(design, y, weights, opts.ridge_lambda, opts.exec);
  a.base_value = sol[0];
  a.values.assign(sol.begin() + 1, sol.end());
  return a;
}

TokenRanking rank_tokens(const Attribution& attr) {
  TokenRanking out;
  out.reserve(attr.values.size());
  for (std::size_t j = 0; j < attr.values.size(); ++j) {
    out.push_back({j < attr.tokens.size() ? attr.tokens[j].text : std::string(), j, attr.values[j]});
  }
  std::stable_sort(out.begin(), out.end(), [](const RankedToken& l, const RankedToken& r) { return l.value > r.value; });
  return out;
}

std::string format_ranking(const TokenRanking& ranking, std::size_t limit) {
  std::string out;
  const std::size_t n = limit == 0 ? ranking.size() : std::min(limit, ranking.size());
  for (std::size_t i = 0; i < n; ++i) {
    char buf[64];
    const double v = std::abs(ranking[i].value) < 0.0005 ? 0.0 : ranking[i].value;  // no "-0.000"
    std::snprintf(buf, sizeof buf, "%.3f", v);
    if (i) out += ", ";
    out += nlohmann::json(ranking[i].token).dump() + ": " + buf;
  }
  if (n < ranking.size()) out += ", ...";
  return out;
}

std::string attribution_json(const Attribution& attr) {
  nlohmann::json j;
  j["text"] = attr.text;
  std::vector<std::string> tokens;
  for (const auto& t : attr.tokens) tokens.push_back(t.text);
  j["tokens"] = tokens;
  j["values"] = attr.values;
  j["base_value"] = attr.base_value;
  j["method"] = std::string(to_string(attr.method));
  j["seed"] = attr.seed;
  j["probe_id"] = attr.probe_id;
  if (!attr.std_errors.empty()) j["std_errors"] = attr.std_errors;
  return j.dump(2) + "\n";
}

Attribution attribution_from_json(const std::string& json_text) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    Attribution a;
    a.text = j.at("text").get<std::string>();
    a.tokens = tokenize(a.text);
    const auto tokens = j.at("tokens").get<std::vector<std::string>>();
    if (tokens.size() != a.tokens.size()) throw DataError("attribution tokens do not match its text");
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i] != a.tokens[i].text) throw DataError("attribution token '" + tokens[i] + "' does not match its text");
    }
    a.values = j.at("values").get<std::vector<double>>();
    if (a.values.size() != a.tokens.size()) throw DataError("attribution has " + std::to_string(a.values.size()) +
                                                            " values for " + std::to_string(a.tokens.size()) + " tokens");
    a.base_value = j.at("base_value").get<double>();
    a.method = parse_method(j.at("method").get<std::string>());
    a.seed = j.at("seed").get<std::uint64_t>();
    a.probe_id = j.at("probe_id").get<std::string>();
    if (j.contains("std_errors")) a.std_errors = j.at("std_errors").get<std::vector<double>>();
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed attribution JSON: ") + e.what());
  }
}

std::string attribution_svg(const Attribution& attr) {
  std::vector<svg::Bar> bars;
  for (std::size_t j = 0; j < attr.values.size(); ++j) bars.push_back({attr.tokens[j].text, attr.values[j]});
  svg::ChartOptions opts;
  opts.title = std::string(to_string(attr.method)) + ": " + attr.text;
  opts.x_label = "attribution";
  opts.y_label = "token";
  opts.height = std::max(160, 60 + 28 * static_cast<int>(bars.size()));
  return svg::horizontal_bar_chart(bars, opts);
}

}  // namespace stereoscope
