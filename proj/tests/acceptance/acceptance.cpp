// Acceptance checks: one PASS/FAIL/SKIP line per criterion, exit 1 on any FAIL.
//
// Contingent checks read their inputs from the environment:
//   STEREOSCOPE_EMGSD_PATH       labelled EMGSD file (.csv or .jsonl)
//   STEREOSCOPE_CHECKPOINT_URL   /predict server hosting the reference checkpoint
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <unistd.h>
#include <map>
#include <string>
#include <vector>

#include "agreement_golden.hpp"
#include "oracles.hpp"
#include "stereoscope/agreement.hpp"
#include "stereoscope/audit.hpp"
#include "stereoscope/classifier.hpp"
#include "stereoscope/corpus.hpp"
#include "stereoscope/evaluate.hpp"
#include "stereoscope/explain.hpp"
#include "stereoscope/filters.hpp"
#include "stereoscope/remote_probe.hpp"
#include "stereoscope/rng.hpp"

using namespace stereoscope;
using testing_support::LookupProbe;
namespace fs = std::filesystem;

namespace {

const std::string kSrc = STEREOSCOPE_SOURCE_DIR;

enum class Status { pass, fail, skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome check(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string num(double v, const char* f = "%.3g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

const LabeledDataset& corpus() {
  static const auto ds = load_dataset(kSrc + "/data/synthetic_corpus.csv", DatasetFormat::csv);
  return ds;
}

const LogisticTfidfProbe& lr_probe(Penalty penalty = Penalty::l1) {
  static std::map<Penalty, std::shared_ptr<LogisticTfidfProbe>> cache;
  auto& slot = cache[penalty];
  if (!slot) {
    LogisticOptions o;
    o.penalty = penalty;
    slot = train_classifier(corpus(), o).probe;
  }
  return *slot;
}

std::vector<double> random_table(std::size_t n, Rng& rng) {
  std::vector<double> t(std::size_t{1} << n);
  for (double& v : t) v = rng.uniform01();
  return t;
}

std::string words_sentence(std::size_t n) { return testing_support::sentence(testing_support::words(n)); }

Outcome shapley_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20240601);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(6);
    const auto table = random_table(n, rng);
    LookupProbe probe(testing_support::words(n), table);
    const auto a = shap_exact(probe, words_sentence(n));
    const auto want = oracle::permutation_shapley(n, [&](std::uint64_t b) { return table[b]; });
    for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(a.values[j] - want[j]));
  }
  const double t = seconds_since(start);
  return check(worst <= 1e-9 && t < 10.0, "max error " + num(worst) + ", " + num(t, "%.2f") + " s");
}

Outcome local_accuracy() {
  const auto& probe = lr_probe();
  std::size_t checked = 0;
  double worst = 0.0;
  for (const auto& inst : corpus().instances) {
    if (checked == 200) break;
    if (tokenize(inst.text).size() > kExactLimit) continue;
    const auto a = shap_exact(probe, inst.text);
    double sum = a.base_value;
    for (double v : a.values) sum += v;
    worst = std::max(worst, std::abs(sum - probe.predict_proba(inst.text)));
    ++checked;
  }
  return check(checked == 200 && worst <= 1e-6, std::to_string(checked) + " instances, max gap " + num(worst));
}

Outcome sampled_consistency() {
  // Dense L2 weights so every token carries signal.
  const auto& probe = lr_probe(Penalty::l2);
  std::size_t instances = 0, tokens = 0, within = 0;
  for (const auto& inst : corpus().instances) {
    if (instances == 20) break;
    if (tokenize(inst.text).size() > kExactLimit) continue;
    const auto exact = shap_exact(probe, inst.text);
    SampledShapOptions so;
    so.seed = 1000 + instances;
    const auto sampled = shap_sampled(probe, inst.text, so);
    for (std::size_t j = 0; j < exact.values.size(); ++j) {
      ++tokens;
      within += std::abs(sampled.values[j] - exact.values[j]) <= 3.0 * sampled.std_errors[j] + 1e-12;
    }
    ++instances;
  }
  const double frac = static_cast<double>(within) / static_cast<double>(tokens);
  return check(instances == 20 && frac >= 0.95,
               std::to_string(within) + "/" + std::to_string(tokens) + " tokens within 3 SE (" + num(100 * frac, "%.1f") + "%)");
}

Outcome lime_recovery() {
  Rng rng(77);
  double worst_exact = 0.0, worst_default = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(9);
    std::vector<double> c(n + 1);
    for (double& x : c) x = 2.0 * rng.uniform01() - 1.0;
    std::vector<double> table(std::size_t{1} << n);
    for (std::uint64_t b = 0; b < table.size(); ++b) {
      table[b] = c[0];
      for (std::size_t j = 0; j < n; ++j)
        if (b >> j & 1) table[b] += c[j + 1];
    }
    LookupProbe probe(testing_support::words(n), table);
    LimeOptions lo;
    lo.seed = static_cast<std::uint64_t>(trial);
    lo.num_samples = table.size() - 1;
    lo.ridge_lambda = 0.0;
    const auto full = lime_explain(probe, words_sentence(n), lo);
    lo = LimeOptions{};
    lo.seed = static_cast<std::uint64_t>(trial);
    const auto def = lime_explain(probe, words_sentence(n), lo);
    for (std::size_t j = 0; j < n; ++j) {
      worst_exact = std::max(worst_exact, std::abs(full.values[j] - c[j + 1]));
      worst_default = std::max(worst_default, std::abs(def.values[j] - c[j + 1]));
    }
  }
  return check(worst_exact <= 1e-6 && worst_default <= 1e-2,
               "lambda=0 max error " + num(worst_exact) + ", default max error " + num(worst_default));
}

Outcome agreement_metrics() {
  double worst = 0.0;
  bool undefined_ok = true;
  for (const auto& g : golden::kAgreement) {
    const auto s = score_vectors(g.phi, g.beta);
    worst = std::max({worst, std::abs(*s.cosine - g.cosine), std::abs(s.jsd - g.jsd)});
    undefined_ok &= s.pearson.has_value() == g.pearson.has_value();
    if (g.pearson && s.pearson) worst = std::max(worst, std::abs(*s.pearson - *g.pearson));
  }
  Rng rng(5150);
  std::size_t violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(16);
    std::vector<double> a(n), b(n);
    for (auto& x : a) x = 2.0 * rng.uniform01() - 1.0;
    for (auto& x : b) x = 2.0 * rng.uniform01() - 1.0;
    const double j = js_divergence(a, b).value;
    violations += !(j >= 0.0 && j <= 1.0);
  }
  return check(golden::kAgreement.size() == 12 && worst <= 1e-9 && undefined_ok && violations == 0,
               "12 golden pairs, max error " + num(worst) + "; " + std::to_string(violations) +
                   " bound violations in 10000 trials");
}

Outcome significance() {
  Rng rng(1005);
  std::vector<double> v(1005);
  for (double& x : v) x = rng.uniform01();
  const double m = oracle::mean(v), s = oracle::sample_std(v);
  for (double& x : v) x = 0.660 + (x - m) / s * 0.277;
  const auto r = summarize_metric(v, kCosineThreshold);
  const auto shown = num(r.mean, "%.3f") + " (" + num(r.std, "%.3f") + ")";
  return check(std::abs(r.z - 75.5) <= 0.5 && format_p(r.p) == "<0.001" && shown == "0.660 (0.277)",
               shown + ", z = " + num(r.z, "%.3f") + ", p " + format_p(r.p));
}

Outcome macro_f1_suite() {
  Confusion c{};
  c[1][1] = 40, c[0][1] = 10, c[1][0] = 10, c[0][0] = 40;
  bool ok = class_f1(c, 1) == oracle::f1(40, 10, 10) && std::abs(macro_f1(c) - 0.8) < 1e-15;
  Confusion d{};
  d[1][1] = 30, d[0][1] = 5, d[1][0] = 15, d[0][0] = 50;
  ok &= macro_f1(d) == (oracle::f1(30, 5, 15) + oracle::f1(50, 15, 5)) / 2;
  Confusion e{};
  e[0][0] = 10;
  ok &= class_f1(e, 1) == 0.0 && macro_f1(e) == 0.5;  // 0/0 -> 0

  LabeledDataset ds;
  std::vector<double> perfect, inverted;
  // 10 texts of 13 characters, 14 of 14 characters, 3 of 15 characters.
  for (int i = 0; i < 27; ++i) {
    const std::string suffix = i < 24 ? std::to_string(i) : std::to_string(100 + i);
    ds.instances.push_back(make_instance(StereotypeType::race, "text number " + suffix,
                                         i % 2 ? Category::stereotype : Category::neutral, "x"));
    perfect.push_back(i % 2 ? 0.9 : 0.1);
    inverted.push_back(i % 2 ? 0.1 : 0.9);
  }
  const auto p = evaluate_predictions(ds, perfect), q = evaluate_predictions(ds, inverted);
  ok &= p.macro_f1 == 1.0 && q.macro_f1 == 0.0;
  // Per-length breakdown keeps only lengths with at least 10 samples.
  ok &= p.per_length_f1.size() == 2 && p.per_length_f1.count(13) == 1 && p.per_length_f1.count(14) == 1;
  return check(ok, "hand values exact; perfect " + num(p.macro_f1) + ", inverted " + num(q.macro_f1));
}

Outcome lr_desk() {
  const auto start = std::chrono::steady_clock::now();
  const auto split = stratified_split(corpus(), {0.2, 42});
  const auto trained = train_classifier(split.train, LogisticOptions{});
  const auto r = evaluate(*trained.probe, split.test);
  const double t = seconds_since(start);
  return check(r.macro_f1 >= 0.90 && t < 30.0,
               "macro F1 " + num(100 * r.macro_f1, "%.1f") + "% in " + num(t, "%.2f") + " s");
}

Outcome lr_emgsd() {
  const char* path = std::getenv("STEREOSCOPE_EMGSD_PATH");
  if (!path || !*path) return {Status::skip, "STEREOSCOPE_EMGSD_PATH not set"};
  const auto ds = load_dataset(path, format_from_path(path));
  const auto split = stratified_split(ds, {0.2, 42});
  const auto trained = train_classifier(split.train, LogisticOptions{});
  const auto r = evaluate(*trained.probe, split.test);
  return check(std::abs(100 * r.macro_f1 - 67.2) <= 2.0, "macro F1 " + num(100 * r.macro_f1, "%.1f") + "% (target 67.2 +- 2)");
}

Outcome emissions() {
  const double a = estimate_emissions(0.000032, 89911), b = estimate_emissions(0.00351, 77116);
  return check(a == 2.877152 && b == 270.67716, num(a, "%.17g") + " g, " + num(b, "%.17g") + " g");
}

Outcome audit_determinism() {
  const auto cfgs = load_provider_configs(kSrc + "/tests/data/providers.toml");
  const auto provider = make_provider(cfgs.at("replay-a"));
  const auto prompts = load_prompts(kSrc + "/data/llm_prompts.csv").prompts;
  AuditOptions opts;
  opts.clock = [] { return std::string("2024-01-01T00:00:00Z"); };
  const auto& probe = lr_probe();
  const auto run1 = run_audit(*provider, prompts, probe, opts);
  const auto run2 = run_audit(*provider, prompts, probe, opts);
  const auto m = prevalence(run1);
  double recomposed = 0.0;
  for (const auto& [g, gp] : m.groups)
    if (gp.p) recomposed += static_cast<double>(gp.n) / static_cast<double>(m.n) * *gp.p;
  const auto base = fs::temp_directory_path() / ("stereoscope-acceptance-" + std::to_string(::getpid()));
  emit_report({prevalence(run1)}, {}, (base / "a").string());
  emit_report({prevalence(run2)}, {}, (base / "b").string());
  bool same = run_jsonl(run1) == run_jsonl(run2);
  for (const char* f : {"model_prevalence.csv", "group_prevalence.csv", "prevalence_bar.svg", "group_trend.svg"}) {
    if (fs::exists(base / "a" / f) || fs::exists(base / "b" / f))
      same &= testing_support::read_file(base / "a" / f) == testing_support::read_file(base / "b" / f);
  }
  fs::remove_all(base);
  const double gap = std::abs(recomposed - m.p);
  return check(run1.records.size() == 1050 && same && gap <= 1e-12,
               std::to_string(run1.records.size()) + " records, reruns " + (same ? "identical" : "differ") +
                   ", P_M = " + num(m.p, "%.4f") + ", identity gap " + num(gap));
}

Outcome filter_fixtures() {
  const auto wq = filter_winoqueer(load_dataset(kSrc + "/tests/data/winoqueer_fixture.csv", DatasetFormat::csv), {});
  std::map<RemovalReason, int> counts;
  for (auto r : wq.reasons) ++counts[r];
  const bool wq_ok = wq.kept.size() == 4 && counts[RemovalReason::counterfactual] == 3 &&
                     counts[RemovalReason::duplicate] == 3 && counts[RemovalReason::overt_negative] == 2;
  const auto sg = filter_seegull(load_seegull_csv(kSrc + "/tests/data/seegull_fixture.csv"), {});
  std::map<RemovalReason, int> sg_counts;
  for (const auto& r : sg.removals) ++sg_counts[r.reason];
  const bool sg_ok = sg.kept == std::vector<std::string>{"Nigerians scammers", "Albanians criminals", "Zambians lazy"} &&
                     sg_counts[RemovalReason::non_offensive] == 2 && sg_counts[RemovalReason::non_stereotypical] == 2;
  return check(wq_ok && sg_ok, "WinoQueer kept " + std::to_string(wq.kept.size()) + "/12, SeeGULL kept " +
                                   std::to_string(sg.kept.size()) + "/7 (full-scale reductions not checked)");
}

Outcome reference_golden() {
  const char* url = std::getenv("STEREOSCOPE_CHECKPOINT_URL");
  if (!url || !*url) return {Status::skip, "STEREOSCOPE_CHECKPOINT_URL not set"};
  RemoteProbe probe(url, "");
  struct Row {
    const char* text;
    const char* top;
    double value;
  };
  const Row rows[] = {{"Many Islam people are extremists.", "extremists", 0.826},
                      {"The woman's career is as a housewife.", "housewife", 0.446}};
  bool ok = true;
  std::string detail;
  for (const auto& row : rows) {
    const auto ranking = rank_tokens(shap_exact(probe, row.text));
    ok &= ranking.front().token == row.top && std::abs(ranking.front().value - row.value) <= 0.15;
    detail += (detail.empty() ? "" : "; ") + ranking.front().token + " " + num(ranking.front().value, "%.3f");
  }
  return check(ok, detail);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"shapley-oracle-equivalence", shapley_oracle},
      {"shap-local-accuracy", local_accuracy},
      {"sampled-shap-consistency", sampled_consistency},
      {"lime-linear-recovery", lime_recovery},
      {"agreement-metrics", agreement_metrics},
      {"significance-pipeline", significance},
      {"macro-f1", macro_f1_suite},
      {"lr-baseline-desk-scale", lr_desk},
      {"lr-baseline-emgsd", lr_emgsd},
      {"emissions-arithmetic", emissions},
      {"audit-determinism", audit_determinism},
      {"filter-fixtures", filter_fixtures},
      {"reference-golden-checkpoint", reference_golden},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    failures += o.status == Status::fail;
    std::printf("%s %s: %s\n", tag, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
