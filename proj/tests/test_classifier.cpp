#include <doctest.h>

#include <chrono>
#include <cmath>

#include <json.hpp>

#include "oracles.hpp"
#include "stereoscope/classifier.hpp"
#include "stereoscope/error.hpp"
#include "stereoscope/evaluate.hpp"
#include "stereoscope/logistic.hpp"
#include "stereoscope/tfidf.hpp"

using namespace stereoscope;

namespace {

const std::vector<std::vector<double>> kX = {
    {1.0, 0.0, 0.5}, {0.8, 0.3, 0.0}, {0.0, 1.0, 0.2}, {0.1, 0.9, 0.7}, {0.6, 0.6, 0.1}, {0.2, 0.1, 1.0},
};
const std::vector<int> kY = {1, 1, 0, 0, 1, 0};

struct Solved {
  Penalty penalty;
  double C;
  std::vector<double> w;
  double b;
  double objective;
};

// Frozen from tests/oracles/logistic_6x3.py (cvxpy, Clarabel).
const std::vector<Solved> kSolved = {
    {Penalty::l2, 1.0, {0.794949455, -0.381878026, -0.517888863}, 0.043413666, 0.578356976006},
    {Penalty::l2, 10.0, {3.033810094, -1.146556601, -2.114121246}, 0.103866388, 0.300174562068},
    {Penalty::l1, 1.0, {0.239750251, 0.0, 0.0}, -0.107875565, 0.692148699121},
    {Penalty::l1, 10.0, {7.565456198, 0.0, -1.521823582}, -2.549662288, 0.214435673087},
    {Penalty::l1, 0.5, {0.0, 0.0, 0.0}, 0.0, 0.693147180560},
};

TextInstance inst(const std::string& text, int label, StereotypeType t = StereotypeType::gender) {
  return make_instance(t, text, label ? Category::stereotype : Category::neutral, "test");
}

}  // namespace

TEST_CASE("TF-IDF idf and normalisation") {
  const std::vector<std::string> docs = {"the cat sat", "the dog", "the cat, the cat!"};
  const auto v = TfidfVectorizer::fit(docs);
  CHECK(v.vocabulary() == std::vector<std::string>{"cat", "dog", "sat", "the"});
  CHECK(v.idf()[static_cast<std::size_t>(v.index_of("the"))] == doctest::Approx(1.0));
  CHECK(v.idf()[static_cast<std::size_t>(v.index_of("dog"))] == doctest::Approx(std::log(4.0 / 2.0) + 1.0));
  CHECK(v.idf()[static_cast<std::size_t>(v.index_of("cat"))] == doctest::Approx(std::log(4.0 / 3.0) + 1.0));
  CHECK(v.index_of("bird") == -1);
  for (double idf : v.idf()) CHECK(idf >= 1.0);

  const std::vector<std::string> probe = {"The CAT the", "bird", "cat cat dog"};
  const auto X = v.transform(probe);
  CHECK(X.rows == 3);
  CHECK(X.cols == 4);
  // Row 0: tf(cat)=1, tf(the)=2.
  const double cat = std::log(4.0 / 3.0) + 1.0, the = 2.0;
  const double norm = std::hypot(cat, the);
  REQUIRE(X.row_ptr[1] - X.row_ptr[0] == 2);
  CHECK(X.values[0] == doctest::Approx(cat / norm));
  CHECK(X.values[1] == doctest::Approx(the / norm));
  CHECK(X.row_ptr[2] == X.row_ptr[1]);  // unseen tokens only: zero row
  double ss = 0.0;
  for (std::size_t k = X.row_ptr[2]; k < X.row_ptr[3]; ++k) ss += X.values[k] * X.values[k];
  CHECK(ss == doctest::Approx(1.0));
  const auto Xs = v.transform(probe, Exec::serial);
  CHECK(Xs.values == X.values);
  CHECK(Xs.col_idx == X.col_idx);

  CHECK(TfidfVectorizer::fit(std::vector<std::string>{"only one"}).idf() == std::vector<double>{1.0, 1.0});
  CHECK_THROWS_AS(TfidfVectorizer::fit(std::vector<std::string>{"...", "!!"}), DataError);
}

TEST_CASE("sparse matrix helpers") {
  const auto X = SparseMatrix::from_dense(kX);
  CHECK(X.rows == 6);
  CHECK(X.cols == 3);
  CHECK(X.nnz() == 15);
  const std::vector<double> w = {1.0, 2.0, 3.0};
  CHECK(X.row_dot(0, w) == doctest::Approx(2.5));
  const auto T = X.transpose();
  CHECK(T.rows == 3);
  CHECK(T.row_dot(2, std::vector<double>{1, 1, 1, 1, 1, 1}) == doctest::Approx(2.5));
}

TEST_CASE("logistic regression matches the convex-solver oracle") {
  const auto X = SparseMatrix::from_dense(kX);
  for (const auto& s : kSolved) {
    CAPTURE(to_string(s.penalty));
    CAPTURE(s.C);
    LogisticOptions opts;
    opts.penalty = s.penalty;
    opts.C = s.C;
    opts.max_iterations = 20000;
    const auto r = train_logistic(X, kY, opts);
    CHECK(r.trace.converged);
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(r.model.weights[j] - s.w[j]) <= 1e-3);
    CHECK(std::abs(r.model.bias - s.b) <= 1e-3);
    CHECK(r.trace.objective.back() == doctest::Approx(s.objective).epsilon(1e-7));
    // Monotone objective.
    for (std::size_t i = 1; i < r.trace.objective.size(); ++i)
      CHECK(r.trace.objective[i] <= r.trace.objective[i - 1] + 1e-15);
    if (s.penalty == Penalty::l1) {
      for (std::size_t j = 0; j < 3; ++j)
        if (s.w[j] == 0.0) CHECK(r.model.weights[j] == 0.0);
    }
  }
}

TEST_CASE("logistic gradient matches finite differences") {
  const auto X = SparseMatrix::from_dense(kX);
  const auto Xt = X.transpose();
  const std::vector<double> theta = {0.3, -0.2, 0.5, 0.1};
  std::vector<double> grad;
  const double f = logistic_objective(X, Xt, kY, theta, 0.25, &grad, Exec::serial);
  for (std::size_t j = 0; j < theta.size(); ++j) {
    auto up = theta, dn = theta;
    up[j] += 1e-6;
    dn[j] -= 1e-6;
    const double fd = (logistic_objective(X, Xt, kY, up, 0.25, nullptr, Exec::serial) -
                       logistic_objective(X, Xt, kY, dn, 0.25, nullptr, Exec::serial)) / 2e-6;
    CHECK(grad[j] == doctest::Approx(fd).epsilon(1e-6));
  }
  std::vector<double> gp;
  CHECK(logistic_objective(X, Xt, kY, theta, 0.25, &gp, Exec::parallel) == doctest::Approx(f).epsilon(1e-14));
}

TEST_CASE("logistic regression edge cases") {
  SUBCASE("separable pair is fit perfectly") {
    const auto X = SparseMatrix::from_dense({{1.0, 0.0}, {0.0, 1.0}});
    LogisticOptions opts;
    opts.penalty = Penalty::l2;
    const auto r = train_logistic(X, std::vector<int>{1, 0}, opts);
    CHECK(r.model.predict_proba(X, 0) > 0.5);
    CHECK(r.model.predict_proba(X, 1) < 0.5);
  }
  SUBCASE("labels independent of identical rows") {
    const auto X = SparseMatrix::from_dense({{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}});
    LogisticOptions opts;
    opts.penalty = Penalty::l1;
    const auto r = train_logistic(X, std::vector<int>{1, 0, 0, 0}, opts);
    for (double w : r.model.weights) CHECK(w == 0.0);
    CHECK(r.model.bias == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-5));
  }
  const auto X = SparseMatrix::from_dense(kX);
  CHECK_THROWS_AS(train_logistic(X, std::vector<int>(6, 1), {}), DataError);
  CHECK_THROWS_AS(train_logistic(X, std::vector<int>{1, 0}, {}), DataError);
  auto bad = kX;
  bad[2][1] = std::nan("");
  CHECK_THROWS_AS(train_logistic(SparseMatrix::from_dense(bad), kY, {}), DataError);
  CHECK(parse_penalty("l1") == Penalty::l1);
  CHECK_THROWS_AS(parse_penalty("elasticnet"), UsageError);
}

TEST_CASE("logistic training is deterministic and kernel independent") {
  const auto ds = load_dataset(STEREOSCOPE_SOURCE_DIR "/data/synthetic_corpus.csv", DatasetFormat::csv);
  LogisticOptions opts;
  opts.max_iterations = 200;
  const auto a = train_classifier(ds, opts);
  const auto b = train_classifier(ds, opts);
  opts.exec = Exec::serial;
  const auto s = train_classifier(ds, opts);
  CHECK(a.probe->model().weights == b.probe->model().weights);
  double worst = 0.0;
  for (std::size_t j = 0; j < a.probe->model().weights.size(); ++j)
    worst = std::max(worst, std::abs(a.probe->model().weights[j] - s.probe->model().weights[j]));
  CHECK(worst <= 1e-6);
}

TEST_CASE("macro F1 formulas") {
  SUBCASE("hand-computed confusion") {
    // 40 TP, 10 FP, 10 FN, 40 TN.
    Confusion c{};
    c[1][1] = 40;
    c[0][1] = 10;
    c[1][0] = 10;
    c[0][0] = 40;
    CHECK(class_f1(c, 1) == doctest::Approx(0.8));
    CHECK(class_f1(c, 0) == doctest::Approx(0.8));
    CHECK(macro_f1(c) == doctest::Approx(0.8));
  }
  SUBCASE("asymmetric confusion against the count oracle") {
    Confusion c{};
    c[1][1] = 30;
    c[0][1] = 5;
    c[1][0] = 15;
    c[0][0] = 50;
    const double f1_1 = oracle::f1(30, 5, 15), f1_0 = oracle::f1(50, 15, 5);
    CHECK(class_f1(c, 1) == f1_1);
    CHECK(class_f1(c, 0) == f1_0);
    CHECK(macro_f1(c) == (f1_0 + f1_1) / 2);
    CHECK(f1_1 == doctest::Approx(0.75));  // 2*30 / (2*30 + 5 + 15)
  }
  SUBCASE("0/0 convention") {
    Confusion c{};
    c[0][0] = 10;
    CHECK(class_f1(c, 1) == 0.0);
    CHECK(class_f1(c, 0) == 1.0);
    CHECK(macro_f1(c) == 0.5);
  }
  SUBCASE("perfect and inverted predictors") {
    LabeledDataset ds;
    std::vector<double> perfect, inverted;
    for (int i = 0; i < 20; ++i) {
      ds.instances.push_back(inst("sentence " + std::to_string(i), i % 2));
      perfect.push_back(i % 2 ? 0.9 : 0.1);
      inverted.push_back(i % 2 ? 0.1 : 0.9);
    }
    CHECK(evaluate_predictions(ds, perfect).macro_f1 == 1.0);
    CHECK(evaluate_predictions(ds, inverted).macro_f1 == 0.0);
  }
}

TEST_CASE("evaluation breakdowns by group and character length") {
  LabeledDataset ds;
  std::vector<double> probs;
  // Ten 5-character texts (all correct), nine 7-character texts (below the floor).
  for (int i = 0; i < 10; ++i) {
    ds.instances.push_back(inst("abcd" + std::to_string(i), i % 2, StereotypeType::race));
    probs.push_back(i % 2 ? 0.8 : 0.2);
  }
  for (int i = 0; i < 9; ++i) {
    ds.instances.push_back(inst("ábcdef" + std::to_string(i), i % 2, StereotypeType::gender));
    probs.push_back(0.6);
  }
  const auto r = evaluate_predictions(ds, probs);
  CHECK(r.test_size == 19);
  CHECK(r.per_length_f1.size() == 1);
  CHECK(r.per_length_f1.at(5) == 1.0);
  CHECK(r.per_group_f1.at("race") == 1.0);
  // Gender: 4 positives all predicted 1, 5 negatives all predicted 1.
  CHECK(r.per_group_f1.at("gender") == doctest::Approx((0.0 + oracle::f1(4, 5, 0)) / 2));
  std::size_t total = 0;
  for (const auto& row : r.confusion)
    for (auto v : row) total += v;
  CHECK(total == 19);
  CHECK(r.macro_f1 == (r.per_class_f1[0] + r.per_class_f1[1]) / 2);
  // Threshold is inclusive.
  CHECK(evaluate_predictions(ds, std::vector<double>(19, 0.5)).confusion[1][1] == 9);
  const auto j = nlohmann::json::parse(eval_report_json(r));
  CHECK(j.contains("macro_f1"));
}

TEST_CASE("desk-scale baseline on the synthetic corpus") {
  const auto start = std::chrono::steady_clock::now();
  const auto ds = load_dataset(STEREOSCOPE_SOURCE_DIR "/data/synthetic_corpus.csv", DatasetFormat::csv);
  const auto split = stratified_split(ds, {0.2, 42});
  const auto trained = train_classifier(split.train, LogisticOptions{});
  const auto r = evaluate(*trained.probe, split.test);
  CHECK(r.macro_f1 >= 0.90);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(30));
}

TEST_CASE("model files round trip") {
  const auto ds = load_dataset(STEREOSCOPE_SOURCE_DIR "/data/synthetic_corpus.csv", DatasetFormat::csv);
  LogisticOptions opts;
  opts.max_iterations = 50;
  const auto trained = train_classifier(ds, opts);
  const auto text = serialize_model(*trained.probe, opts, trained.trace);
  CHECK(nlohmann::json::parse(text)["format_version"] == 1);
  const auto loaded = parse_model(text);
  const std::vector<std::string> probe = {"Nurses are always lazy.", "A nurse bought a lamp on monday.", ""};
  CHECK(loaded->predict_proba(probe) == trained.probe->predict_proba(probe));
  CHECK(serialize_model(*loaded, opts, trained.trace) == text);
  CHECK_THROWS_AS(parse_model("{\"format_version\": 2}"), DataError);
  CHECK_THROWS_AS(parse_model("not json"), DataError);
}

TEST_CASE("emissions arithmetic is exact") {
  CHECK(estimate_emissions(0.000032, 89911) == 2.877152);
  CHECK(estimate_emissions(0.00351, 77116) == 270.67716);
  CHECK(estimate_emissions(0.0, 1000) == 0.0);
  CHECK_THROWS_AS(estimate_emissions(-1.0, 10), UsageError);
  CHECK_THROWS_AS(estimate_emissions(1.0, std::nan("")), UsageError);
}
