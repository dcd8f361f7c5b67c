#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "stereoscope/corpus.hpp"
#include "stereoscope/error.hpp"
#include "stereoscope/kde.hpp"
#include "stereoscope/prompts.hpp"

using namespace stereoscope;

namespace {

const char* kHeader = "stereotype_type,text,category,data_source,label\n";

LabeledDataset small_dataset(std::size_t stereo, std::size_t other) {
  LabeledDataset ds;
  ds.name = "small";
  for (std::size_t i = 0; i < stereo; ++i)
    ds.instances.push_back(make_instance(StereotypeType::gender, "s" + std::to_string(i), Category::stereotype, "t"));
  for (std::size_t i = 0; i < other; ++i)
    ds.instances.push_back(make_instance(StereotypeType::race, "n" + std::to_string(i),
                                         i % 3 ? Category::neutral : Category::unrelated, "u"));
  return ds;
}

}  // namespace

TEST_CASE("labels derive from category and group") {
  CHECK(derive_label(Category::stereotype, StereotypeType::lgbtq) == "stereotype_lgbtq+");
  CHECK(derive_label(Category::neutral, StereotypeType::race) == "neutral_race");
  CHECK(derive_label(Category::unrelated, StereotypeType::gender) == "unrelated");
  CHECK(parse_stereotype_type("LGBTQ+") == StereotypeType::lgbtq);
  CHECK(parse_stereotype_type("lgbtq") == StereotypeType::lgbtq);
  CHECK_THROWS_AS(parse_stereotype_type("age"), DataError);
  CHECK(make_instance(StereotypeType::religion, "x", Category::stereotype, "d").binary_label() == 1);
  CHECK(make_instance(StereotypeType::religion, "x", Category::unrelated, "d").binary_label() == 0);
  CHECK_THROWS_AS(make_instance(StereotypeType::religion, "", Category::neutral, "d"), DataError);
}

TEST_CASE("CSV and JSONL datasets load the same instances") {
  const std::string csv = std::string(kHeader) +
                          "gender,Women are bad drivers.,stereotype,MGSD,stereotype_gender\n"
                          "race,\"A man, tall, walked.\",neutral,MGSD,neutral_race\n"
                          "religion,The sky is green.,unrelated,MGSD,unrelated\n";
  const std::string jsonl =
      "{\"stereotype_type\":\"gender\",\"text\":\"Women are bad drivers.\",\"category\":\"stereotype\","
      "\"data_source\":\"MGSD\",\"label\":\"stereotype_gender\"}\n"
      "{\"stereotype_type\":\"race\",\"text\":\"A man, tall, walked.\",\"category\":\"neutral\","
      "\"data_source\":\"MGSD\",\"label\":\"neutral_race\"}\n\n"
      "{\"stereotype_type\":\"religion\",\"text\":\"The sky is green.\",\"category\":\"unrelated\","
      "\"data_source\":\"MGSD\",\"label\":\"unrelated\"}\n";
  const auto a = parse_dataset(csv, DatasetFormat::csv);
  const auto b = parse_dataset(jsonl, DatasetFormat::jsonl);
  REQUIRE(a.size() == 3);
  REQUIRE(b.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.instances[i].text == b.instances[i].text);
    CHECK(a.instances[i].label == b.instances[i].label);
  }
  CHECK(format_from_path("x.jsonl") == DatasetFormat::jsonl);
  CHECK(format_from_path("x.csv") == DatasetFormat::csv);
  // Round trip through the writer.
  const auto c = parse_dataset(format_dataset_csv(a), DatasetFormat::csv);
  CHECK(c.instances[1].text == "A man, tall, walked.");
}

TEST_CASE("dataset errors name every bad row") {
  const std::string csv = std::string(kHeader) +
                          "gender,ok,stereotype,MGSD,stereotype_gender\n"
                          "age,bad group,stereotype,MGSD,stereotype_age\n"
                          "race,,neutral,MGSD,neutral_race\n"
                          "race,mislabelled,neutral,MGSD,stereotype_race\n";
  try {
    parse_dataset(csv, DatasetFormat::csv);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string what = e.what();
    CHECK(what.find("row 2") != std::string::npos);
    CHECK(what.find("row 3") != std::string::npos);
    CHECK(what.find("row 4") != std::string::npos);
    CHECK(what.find("row 1:") == std::string::npos);
  }
  CHECK_THROWS_AS(parse_dataset(kHeader, DatasetFormat::csv), DataError);
  CHECK_THROWS_AS(parse_dataset(std::string(kHeader) + "gender,bad \xC3,stereotype,M,stereotype_gender\n",
                                DatasetFormat::csv),
                  DataError);
  CHECK_THROWS_AS(parse_dataset("stereotype_type,text\ngender,x\n", DatasetFormat::csv), DataError);
  CHECK_THROWS_AS(load_dataset("/nonexistent/file.csv", DatasetFormat::csv), Error);
}

TEST_CASE("stratified test counts") {
  CHECK(stratified_test_counts({1000, 1000}, 0.2) == std::vector<std::size_t>{200, 200});
  CHECK(stratified_test_counts({7, 3}, 0.2) == std::vector<std::size_t>{1, 1});
  // 1.5 and 1.5 round up to 4 in total; the target is 3, taken off the first largest class.
  CHECK(stratified_test_counts({5, 5}, 0.3) == std::vector<std::size_t>{1, 2});
  CHECK(stratified_test_counts({11, 4}, 0.2) == std::vector<std::size_t>{2, 1});
  CHECK(stratified_test_counts({899, 1101}, 0.2) == std::vector<std::size_t>{180, 220});
  CHECK_THROWS_AS(stratified_test_counts({5, 5}, 0.0), UsageError);
  CHECK_THROWS_AS(stratified_test_counts({5, 5}, 1.0), UsageError);
}

TEST_CASE("stratified split preserves class proportions and order") {
  const auto ds = small_dataset(45, 55);
  const auto split = stratified_split(ds, {0.2, 42});
  CHECK(split.test.size() == 20);
  CHECK(split.train.size() == 80);
  std::size_t test_stereo = 0;
  for (const auto& i : split.test.instances) test_stereo += i.binary_label();
  CHECK(test_stereo == 9);
  // Input order is preserved within each half.
  std::vector<std::string> order;
  for (const auto& i : ds.instances) order.push_back(i.text);
  auto position = [&](const std::string& t) { return std::find(order.begin(), order.end(), t) - order.begin(); };
  for (std::size_t i = 1; i < split.train.size(); ++i)
    CHECK(position(split.train.instances[i - 1].text) < position(split.train.instances[i].text));
  // Deterministic for a seed; disjoint and complete.
  const auto again = stratified_split(ds, {0.2, 42});
  for (std::size_t i = 0; i < split.test.size(); ++i) CHECK(again.test.instances[i].text == split.test.instances[i].text);
  std::set<std::string> all;
  for (const auto& i : split.train.instances) all.insert(i.text);
  for (const auto& i : split.test.instances) all.insert(i.text);
  CHECK(all.size() == 100);
  const auto other = stratified_split(ds, {0.2, 7});
  bool differs = false;
  for (std::size_t i = 0; i < split.test.size(); ++i) differs |= other.test.instances[i].text != split.test.instances[i].text;
  CHECK(differs);
}

TEST_CASE("split needs two instances per class") {
  CHECK_THROWS_AS(stratified_split(small_dataset(1, 10), {}), DataError);
  CHECK_THROWS_AS(stratified_split(small_dataset(10, 0), {}), DataError);
}

TEST_CASE("distribution report") {
  const auto rows = distribution_report(small_dataset(4, 6));
  double category_total = 0.0;
  std::size_t count_total = 0;
  for (const auto& r : rows) {
    if (r.grouping == "category") {
      category_total += r.proportion;
      count_total += r.count;
    }
    CHECK(r.count > 0);
  }
  CHECK(category_total == doctest::Approx(1.0));
  CHECK(count_total == 10);
  CHECK(rows.front().grouping == "category");
  CHECK(rows.front().level == "neutral");
  CHECK(rows.front().count == 4);
}

TEST_CASE("KDE integrates to one and matches the direct formula") {
  const std::vector<double> values = {12, 15, 15, 18, 22, 30, 31, 45, 47, 60};
  const double h = silverman_bandwidth(values);
  CHECK(h > 0.0);
  const auto grid = linear_grid(-100.0, 200.0, 3001);
  CHECK(grid.front() == -100.0);
  CHECK(grid.back() == 200.0);
  const auto par = gaussian_kde(values, h, grid, Exec::parallel);
  const auto ser = gaussian_kde(values, h, grid, Exec::serial);
  double integral = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) integral += 0.5 * (par[i] + par[i - 1]) * (grid[i] - grid[i - 1]);
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
  for (std::size_t i = 0; i < grid.size(); i += 97) {
    double want = 0.0;
    for (double v : values) want += std::exp(-0.5 * std::pow((grid[i] - v) / h, 2)) / (h * std::sqrt(2 * M_PI));
    want /= values.size();
    CHECK(par[i] == doctest::Approx(want).epsilon(1e-12));
    CHECK(par[i] == doctest::Approx(ser[i]).epsilon(1e-14));
  }
}

TEST_CASE("Silverman bandwidth") {
  // sd of 1..5 = sqrt(2.5); quartiles 2 and 4 give IQR/1.34 = 1.4925...
  const std::vector<double> v = {1, 2, 3, 4, 5};
  const double want = 0.9 * std::min(std::sqrt(2.5), 2.0 / 1.34) * std::pow(5.0, -0.2);
  CHECK(silverman_bandwidth(v) == doctest::Approx(want).epsilon(1e-12));
  CHECK_THROWS_AS(silverman_bandwidth(std::vector<double>{3, 3, 3}), DataError);
}

TEST_CASE("text lengths count characters, not bytes") {
  LabeledDataset ds;
  ds.instances.push_back(make_instance(StereotypeType::race, "café", Category::neutral, "x"));
  ds.instances.push_back(make_instance(StereotypeType::race, "ab", Category::neutral, "x"));
  CHECK(text_lengths(ds) == std::vector<double>{4, 2});
}

TEST_CASE("augmentation prompts") {
  const auto p = render_augmentation_prompt(AugmentationTemplate::winoqueer, {"Gay people are loud.", "Lesbians are bossy."});
  CHECK(p.find("Gay people are loud.") != std::string::npos);
  CHECK(p.find("Lesbians are bossy.") > p.find("Gay people are loud."));
  CHECK(parse_augmentation_template(to_string(AugmentationTemplate::seegull_sentences)) ==
        AugmentationTemplate::seegull_sentences);
  CHECK_THROWS_AS(parse_augmentation_template("nope"), UsageError);
  CHECK_THROWS_AS(render_augmentation_prompt(AugmentationTemplate::winoqueer, {}), UsageError);
}

TEST_CASE("bundled synthetic corpus loads") {
  const auto ds = load_dataset(STEREOSCOPE_SOURCE_DIR "/data/synthetic_corpus.csv", DatasetFormat::csv);
  CHECK(ds.size() == 2000);
}
