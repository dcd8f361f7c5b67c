#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stereoscope {

enum class StereotypeType { race, nationality, profession, gender, religion, lgbtq };
enum class Category { stereotype, neutral, unrelated };

inline constexpr std::array kStereotypeTypes = {StereotypeType::race,     StereotypeType::nationality,
                                                StereotypeType::profession, StereotypeType::gender,
                                                StereotypeType::religion, StereotypeType::lgbtq};

std::string_view to_string(StereotypeType t);
std::string_view to_string(Category c);
// Case-insensitive; "lgbtq+" and "lgbtq" both name the same group. Throws DataError.
StereotypeType parse_stereotype_type(std::string_view s);
Category parse_category(std::string_view s);

// Derived label: "<category>_<stereotype_type>", or bare "unrelated".
std::string derive_label(Category c, StereotypeType t);

struct TextInstance {
  StereotypeType stereotype_type = StereotypeType::race;
  std::string text;
  Category category = Category::neutral;
  std::string data_source;
  std::string label;

  int binary_label() const { return category == Category::stereotype ? 1 : 0; }
};

// Builds an instance with a consistent label. Throws DataError on empty text.
TextInstance make_instance(StereotypeType t, std::string text, Category c, std::string data_source);

struct LabeledDataset {
  std::string name;
  std::vector<TextInstance> instances;

  std::size_t size() const { return instances.size(); }
  bool empty() const { return instances.empty(); }
};

enum class DatasetFormat { csv, jsonl };

// Guesses the format from the file extension (.jsonl/.json -> jsonl, else csv).
DatasetFormat format_from_path(std::string_view path);

/// Loads a dataset with the five-field schema
/// stereotype_type,text,category,data_source,label.
///
/// Every rejected row is collected and reported together in one DataError,
/// each line prefixed with its row number (1-based, header excluded).
/// Malformed UTF-8 anywhere is a hard error. A file without rows fails with
/// "no instances".
LabeledDataset load_dataset(const std::string& path, DatasetFormat format);
LabeledDataset parse_dataset(std::string_view content, DatasetFormat format, std::string name = "dataset");

void write_dataset_csv(const std::string& path, const LabeledDataset& ds);
std::string format_dataset_csv(const LabeledDataset& ds);

// ---------------------------------------------------------------------------
// Split

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 42;
};

struct Split {
  LabeledDataset train;
  LabeledDataset test;
};

// Per-class test counts: round(size * fraction) each, with the residual
// against round(total * fraction) applied to the largest class.
std::vector<std::size_t> stratified_test_counts(const std::vector<std::size_t>& class_sizes, double fraction);

// Stratified on binary_label(). Both halves keep the input order.
Split stratified_split(const LabeledDataset& ds, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Distribution report

struct DistributionRow {
  std::string grouping;  // "category", "stereotype_type" or "data_source"
  std::string level;
  std::size_t count = 0;
  double proportion = 0.0;
};

// Levels with zero instances are omitted. Rows are ordered by grouping, then level.
std::vector<DistributionRow> distribution_report(const LabeledDataset& ds);

}  // namespace stereoscope
