#include "stereoscope/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <json.hpp>
#include <sstream>

#include "stereoscope/csv.hpp"
#include "stereoscope/error.hpp"
#include "stereoscope/rng.hpp"
#include "stereoscope/text.hpp"

namespace stereoscope {

namespace {

constexpr std::array<std::string_view, 5> kSchema = {"stereotype_type", "text", "category", "data_source", "label"};

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
  }
  return out;
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct RawRow {
  std::size_t row;
  std::string fields[5];
};

TextInstance build_row(const RawRow& raw) {
  if (!is_valid_utf8(raw.fields[1])) throw DataError("malformed UTF-8 in text", raw.row);
  const StereotypeType t = parse_stereotype_type(trim(raw.fields[0]));
  const Category c = parse_category(trim(raw.fields[2]));
  if (trim(raw.fields[1]).empty()) throw DataError("empty text");
  TextInstance inst = make_instance(t, raw.fields[1], c, trim(raw.fields[3]));
  const std::string given = trim(raw.fields[4]);
  if (!given.empty() && ascii_lower(given) != ascii_lower(inst.label)) {
    throw DataError("label '" + given + "' inconsistent with category/stereotype_type (expected '" + inst.label +
                    "')");
  }
  return inst;
}

}  // namespace

std::string_view to_string(StereotypeType t) {
  switch (t) {
    case StereotypeType::race: return "race";
    case StereotypeType::nationality: return "nationality";
    case StereotypeType::profession: return "profession";
    case StereotypeType::gender: return "gender";
    case StereotypeType::religion: return "religion";
    case StereotypeType::lgbtq: return "lgbtq+";
  }
  return "race";
}

std::string_view to_string(Category c) {
  switch (c) {
    case Category::stereotype: return "stereotype";
    case Category::neutral: return "neutral";
    case Category::unrelated: return "unrelated";
  }
  return "neutral";
}

StereotypeType parse_stereotype_type(std::string_view s) {
  const std::string v = ascii_lower(s);
  for (auto t : kStereotypeTypes) {
    if (v == to_string(t)) return t;
  }
  if (v == "lgbtq") return StereotypeType::lgbtq;
  throw DataError("unknown stereotype_type '" + std::string(s) + "'");
}

Category parse_category(std::string_view s) {
  const std::string v = ascii_lower(s);
  if (v == "stereotype") return Category::stereotype;
  if (v == "neutral") return Category::neutral;
  if (v == "unrelated") return Category::unrelated;
  throw DataError("unknown category '" + std::string(s) + "'");
}

std::string derive_label(Category c, StereotypeType t) {
  if (c == Category::unrelated) return "unrelated";
  return std::string(to_string(c)) + "_" + std::string(to_string(t));
}

TextInstance make_instance(StereotypeType t, std::string text, Category c, std::string data_source) {
  if (trim(text).empty()) throw DataError("empty text");
  TextInstance inst;
  inst.stereotype_type = t;
  inst.text = std::move(text);
  inst.category = c;
  inst.data_source = std::move(data_source);
  inst.label = derive_label(c, t);
  return inst;
}

DatasetFormat format_from_path(std::string_view path) {
  const auto dot = path.rfind('.');
  if (dot != std::string_view::npos) {
    const std::string ext = ascii_lower(path.substr(dot + 1));
    if (ext == "jsonl" || ext == "json" || ext == "ndjson") return DatasetFormat::jsonl;
  }
  return DatasetFormat::csv;
}

LabeledDataset parse_dataset(std::string_view content, DatasetFormat format, std::string name) {
  if (!is_valid_utf8(content)) {
    // Locate the offending row for the message.
    std::size_t line = 1;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= content.size(); ++i) {
      if (i == content.size() || content[i] == '\n') {
        if (!is_valid_utf8(content.substr(start, i - start))) {
          throw DataError("malformed UTF-8 at line " + std::to_string(line));
        }
        ++line;
        start = i + 1;
      }
    }
    throw DataError("malformed UTF-8");
  }

  std::vector<RawRow> raw;
  if (format == DatasetFormat::csv) {
    const csv::Table table = csv::parse(content);
    if (table.header.empty()) throw DataError("no instances");
    std::size_t idx[5];
    for (std::size_t k = 0; k < 5; ++k) {
      idx[k] = table.column(kSchema[k]);
      if (idx[k] == std::string::npos) throw DataError("missing column '" + std::string(kSchema[k]) + "'");
    }
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      RawRow row{r + 1, {}};
      const auto& fields = table.rows[r];
      for (std::size_t k = 0; k < 5; ++k) {
        row.fields[k] = idx[k] < fields.size() ? fields[idx[k]] : std::string();
      }
      if (fields.size() != table.header.size()) {
        throw DataError("expected " + std::to_string(table.header.size()) + " fields, found " +
                            std::to_string(fields.size()),
                        r + 1);
      }
      raw.push_back(std::move(row));
    }
  } else {
    std::size_t row = 0;
    std::istringstream in{std::string(content)};
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      ++row;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("invalid JSON: ") + e.what(), row);
      }
      if (!obj.is_object()) throw DataError("expected a JSON object", row);
      RawRow r{row, {}};
      for (std::size_t k = 0; k < 5; ++k) {
        const auto it = obj.find(std::string(kSchema[k]));
        if (it == obj.end()) {
          if (k == 4) continue;  // label may be derived
          throw DataError("missing field '" + std::string(kSchema[k]) + "'", row);
        }
        if (!it->is_string()) throw DataError("field '" + std::string(kSchema[k]) + "' must be a string", row);
        r.fields[k] = it->get<std::string>();
      }
      raw.push_back(std::move(r));
    }
  }

  LabeledDataset ds;
  ds.name = std::move(name);
  std::vector<std::string> problems;
  for (const auto& r : raw) {
    try {
      ds.instances.push_back(build_row(r));
    } catch (const DataError& e) {
      const std::string msg = e.what();
      problems.push_back(msg.rfind("row ", 0) == 0 ? msg : "row " + std::to_string(r.row) + ": " + msg);
    }
  }
  if (!problems.empty()) {
    std::string msg = std::to_string(problems.size()) + " row(s) rejected";
    for (const auto& p : problems) msg += "\n  " + p;
    throw DataError(msg);
  }
  if (ds.instances.empty()) throw DataError("no instances");
  return ds;
}

LabeledDataset load_dataset(const std::string& path, DatasetFormat format) {
  std::string name = path;
  const auto slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  return parse_dataset(read_all(path), format, name);
}

std::string format_dataset_csv(const LabeledDataset& ds) {
  std::string out = csv::format_row({"stereotype_type", "text", "category", "data_source", "label"});
  for (const auto& i : ds.instances) {
    out += csv::format_row(
        {std::string(to_string(i.stereotype_type)), i.text, std::string(to_string(i.category)), i.data_source, i.label});
  }
  return out;
}

void write_dataset_csv(const std::string& path, const LabeledDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << format_dataset_csv(ds);
}

std::vector<std::size_t> stratified_test_counts(const std::vector<std::size_t>& class_sizes, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw UsageError("test_fraction must lie in (0, 1)");
  std::vector<std::size_t> counts(class_sizes.size(), 0);
  if (class_sizes.empty()) return counts;
  std::size_t total = 0;
  long assigned = 0;
  std::size_t largest = 0;
  for (std::size_t c = 0; c < class_sizes.size(); ++c) {
    total += class_sizes[c];
    counts[c] = static_cast<std::size_t>(std::llround(static_cast<double>(class_sizes[c]) * fraction));
    assigned += static_cast<long>(counts[c]);
    if (class_sizes[c] > class_sizes[largest]) largest = c;
  }
  const long target = std::llround(static_cast<double>(total) * fraction);
  const long adjusted = static_cast<long>(counts[largest]) + (target - assigned);
  counts[largest] = static_cast<std::size_t>(std::clamp(adjusted, 0L, static_cast<long>(class_sizes[largest])));
  return counts;
}

Split stratified_split(const LabeledDataset& ds, const SplitSpec& spec) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < ds.instances.size(); ++i) by_class[ds.instances[i].binary_label()].push_back(i);
  static constexpr const char* kNames[2] = {"non-stereotype (0)", "stereotype (1)"};
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < 2) {
      throw DataError(std::string("class ") + kNames[c] + " has " + std::to_string(by_class[c].size()) +
                      " instance(s); stratified split needs at least 2");
    }
  }
  const auto counts = stratified_test_counts({by_class[0].size(), by_class[1].size()}, spec.test_fraction);

  Rng rng(spec.seed);
  std::vector<char> in_test(ds.instances.size(), 0);
  for (int c = 0; c < 2; ++c) {
    auto idx = by_class[c];
    rng.shuffle(std::span<std::size_t>(idx));
    for (std::size_t k = 0; k < counts[static_cast<std::size_t>(c)]; ++k) in_test[idx[k]] = 1;
  }
  Split out;
  out.train.name = ds.name + ":train";
  out.test.name = ds.name + ":test";
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    (in_test[i] ? out.test : out.train).instances.push_back(ds.instances[i]);
  }
  return out;
}

std::vector<DistributionRow> distribution_report(const LabeledDataset& ds) {
  std::vector<DistributionRow> rows;
  const auto n = static_cast<double>(ds.size());
  auto emit = [&](const char* grouping, const std::map<std::string, std::size_t>& counts) {
    for (const auto& [level, count] : counts) {
      if (count == 0) continue;
      rows.push_back({grouping, level, count, static_cast<double>(count) / n});
    }
  };
  std::map<std::string, std::size_t> cat, type, source;
  for (const auto& i : ds.instances) {
    ++cat[std::string(to_string(i.category))];
    ++type[std::string(to_string(i.stereotype_type))];
    ++source[i.data_source];
  }
  emit("category", cat);
  emit("stereotype_type", type);
  emit("data_source", source);
  return rows;
}

}  // namespace stereoscope
