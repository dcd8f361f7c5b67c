#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "stereoscope/parallel.hpp"

namespace stereoscope {

// Compressed sparse rows. Column indices within a row are strictly increasing.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }
  void append_row(std::span<const std::uint32_t> cols_in_row, std::span<const double> vals);
  double row_dot(std::size_t r, std::span<const double> dense) const;

  // Column-major copy (CSC as CSR of the transpose).
  SparseMatrix transpose() const;

  static SparseMatrix from_dense(const std::vector<std::vector<double>>& dense);
};

/// TF-IDF with smoothed idf: idf_j = ln((1 + N) / (1 + df_j)) + 1.
///
/// Term frequency is the raw count of the lowercased token in the document.
/// Rows are L2-normalised; a document with no known tokens becomes a zero row.
/// Vocabulary indices follow lexicographic byte order of the tokens.
class TfidfVectorizer {
 public:
  TfidfVectorizer() = default;
  TfidfVectorizer(std::vector<std::string> vocabulary, std::vector<double> idf, std::size_t doc_count);

  static TfidfVectorizer fit(std::span<const std::string> documents);

  SparseMatrix transform(std::span<const std::string> documents, Exec exec = Exec::parallel) const;

  std::size_t size() const { return vocabulary_.size(); }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::vector<double>& idf() const { return idf_; }
  std::size_t doc_count() const { return doc_count_; }
  // -1 when absent.
  long index_of(const std::string& token) const;

 private:
  void transform_one(const std::string& doc, std::vector<std::uint32_t>& cols, std::vector<double>& vals) const;

  std::vector<std::string> vocabulary_;
  std::vector<double> idf_;
  std::size_t doc_count_ = 0;
  std::unordered_map<std::string, std::uint32_t> index_;
};

}  // namespace stereoscope
