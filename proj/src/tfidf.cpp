#include "stereoscope/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "stereoscope/error.hpp"
#include "stereoscope/text.hpp"

namespace stereoscope {

void SparseMatrix::append_row(std::span<const std::uint32_t> cols_in_row, std::span<const double> vals) {
  col_idx.insert(col_idx.end(), cols_in_row.begin(), cols_in_row.end());
  values.insert(values.end(), vals.begin(), vals.end());
  row_ptr.push_back(values.size());
  ++rows;
}

double SparseMatrix::row_dot(std::size_t r, std::span<const double> dense) const {
  double s = 0.0;
  for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += values[k] * dense[col_idx[k]];
  return s;
}

SparseMatrix SparseMatrix::transpose() const {
  SparseMatrix t;
  t.rows = cols;
  t.cols = rows;
  std::vector<std::size_t> counts(cols + 1, 0);
  for (auto c : col_idx) ++counts[c + 1];
  for (std::size_t c = 0; c < cols; ++c) counts[c + 1] += counts[c];
  t.row_ptr = counts;
  t.col_idx.resize(nnz());
  t.values.resize(nnz());
  std::vector<std::size_t> fill(counts.begin(), counts.end() - 1);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      const std::size_t dst = fill[col_idx[k]]++;
      t.col_idx[dst] = static_cast<std::uint32_t>(r);
      t.values[dst] = values[k];
    }
  }
  return t;
}

SparseMatrix SparseMatrix::from_dense(const std::vector<std::vector<double>>& dense) {
  SparseMatrix m;
  m.cols = dense.empty() ? 0 : dense.front().size();
  for (const auto& row : dense) {
    std::vector<std::uint32_t> c;
    std::vector<double> v;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] != 0.0) {
        c.push_back(static_cast<std::uint32_t>(j));
        v.push_back(row[j]);
      }
    }
    m.append_row(c, v);
  }
  return m;
}

TfidfVectorizer::TfidfVectorizer(std::vector<std::string> vocabulary, std::vector<double> idf, std::size_t doc_count)
    : vocabulary_(std::move(vocabulary)), idf_(std::move(idf)), doc_count_(doc_count) {
  if (vocabulary_.size() != idf_.size()) throw DataError("vocabulary and idf lengths differ");
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    if (!index_.emplace(vocabulary_[i], static_cast<std::uint32_t>(i)).second) {
      throw DataError("duplicate vocabulary token '" + vocabulary_[i] + "'");
    }
  }
}

TfidfVectorizer TfidfVectorizer::fit(std::span<const std::string> documents) {
  if (documents.empty()) throw DataError("cannot fit TF-IDF on an empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    const auto toks = lowercase_tokens(doc);
    const std::set<std::string> unique(toks.begin(), toks.end());
    for (const auto& t : unique) ++df[t];
  }
  if (df.empty()) throw DataError("empty vocabulary: no document contains a token");
  const auto n = static_cast<double>(documents.size());
  std::vector<std::string> vocab;
  std::vector<double> idf;
  vocab.reserve(df.size());
  idf.reserve(df.size());
  for (const auto& [tok, count] : df) {
    vocab.push_back(tok);
    idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return TfidfVectorizer(std::move(vocab), std::move(idf), documents.size());
}

long TfidfVectorizer::index_of(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? -1 : static_cast<long>(it->second);
}

void TfidfVectorizer::transform_one(const std::string& doc, std::vector<std::uint32_t>& cols,
                                    std::vector<double>& vals) const {
  std::map<std::uint32_t, double> counts;
  for (const auto& t : lowercase_tokens(doc)) {
    const auto it = index_.find(t);
    if (it != index_.end()) counts[it->second] += 1.0;
  }
  cols.clear();
  vals.clear();
  double norm2 = 0.0;
  for (const auto& [c, tf] : counts) {
    const double v = tf * idf_[c];
    cols.push_back(c);
    vals.push_back(v);
    norm2 += v * v;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : vals) v *= inv;
  }
}

SparseMatrix TfidfVectorizer::transform(std::span<const std::string> documents, Exec exec) const {
  const std::size_t n = documents.size();
  std::vector<std::vector<std::uint32_t>> cols(n);
  std::vector<std::vector<double>> vals(n);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      const auto k = static_cast<std::size_t>(i);
      transform_one(documents[k], cols[k], vals[k]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) transform_one(documents[i], cols[i], vals[i]);
  }
  SparseMatrix m;
  m.cols = vocabulary_.size();
  for (std::size_t i = 0; i < n; ++i) m.append_row(cols[i], vals[i]);
  return m;
}

}  // namespace stereoscope
