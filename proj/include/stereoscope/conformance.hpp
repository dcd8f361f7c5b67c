#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stereoscope {

// Golden request/response suite for servers implementing POST /predict.
//
// The suite assumes a stub model with fixed two-class logits, so every text
// maps to softmax(logits)[label_index]. File format is JSONL: a header line,
// then one line per case.
struct ConformanceSpec {
  std::vector<double> logits{0.25, 1.5};
  std::size_t label_index = 1;
  std::size_t max_batch = 64;
  std::uint64_t seed = 42;
  double tolerance = 1e-6;
};

// softmax(logits)[index], computed as 1 / sum_j exp(l_j - l_index).
double stub_probability(const std::vector<double>& logits, std::size_t index);

// {"probabilities":[...]} with shortest round-trip number formatting.
std::string format_predict_response(const std::vector<double>& probabilities);

std::string generate_conformance(const ConformanceSpec& spec);

struct ConformanceResult {
  std::size_t cases = 0;
  std::size_t passed = 0;
  std::vector<std::string> failures;

  bool ok() const { return cases > 0 && passed == cases; }
};

// Replays the golden file against a live server rooted at `url`.
ConformanceResult check_conformance(const std::string& golden_jsonl, const std::string& url);

}  // namespace stereoscope
