#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stereoscope {

// Selects between the OpenMP kernel and its serial reference.
enum class Exec { serial, parallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Number of fixed reduction blocks. Parallel sums are computed per block and
// folded in block order, so results do not depend on the thread count.
inline constexpr std::size_t kReductionBlocks = 64;

struct BlockRange {
  std::size_t begin;
  std::size_t end;
};

inline BlockRange block_range(std::size_t n, std::size_t block, std::size_t blocks = kReductionBlocks) {
  const std::size_t base = n / blocks;
  const std::size_t extra = n % blocks;
  const std::size_t begin = block * base + std::min(block, extra);
  const std::size_t len = base + (block < extra ? 1 : 0);
  return {begin, begin + len};
}

// Deterministic parallel sum of f(i) for i in [0, n).
template <class F>
double block_sum(std::size_t n, F&& f) {
  std::vector<double> partial(kReductionBlocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(kReductionBlocks); ++b) {
    const auto r = block_range(n, static_cast<std::size_t>(b));
    double s = 0.0;
    for (std::size_t i = r.begin; i < r.end; ++i) s += f(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace stereoscope
