#include "auscult/rng.hpp"

#include <algorithm>
#include <numeric>

namespace auscult {

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n,
                                                         std::size_t k) {
  if (k > n) k = n;
  std::vector<std::size_t> picked;
  picked.reserve(k);
  if (k * 3 >= n) {
    // Dense draw: partial Fisher-Yates over the full index range.
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(pool[i], pool[i + below(n - i)]);
      picked.push_back(pool[i]);
    }
  } else {
    // Sparse draw: rejection against the already-picked set.
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t candidate;
      do {
        candidate = static_cast<std::size_t>(below(n));
      } while (std::find(picked.begin(), picked.end(), candidate) !=
               picked.end());
      picked.push_back(candidate);
    }
  }
  return picked;
}

}  // namespace auscult
