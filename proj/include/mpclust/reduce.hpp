#pragma once

#include <cstddef>
#include <span>

namespace mpclust {

// Fixed-shape pairwise summation: split at the largest power of two strictly
// below the length. Any aligned power-of-two block is a complete subtree, so
// a machine holding such a block can reduce it locally and the cross-machine
// combine reproduces the exact same floating-point operations. This is what
// makes distributed mass reductions bit-identical to offline ones.
inline double canonical_tree_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  if (n == 1) return v[0];
  std::size_t split = 1;
  while (split * 2 < n) split *= 2;
  return canonical_tree_sum(v.subspan(0, split)) + canonical_tree_sum(v.subspan(split));
}

}  // namespace mpclust
