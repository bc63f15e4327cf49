#ifndef PERMALLOC_UNIFORMITY_H_
#define PERMALLOC_UNIFORMITY_H_

#include <cstdint>
#include <optional>

#include "permalloc/histogram.h"
#include "permalloc/perm_cache.h"
#include "permalloc/permutation.h"

namespace permalloc {

// Acceptance bounds on |normalized - 1| per bin.
inline constexpr double kIntraBound = 0.03;
inline constexpr double kInterBound = 0.15;
inline constexpr double kAliasBound = 0.10;

struct UniformityOptions {
  std::uint64_t trials = 0;
  // Fixes the key and the alias-number stream. Unset: OS entropy for both.
  std::optional<std::uint64_t> seed;
  PermParams params;
  std::size_t cache_entries = kDefaultCacheEntries;
  std::uint32_t alias_bits = 16;
  // Number of size classes (one region each) for the inter experiment, 1..20.
  std::uint32_t classes = 20;
};

// Lehmer-rank histograms of permutations produced through the runtime.
//
// Intra: `trials` allocations of class 128, recycled in batches.
// Inter: trials split evenly over `classes` size classes 128 * 2^k.
// Alias: `trials` alloc/free cycles of one slot; only the alias number varies.
Histogram UniformityIntra(const UniformityOptions& options);
Histogram UniformityInter(const UniformityOptions& options);
Histogram UniformityAlias(const UniformityOptions& options);

}  // namespace permalloc

#endif  // PERMALLOC_UNIFORMITY_H_
