#ifndef PERMALLOC_PERM_CACHE_H_
#define PERMALLOC_PERM_CACHE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace permalloc {

inline constexpr std::size_t kDefaultCacheEntries = std::size_t{1} << 17;

// Direct-mapped memo of alias base -> packed permutation. Pure memoization:
// a capacity of 0 disables it without changing any result.
class PermCache {
 public:
  // `entries` must be 0 or a power of two.
  explicit PermCache(std::size_t entries = kDefaultCacheEntries);

  std::optional<std::uint64_t> Lookup(std::uint64_t alias_base);
  void Insert(std::uint64_t alias_base, std::uint64_t packed);
  void Clear();

  std::size_t capacity() const { return entries_.size(); }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }

  std::size_t IndexOf(std::uint64_t alias_base) const;

 private:
  struct Entry {
    std::uint64_t tag = 0;  // 0 never names a slot: the arena is mapped above page 0
    std::uint64_t packed = 0;
  };

  std::vector<Entry> entries_;
  int index_bits_ = 0;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

}  // namespace permalloc

#endif  // PERMALLOC_PERM_CACHE_H_
