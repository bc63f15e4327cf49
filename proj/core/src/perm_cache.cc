#include "permalloc/perm_cache.h"

#include <bit>

#include "permalloc/error.h"

namespace permalloc {

namespace {
constexpr std::uint64_t kIndexMultiplier = 0x9E3779B97F4A7C15ull;
}

PermCache::PermCache(std::size_t entries) : entries_(entries) {
  if (entries != 0 && !std::has_single_bit(entries)) {
    Fail(ErrorCode::kInvalidArgument, "cache entries must be 0 or a power of two");
  }
  index_bits_ = entries == 0 ? 0 : std::countr_zero(entries);
}

std::size_t PermCache::IndexOf(std::uint64_t alias_base) const {
  if (index_bits_ == 0) return 0;
  return static_cast<std::size_t>((alias_base * kIndexMultiplier) >> (64 - index_bits_));
}

std::optional<std::uint64_t> PermCache::Lookup(std::uint64_t alias_base) {
  if (entries_.empty()) {
    ++misses_;
    return std::nullopt;
  }
  const Entry& e = entries_[IndexOf(alias_base)];
  if (e.tag == alias_base && alias_base != 0) {
    ++hits_;
    return e.packed;
  }
  ++misses_;
  return std::nullopt;
}

void PermCache::Insert(std::uint64_t alias_base, std::uint64_t packed) {
  if (entries_.empty()) return;
  entries_[IndexOf(alias_base)] = Entry{alias_base, packed};
}

void PermCache::Clear() {
  for (Entry& e : entries_) e = Entry{};
  hits_ = 0;
  misses_ = 0;
}

}  // namespace permalloc
