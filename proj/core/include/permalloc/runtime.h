#ifndef PERMALLOC_RUNTIME_H_
#define PERMALLOC_RUNTIME_H_

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <type_traits>
#include <unordered_set>
#include <vector>

#include "permalloc/arena.h"
#include "permalloc/perm_cache.h"
#include "permalloc/permutation.h"

namespace permalloc {

struct Resolved {
  std::uint64_t address = 0;  // stripped, physical location in the arena
  Permutation perm;
};

// Per-thread access state: the process key, chunk geometry, and a private
// permutation cache over a shared arena. Not thread-safe; use one context per
// thread. Contexts over the same arena are safe for disjoint slots.
class AccessContext {
 public:
  AccessContext(Arena& arena, PermKey key, PermParams params = {},
                std::size_t cache_entries = kDefaultCacheEntries);

  // GetBasePtr, GetSize, GenPerm on the alias base, Strip, GetPermPtr.
  // Throws kUnknownAllocation unless the handle's slot is live.
  Resolved Resolve(AliasAddress handle);

  // Permutation of the live slot containing `handle`, under the handle's alias.
  Permutation PermutationFor(AliasAddress handle);

  // Each access is split at chunk boundaries and every segment resolved on
  // its own, so unaligned and multi-chunk accesses keep logical byte order.
  void Load(AliasAddress handle, std::span<std::byte> out);
  void Store(AliasAddress handle, std::span<const std::byte> bytes);

  std::vector<std::byte> Load(AliasAddress handle, std::size_t width) {
    std::vector<std::byte> out(width);
    Load(handle, out);
    return out;
  }

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  T LoadValue(AliasAddress handle) {
    T value;
    Load(handle, std::as_writable_bytes(std::span{&value, 1}));
    return value;
  }

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void StoreValue(AliasAddress handle, const T& value) {
    Store(handle, std::as_bytes(std::span{&value, 1}));
  }

  // Rearranges the whole slot into program order for uninstrumented code.
  // Throws kStateError if the slot is already unpermuted by this context.
  void Unpermute(AliasAddress handle);
  // Reapplies the slot's permutation. Throws kStateError if not unpermuted.
  void Permute(AliasAddress handle);
  bool IsUnpermuted(AliasAddress handle) const;

  // TEST ONLY: every slot resolves under the identity permutation.
  void ForceIdentityForTesting(bool enabled) {
    force_identity_ = enabled;
    cache_.Clear();
  }

  Arena& arena() const { return *arena_; }
  PermKey key() const { return key_; }
  const PermParams& params() const { return params_; }
  const PermCache& cache() const { return cache_; }
  void ResetCache() { cache_.Clear(); }

 private:
  struct SlotView {
    std::uint64_t base;
    std::uint64_t size;
    Permutation perm;
  };

  SlotView Slot(AliasAddress handle);
  Permutation PermutationOf(AliasAddress alias_base, std::uint64_t size);

  Arena* arena_;
  const PermKey key_;
  const PermParams params_;
  PermCache cache_;
  bool force_identity_ = false;
  std::unordered_set<std::uint64_t> unpermuted_;
};

// Wrapped memory operations on logical (unpermuted) contents, walked one chunk
// at a time. Every range must lie inside its slot (kInvalidArgument otherwise).
void PermMemcpy(AccessContext& ctx, AliasAddress dst, AliasAddress src, std::size_t n);
void PermMemset(AccessContext& ctx, AliasAddress dst, std::uint8_t value, std::size_t n);
int PermMemcmp(AccessContext& ctx, AliasAddress a, AliasAddress b, std::size_t n);
// Throws kUnterminated if no NUL precedes the end of the slot.
std::size_t PermStrlen(AccessContext& ctx, AliasAddress s);

}  // namespace permalloc

#endif  // PERMALLOC_RUNTIME_H_
