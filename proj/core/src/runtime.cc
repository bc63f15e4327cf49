#include "permalloc/runtime.h"

#include <algorithm>
#include <string>

#include "permalloc/error.h"

namespace permalloc {

AccessContext::AccessContext(Arena& arena, PermKey key, PermParams params,
                             std::size_t cache_entries)
    : arena_(&arena), key_(key), params_(params), cache_(cache_entries) {
  params_.Validate();
  for (const std::uint64_t c : arena.config().size_classes) {
    if (c % params_.boundary != 0) {
      Fail(ErrorCode::kInvalidArgument,
           "size class " + std::to_string(c) + " is not a multiple of the boundary");
    }
  }
}

Permutation AccessContext::PermutationOf(AliasAddress alias_base, std::uint64_t size) {
  const std::size_t chunks = params_.chunk_count();
  if (force_identity_) return Permutation::Identity(chunks);
  if (chunks > kMaxPackedChunks) return GenPerm(key_, alias_base.raw(), size, params_);

  if (auto packed = cache_.Lookup(alias_base.raw())) return UnpackPerm(*packed, chunks);
  Permutation perm = GenPerm(key_, alias_base.raw(), size, params_);
  cache_.Insert(alias_base.raw(), PackPerm(perm));
  return perm;
}

AccessContext::SlotView AccessContext::Slot(AliasAddress handle) {
  if (!arena_->Contains(handle.raw())) {
    Fail(ErrorCode::kUnknownAllocation, "handle does not point into the arena");
  }
  const std::uint64_t base = arena_->GetBase(handle.raw());
  if (!arena_->IsLive(base)) Fail(ErrorCode::kUnknownAllocation, "slot is not live");
  const std::uint64_t size = arena_->GetSize(base);
  const AliasAddress alias_base = AliasAddress::Assemble(handle.alias_number(), base);
  return SlotView{base, size, PermutationOf(alias_base, size)};
}

Resolved AccessContext::Resolve(AliasAddress handle) {
  SlotView slot = Slot(handle);
  const std::uint64_t offset = handle.stripped() - slot.base;
  return Resolved{slot.base + RemapOffset(offset, slot.perm, params_), slot.perm};
}

Permutation AccessContext::PermutationFor(AliasAddress handle) { return Slot(handle).perm; }

namespace {

// Walks [handle, handle + n) one chunk segment at a time, re-resolving the
// slot whenever the walk crosses into another one.
template <typename Fn>
void ForEachSegment(AccessContext& ctx, AliasAddress handle, std::size_t n, Fn&& fn,
                    auto&& slot_of) {
  const std::uint64_t g = ctx.params().granularity;
  std::size_t pos = 0;
  bool have_slot = false;
  std::uint64_t base = 0, size = 0;
  Permutation perm;
  while (pos < n) {
    const AliasAddress at = handle + pos;
    const std::uint64_t va = at.stripped();
    const std::size_t seg = static_cast<std::size_t>(std::min<std::uint64_t>(g - va % g, n - pos));
    if (!have_slot || va < base || va - base >= size) {
      auto view = slot_of(at);
      base = view.base;
      size = view.size;
      perm = view.perm;
      have_slot = true;
    }
    const std::uint64_t mapped = base + RemapOffset(va - base, perm, ctx.params());
    fn(ctx.arena().Data(mapped), pos, seg);
    pos += seg;
  }
}

}  // namespace

void AccessContext::Load(AliasAddress handle, std::span<std::byte> out) {
  ForEachSegment(
      *this, handle, out.size(),
      [&](const std::byte* src, std::size_t pos, std::size_t len) {
        std::memcpy(out.data() + pos, src, len);
      },
      [this](AliasAddress at) { return Slot(at); });
}

void AccessContext::Store(AliasAddress handle, std::span<const std::byte> bytes) {
  ForEachSegment(
      *this, handle, bytes.size(),
      [&](std::byte* dst, std::size_t pos, std::size_t len) {
        std::memcpy(dst, bytes.data() + pos, len);
      },
      [this](AliasAddress at) { return Slot(at); });
}

bool AccessContext::IsUnpermuted(AliasAddress handle) const {
  return arena_->Contains(handle.raw()) &&
         unpermuted_.contains(arena_->GetBase(handle.raw()));
}

void AccessContext::Unpermute(AliasAddress handle) {
  const SlotView slot = Slot(handle);
  if (unpermuted_.contains(slot.base)) {
    Fail(ErrorCode::kStateError, "slot is already unpermuted");
  }
  const std::size_t g = params_.granularity, b = params_.boundary;
  std::vector<std::byte> block(b);
  std::byte* data = arena_->Data(slot.base);
  for (std::uint64_t off = 0; off < slot.size; off += b) {
    for (std::size_t c = 0; c < slot.perm.size(); ++c) {
      std::memcpy(block.data() + c * g, data + off + slot.perm[c] * g, g);
    }
    std::memcpy(data + off, block.data(), b);
  }
  unpermuted_.insert(slot.base);
}

void AccessContext::Permute(AliasAddress handle) {
  const SlotView slot = Slot(handle);
  if (!unpermuted_.contains(slot.base)) {
    Fail(ErrorCode::kStateError, "slot is not unpermuted");
  }
  const std::size_t g = params_.granularity, b = params_.boundary;
  std::vector<std::byte> block(b);
  std::byte* data = arena_->Data(slot.base);
  for (std::uint64_t off = 0; off < slot.size; off += b) {
    for (std::size_t c = 0; c < slot.perm.size(); ++c) {
      std::memcpy(block.data() + slot.perm[c] * g, data + off + c * g, g);
    }
    std::memcpy(data + off, block.data(), b);
  }
  unpermuted_.erase(slot.base);
}

}  // namespace permalloc
