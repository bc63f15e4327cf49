#include <algorithm>
#include <array>
#include <string>

#include "permalloc/error.h"
#include "permalloc/runtime.h"

namespace permalloc {
namespace {

// Bytes from `h` to the end of its live slot.
std::uint64_t RoomInSlot(AccessContext& ctx, AliasAddress h) {
  const Arena& arena = ctx.arena();
  if (!arena.Contains(h.raw())) Fail(ErrorCode::kUnknownAllocation, "handle outside the arena");
  const std::uint64_t base = arena.GetBase(h.raw());
  if (!arena.IsLive(base)) Fail(ErrorCode::kUnknownAllocation, "slot is not live");
  return arena.GetSize(base) - (h.stripped() - base);
}

void CheckRange(AccessContext& ctx, AliasAddress h, std::size_t n, const char* op) {
  if (n == 0) return;
  if (RoomInSlot(ctx, h) < n) {
    Fail(ErrorCode::kInvalidArgument,
         std::string(op) + ": range of " + std::to_string(n) + " bytes leaves the slot");
  }
}

// Largest step that stays inside one chunk of both cursors.
std::size_t Step(std::uint64_t g, AliasAddress a, AliasAddress b, std::size_t left) {
  const std::uint64_t sa = g - a.stripped() % g;
  const std::uint64_t sb = g - b.stripped() % g;
  return static_cast<std::size_t>(std::min<std::uint64_t>({sa, sb, left}));
}

}  // namespace

void PermMemcpy(AccessContext& ctx, AliasAddress dst, AliasAddress src, std::size_t n) {
  CheckRange(ctx, dst, n, "perm_memcpy");
  CheckRange(ctx, src, n, "perm_memcpy");
  const std::uint64_t g = ctx.params().granularity;
  std::array<std::byte, 8> chunk;
  for (std::size_t pos = 0; pos < n;) {
    const std::size_t len = Step(g, dst + pos, src + pos, n - pos);
    ctx.Load(src + pos, {chunk.data(), len});
    ctx.Store(dst + pos, {chunk.data(), len});
    pos += len;
  }
}

void PermMemset(AccessContext& ctx, AliasAddress dst, std::uint8_t value, std::size_t n) {
  CheckRange(ctx, dst, n, "perm_memset");
  const std::uint64_t g = ctx.params().granularity;
  std::array<std::byte, 8> chunk;
  chunk.fill(static_cast<std::byte>(value));
  for (std::size_t pos = 0; pos < n;) {
    const std::size_t len = Step(g, dst + pos, dst + pos, n - pos);
    ctx.Store(dst + pos, {chunk.data(), len});
    pos += len;
  }
}

int PermMemcmp(AccessContext& ctx, AliasAddress a, AliasAddress b, std::size_t n) {
  CheckRange(ctx, a, n, "perm_memcmp");
  CheckRange(ctx, b, n, "perm_memcmp");
  const std::uint64_t g = ctx.params().granularity;
  std::array<std::byte, 8> ca, cb;
  for (std::size_t pos = 0; pos < n;) {
    const std::size_t len = Step(g, a + pos, b + pos, n - pos);
    ctx.Load(a + pos, {ca.data(), len});
    ctx.Load(b + pos, {cb.data(), len});
    for (std::size_t i = 0; i < len; ++i) {
      const auto x = std::to_integer<unsigned char>(ca[i]);
      const auto y = std::to_integer<unsigned char>(cb[i]);
      if (x != y) return x < y ? -1 : 1;
    }
    pos += len;
  }
  return 0;
}

std::size_t PermStrlen(AccessContext& ctx, AliasAddress s) {
  const std::uint64_t room = RoomInSlot(ctx, s);
  const std::uint64_t g = ctx.params().granularity;
  std::array<std::byte, 8> chunk;
  for (std::size_t pos = 0; pos < room;) {
    const std::size_t len = Step(g, s + pos, s + pos, room - pos);
    ctx.Load(s + pos, {chunk.data(), len});
    for (std::size_t i = 0; i < len; ++i) {
      if (chunk[i] == std::byte{0}) return pos + i;
    }
    pos += len;
  }
  Fail(ErrorCode::kUnterminated, "perm_strlen: no NUL before the end of the slot");
}

}  // namespace permalloc
