#include "permalloc/runtime.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <thread>
#include <vector>

#include "permalloc/error.h"

namespace permalloc {
namespace {

constexpr PermKey kKey{0x5EC2E7ull};

template <typename Fn>
ErrorCode CodeOf(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kStateError;
}

ArenaConfig SmallConfig() {
  ArenaConfig c;
  c.region_size = 1 << 20;
  c.region_count = 10;
  return c;
}

std::vector<std::byte> Pattern(std::size_t n, std::uint8_t salt = 0) {
  std::vector<std::byte> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::byte>((i * 7 + salt + 1) & 0xFF);
  return v;
}

std::vector<std::byte> Raw(const Arena& arena, std::uint64_t base, std::size_t n) {
  std::vector<std::byte> v(n);
  std::memcpy(v.data(), arena.Data(base), n);
  return v;
}

class RuntimeTest : public ::testing::Test {
 protected:
  Arena arena_{SmallConfig(), SeededAliasSource(21)};
  AccessContext ctx_{arena_, kKey};
};

TEST_F(RuntimeTest, ValueRoundTrip) {
  const AliasAddress h = arena_.Alloc(128);
  ctx_.StoreValue<std::uint32_t>(h, 0xDEADBEEF);
  EXPECT_EQ(ctx_.LoadValue<std::uint32_t>(h), 0xDEADBEEFu);
  ctx_.StoreValue<double>(h + 40, 2.5);
  EXPECT_EQ(ctx_.LoadValue<double>(h + 40), 2.5);
  EXPECT_EQ(ctx_.LoadValue<std::uint32_t>(h), 0xDEADBEEFu);
}

// Exhaustive at S = 128 for every geometry: each (offset, width) store is
// visible through a load and leaves the rest of the slot untouched.
TEST_F(RuntimeTest, ExhaustiveRoundTripAtEveryGeometry) {
  for (std::uint32_t g : {1u, 2u, 4u, 8u}) {
    for (std::uint32_t b : {64u, 128u}) {
      AccessContext ctx(arena_, kKey, {g, b});
      const AliasAddress h = arena_.Alloc(128);
      std::vector<std::byte> shadow = Pattern(128, static_cast<std::uint8_t>(g * b));
      ctx.Store(h, shadow);
      for (std::size_t w : {1u, 2u, 4u, 8u}) {
        for (std::size_t off = 0; off + w <= 128; ++off) {
          const std::vector<std::byte> value = Pattern(w, static_cast<std::uint8_t>(off + w * 31));
          ctx.Store(h + off, value);
          std::copy(value.begin(), value.end(), shadow.begin() + static_cast<std::ptrdiff_t>(off));
          ASSERT_EQ(ctx.Load(h + off, w), value) << "G=" << g << " B=" << b << " off=" << off;
        }
      }
      ASSERT_EQ(ctx.Load(h, 128), shadow);
      arena_.Free(h);
    }
  }
}

TEST_F(RuntimeTest, SplitLoadEqualsTwoHalfLoads) {
  const AliasAddress h = arena_.Alloc(128);
  ctx_.Store(h, Pattern(128));
  std::vector<std::byte> joined = ctx_.Load(h + 4, 4);
  const std::vector<std::byte> second = ctx_.Load(h + 8, 4);
  joined.insert(joined.end(), second.begin(), second.end());
  EXPECT_EQ(ctx_.Load(h + 4, 8), joined);
  std::vector<std::byte> bytewise;
  for (int i = 0; i < 8; ++i) bytewise.push_back(ctx_.Load(h + 4 + i, 1)[0]);
  EXPECT_EQ(joined, bytewise);
}

TEST_F(RuntimeTest, ResolveAppliesTheRemapFormula) {
  const AliasAddress h = arena_.Alloc(256);
  const Resolved r = ctx_.Resolve(h);
  EXPECT_EQ(r.address, h.stripped() + r.perm[0] * 8u);
  EXPECT_EQ(r.perm, GenPerm(kKey, h.raw(), 256));
  const Resolved mid = ctx_.Resolve(h + 131);
  EXPECT_EQ(mid.address, h.stripped() + 128 + r.perm[0] * 8u + 3);
}

TEST_F(RuntimeTest, SecondResolveHitsTheCache) {
  const AliasAddress h = arena_.Alloc(128);
  const Resolved first = ctx_.Resolve(h + 17);
  const std::uint64_t hits = ctx_.cache().hits();
  const Resolved second = ctx_.Resolve(h + 17);
  EXPECT_EQ(first.address, second.address);
  EXPECT_EQ(first.perm, second.perm);
  EXPECT_EQ(ctx_.cache().hits(), hits + 1);
}

TEST_F(RuntimeTest, IdentityHookMapsToTheStrippedAddress) {
  const AliasAddress h = arena_.Alloc(512);
  ctx_.ForceIdentityForTesting(true);
  for (std::uint64_t off : {0u, 9u, 127u, 300u}) {
    EXPECT_EQ(ctx_.Resolve(h + off).address, h.stripped() + off);
  }
  ctx_.Store(h, Pattern(512));
  EXPECT_EQ(Raw(arena_, h.stripped(), 512), Pattern(512));
}

TEST_F(RuntimeTest, RawMemoryIsChunkShuffled) {
  const AliasAddress h = arena_.Alloc(256);
  const std::vector<std::byte> logical = Pattern(256);
  ctx_.Store(h, logical);
  const std::vector<std::byte> raw = Raw(arena_, h.stripped(), 256);
  const Permutation p = GenPerm(kKey, h.raw(), 256);
  for (std::uint64_t off = 0; off < 256; ++off) {
    ASSERT_EQ(raw[RemapOffset(off, p, {})], logical[off]);
  }
  std::vector<std::byte> a = raw, b = logical;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
  EXPECT_NE(raw, logical);
}

TEST_F(RuntimeTest, ZeroLengthAccessIsANoOp) {
  const AliasAddress h = arena_.Alloc(128);
  ctx_.Store(h, Pattern(128));
  ctx_.Store(h, std::span<const std::byte>{});
  EXPECT_EQ(ctx_.Load(h, 128), Pattern(128));
  EXPECT_TRUE(ctx_.Load(h, 0).empty());
}

TEST_F(RuntimeTest, DeadAndForeignHandlesAreRejected) {
  const AliasAddress h = arena_.Alloc(128);
  arena_.Free(h);
  EXPECT_EQ(CodeOf([&] { ctx_.Resolve(h); }), ErrorCode::kUnknownAllocation);
  EXPECT_EQ(CodeOf([&] { ctx_.LoadValue<int>(h); }), ErrorCode::kUnknownAllocation);
  EXPECT_EQ(CodeOf([&] { ctx_.Resolve(AliasAddress(arena_.end() + 64)); }),
            ErrorCode::kUnknownAllocation);
}

TEST_F(RuntimeTest, AccessPastTheSlotUsesTheNeighboursPermutation) {
  const AliasAddress a = arena_.Alloc(128);
  const AliasAddress b = arena_.Alloc(128);
  ASSERT_EQ(b.stripped(), a.stripped() + 128);
  ctx_.Store(b, Pattern(128, 9));
  // Through a's handle, but under a's alias number, so it does not decode b.
  const std::vector<std::byte> seen = ctx_.Load(a + 128, 128);
  const Permutation pa = GenPerm(kKey, AliasAddress::Assemble(a.alias_number(), b.stripped()).raw(), 128);
  const Permutation pb = GenPerm(kKey, b.raw(), 128);
  const std::vector<std::byte> raw = Raw(arena_, b.stripped(), 128);
  for (std::uint64_t off = 0; off < 128; ++off) {
    ASSERT_EQ(seen[off], raw[RemapOffset(off, pa, {})]);
  }
  EXPECT_EQ(pa == pb, seen == Pattern(128, 9));
}

TEST_F(RuntimeTest, UnpermuteExposesLogicalBytes) {
  const AliasAddress h = arena_.Alloc(384);
  const std::vector<std::byte> logical = Pattern(512, 3);
  ctx_.Store(h, logical);
  ctx_.Unpermute(h + 10);
  EXPECT_TRUE(ctx_.IsUnpermuted(h));
  EXPECT_EQ(Raw(arena_, h.stripped(), 512), logical);
  EXPECT_EQ(CodeOf([&] { ctx_.Unpermute(h); }), ErrorCode::kStateError);
  ctx_.Permute(h);
  EXPECT_FALSE(ctx_.IsUnpermuted(h));
  EXPECT_EQ(ctx_.Load(h, 512), logical);
  EXPECT_EQ(CodeOf([&] { ctx_.Permute(h); }), ErrorCode::kStateError);
}

TEST_F(RuntimeTest, UnpermuteUnderIdentityLeavesMemoryAlone) {
  const AliasAddress h = arena_.Alloc(128);
  ctx_.ForceIdentityForTesting(true);
  ctx_.Store(h, Pattern(128));
  ctx_.Unpermute(h);
  EXPECT_EQ(Raw(arena_, h.stripped(), 128), Pattern(128));
  ctx_.Permute(h);
  EXPECT_EQ(Raw(arena_, h.stripped(), 128), Pattern(128));
}

TEST_F(RuntimeTest, ExternalWritesWhileUnpermutedSurvivePermute) {
  const AliasAddress h = arena_.Alloc(128);
  ctx_.Unpermute(h);
  std::vector<std::byte> external = Pattern(128, 77);
  std::memcpy(arena_.Data(h.stripped()), external.data(), external.size());
  ctx_.Permute(h);
  EXPECT_EQ(ctx_.Load(h, 128), external);
}

// A stale handle to a reallocated slot sees chunk k of the new owner only
// when both alias numbers send chunk k to the same place: about 1/16.
TEST_F(RuntimeTest, DanglingHandleMostlyMissesTheNewOwner) {
  constexpr int kTrials = 10000;
  int same_chunk = 0, identical = 0;
  for (int t = 0; t < kTrials; ++t) {
    const AliasAddress old_h = arena_.Alloc(128);
    arena_.Free(old_h);
    const AliasAddress new_h = arena_.Alloc(128);
    ASSERT_EQ(new_h.stripped(), old_h.stripped());
    std::vector<std::byte> logical(128);
    for (int c = 0; c < 16; ++c) {
      for (int i = 0; i < 8; ++i) logical[c * 8 + i] = static_cast<std::byte>(c * 16 + i);
    }
    ctx_.Store(new_h, logical);
    const std::vector<std::byte> seen = ctx_.Load(old_h, 128);
    same_chunk += std::equal(seen.begin(), seen.begin() + 8, logical.begin());
    identical += seen == logical;
    arena_.Free(new_h);
  }
  const double q = 1.0 / 65536;
  const double p = q + (1 - q) / 16;
  const double sigma = std::sqrt(kTrials * p * (1 - p));
  EXPECT_LE(std::abs(same_chunk - kTrials * p), 3 * sigma);
  EXPECT_LE(identical, 3);
}

TEST_F(RuntimeTest, ReusedSlotDoubleShufflesOldContents) {
  int unchanged = 0;
  for (int t = 0; t < 1000; ++t) {
    const AliasAddress old_h = arena_.Alloc(128);
    ctx_.Store(old_h, Pattern(128, static_cast<std::uint8_t>(t)));
    arena_.Free(old_h);
    const AliasAddress new_h = arena_.Alloc(128);
    unchanged += ctx_.Load(new_h, 128) == Pattern(128, static_cast<std::uint8_t>(t));
    arena_.Free(new_h);
  }
  EXPECT_LE(unchanged, 2);
}

TEST_F(RuntimeTest, CacheIsPureMemoization) {
  AccessContext uncached(arena_, kKey, {}, 0);
  AccessContext tiny(arena_, kKey, {}, 4);
  std::vector<AliasAddress> handles;
  for (int i = 0; i < 200; ++i) {
    handles.push_back(arena_.Alloc(128 << (i % 4)));
    ctx_.Store(handles.back(), Pattern(128, static_cast<std::uint8_t>(i)));
  }
  for (int round = 0; round < 2; ++round) {
    for (std::size_t i = 0; i < handles.size(); ++i) {
      const auto expected = Pattern(128, static_cast<std::uint8_t>(i));
      ASSERT_EQ(uncached.Load(handles[i], 128), expected);
      ASSERT_EQ(tiny.Load(handles[i], 128), expected);
      ASSERT_EQ(ctx_.Load(handles[i], 128), expected);
    }
    ctx_.ResetCache();
  }
  EXPECT_EQ(uncached.cache().hits(), 0u);
  EXPECT_EQ(uncached.cache().capacity(), 0u);
}

TEST_F(RuntimeTest, FreshContextReadsTheSameValues) {
  const AliasAddress h = arena_.Alloc(1024);
  ctx_.Store(h, Pattern(1024));
  AccessContext other(arena_, kKey);
  EXPECT_EQ(other.Load(h, 1024), Pattern(1024));
  AccessContext wrong_key(arena_, PermKey{kKey.value + 1});
  EXPECT_NE(wrong_key.Load(h, 1024), Pattern(1024));
}

TEST_F(RuntimeTest, WideGeometriesBypassTheCacheButStillRoundTrip) {
  for (std::uint32_t g : {1u, 2u}) {
    AccessContext ctx(arena_, kKey, {g, 128});
    const AliasAddress h = arena_.Alloc(256);
    ctx.Store(h, Pattern(256, static_cast<std::uint8_t>(g)));
    EXPECT_EQ(ctx.Load(h, 256), Pattern(256, static_cast<std::uint8_t>(g)));
    EXPECT_EQ(ctx.cache().hits() + ctx.cache().misses(), 0u);
    EXPECT_EQ(ctx.PermutationFor(h).size(), 128u / g);
  }
}

// Same VA slot, different alias numbers: no two of 10^4 collide at C = 16.
TEST_F(RuntimeTest, AliasNumbersSelectDistinctPermutations) {
  const AliasAddress h = arena_.Alloc(128);
  std::vector<std::uint64_t> packed;
  for (std::uint32_t an = 0; an < 10000; ++an) {
    const AliasAddress alias = AliasAddress::Assemble(static_cast<std::uint16_t>(an), h.stripped());
    packed.push_back(PackPerm(ctx_.PermutationFor(alias)));
  }
  std::sort(packed.begin(), packed.end());
  EXPECT_EQ(std::adjacent_find(packed.begin(), packed.end()), packed.end());
}

TEST_F(RuntimeTest, ContextsOnSeveralThreadsShareOneArena) {
  constexpr int kThreads = 4;
  std::vector<std::thread> threads;
  std::vector<int> failures(kThreads, 0);
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      AccessContext ctx(arena_, kKey);
      for (int i = 0; i < 500; ++i) {
        const AliasAddress h = arena_.Alloc(128 << (i % 3));
        const auto value = Pattern(128, static_cast<std::uint8_t>(t * 50 + i));
        ctx.Store(h, value);
        failures[t] += ctx.Load(h, 128) != value;
        arena_.Free(h);
      }
    });
  }
  for (auto& th : threads) th.join();
  for (int f : failures) EXPECT_EQ(f, 0);
}

TEST(AccessContextTest, RejectsInvalidGeometry) {
  Arena arena(SmallConfig(), SeededAliasSource(1));
  EXPECT_EQ(CodeOf([&] { AccessContext(arena, kKey, {3, 128}); }), ErrorCode::kInvalidArgument);
}

TEST(PermCacheTest, DirectMappedLookup) {
  PermCache cache(8);
  EXPECT_EQ(cache.capacity(), 8u);
  EXPECT_FALSE(cache.Lookup(0x1000).has_value());
  cache.Insert(0x1000, 42);
  EXPECT_EQ(cache.Lookup(0x1000), 42u);
  EXPECT_EQ(cache.hits(), 1u);
  EXPECT_EQ(cache.misses(), 1u);
  // A conflicting tag evicts, and never aliases the evicted entry.
  std::uint64_t other = 0x2000;
  while (cache.IndexOf(other) != cache.IndexOf(0x1000)) other += 0x80;
  cache.Insert(other, 7);
  EXPECT_FALSE(cache.Lookup(0x1000).has_value());
  EXPECT_EQ(cache.Lookup(other), 7u);
  cache.Clear();
  EXPECT_FALSE(cache.Lookup(other).has_value());
}

TEST(PermCacheTest, ZeroCapacityAlwaysMisses) {
  PermCache cache(0);
  cache.Insert(0x1000, 1);
  EXPECT_FALSE(cache.Lookup(0x1000).has_value());
}

TEST(PermCacheTest, RejectsNonPowerOfTwoCapacity) {
  EXPECT_EQ(CodeOf([] { PermCache cache(6); }), ErrorCode::kInvalidArgument);
}

TEST(PermCacheTest, IndicesSpreadOverTheTable) {
  PermCache cache(1 << 10);
  std::vector<int> used(1 << 10, 0);
  for (std::uint64_t i = 0; i < (1 << 12); ++i) ++used[cache.IndexOf(0x7F0000000000ull + i * 128)];
  EXPECT_GT(std::count_if(used.begin(), used.end(), [](int n) { return n > 0; }), 900);
}

}  // namespace
}  // namespace permalloc
