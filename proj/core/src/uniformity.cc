#include "permalloc/uniformity.h"

#include <algorithm>
#include <random>
#include <vector>

#include "permalloc/arena.h"
#include "permalloc/error.h"
#include "permalloc/runtime.h"

namespace permalloc {
namespace {

constexpr std::size_t kBatch = 4096;
constexpr std::uint64_t kAliasSeedSalt = 0xA11A5A11A5A11A5Aull;

PermKey KeyFor(const UniformityOptions& o) {
  if (o.seed) return PermKey{*o.seed};
  std::random_device rd;
  return PermKey{(std::uint64_t{rd()} << 32) | rd()};
}

AliasSource AliasFor(const UniformityOptions& o) {
  return o.seed ? SeededAliasSource(*o.seed ^ kAliasSeedSalt) : OsAliasSource();
}

// Seeded runs place the arena at a fixed address: permutations depend on it.
ArenaConfig Placed(ArenaConfig config, const UniformityOptions& o) {
  if (o.seed) config.base_address = kFixedArenaBase;
  config.alias_bits = o.alias_bits;
  return config;
}

void RequireTrials(const UniformityOptions& o) {
  if (o.trials == 0) Fail(ErrorCode::kInvalidArgument, "uniformity: trials must be > 0");
}

// Allocates `count` slots of `size` in batches, histogramming each one's
// permutation, and frees each batch before the next.
void Sample(AccessContext& ctx, std::uint64_t size, std::uint64_t count, std::uint64_t max_live,
            Histogram& hist) {
  std::vector<AliasAddress> live;
  while (count > 0) {
    const std::uint64_t n = std::min<std::uint64_t>({count, max_live, kBatch});
    live.clear();
    for (std::uint64_t i = 0; i < n; ++i) live.push_back(ctx.arena().Alloc(size));
    for (const AliasAddress h : live) hist.Add(RankBin(ctx.PermutationFor(h)));
    for (const AliasAddress h : live) ctx.arena().Free(h);
    count -= n;
  }
}

}  // namespace

Histogram UniformityIntra(const UniformityOptions& options) {
  RequireTrials(options);
  const ArenaConfig config = Placed(ArenaConfig{}, options);
  Arena arena(config, AliasFor(options));
  AccessContext ctx(arena, KeyFor(options), options.params, options.cache_entries);

  Histogram hist;
  Sample(ctx, 128, options.trials, config.region_size / 128, hist);
  return hist;
}

Histogram UniformityInter(const UniformityOptions& options) {
  RequireTrials(options);
  if (options.classes < 1 || options.classes > 20) {
    Fail(ErrorCode::kInvalidArgument, "uniformity inter: classes must be in [1, 20]");
  }
  // One region per class; the largest class (128 * 2^19) fills its region.
  ArenaConfig config;
  config.region_size = std::uint64_t{128} << 19;
  config.region_count = options.classes;
  config.size_classes = ArenaConfig::DefaultClasses(options.classes);
  config = Placed(config, options);
  Arena arena(config, AliasFor(options));
  AccessContext ctx(arena, KeyFor(options), options.params, options.cache_entries);

  Histogram hist;
  const std::uint64_t per_class = options.trials / options.classes;
  const std::uint64_t extra = options.trials % options.classes;
  for (std::uint32_t k = 0; k < options.classes; ++k) {
    const std::uint64_t cls = config.size_classes[k];
    Sample(ctx, cls, per_class + (k < extra ? 1 : 0), config.region_size / cls, hist);
  }
  return hist;
}

Histogram UniformityAlias(const UniformityOptions& options) {
  RequireTrials(options);
  const ArenaConfig config = Placed(ArenaConfig{}, options);
  Arena arena(config, AliasFor(options));
  AccessContext ctx(arena, KeyFor(options), options.params, options.cache_entries);

  Histogram hist;
  AliasAddress h = arena.Alloc(128);
  const std::uint64_t slot = h.stripped();
  for (std::uint64_t i = 0; i < options.trials; ++i) {
    hist.Add(RankBin(ctx.PermutationFor(h)));
    arena.Free(h);
    h = arena.Alloc(128);
    if (h.stripped() != slot) Fail(ErrorCode::kStateError, "free list did not reuse the slot");
  }
  arena.Free(h);
  return hist;
}

}  // namespace permalloc
