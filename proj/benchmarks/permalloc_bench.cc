#include <benchmark/benchmark.h>

#include <cstdint>
#include <cstdlib>

#include "permalloc/permalloc.h"

namespace {

using namespace permalloc;

constexpr std::uint64_t kKey = 0x0123456789ABCDEFull;

void BM_GenPerm(benchmark::State& state, AesBackend backend) {
  std::uint64_t addr = kFixedArenaBase;
  for (auto _ : state) {
    benchmark::DoNotOptimize(GenPerm(PermKey{kKey}, addr, 128, {}, backend));
    addr += 128;
  }
}
BENCHMARK_CAPTURE(BM_GenPerm, hardware, AesBackend::kHardware);
BENCHMARK_CAPTURE(BM_GenPerm, software, AesBackend::kSoftware);

void BM_PackUnpack(benchmark::State& state) {
  const Permutation p = GenPerm(PermKey{kKey}, kFixedArenaBase, 128);
  for (auto _ : state) {
    benchmark::DoNotOptimize(UnpackPerm(PackPerm(p), 16));
  }
}
BENCHMARK(BM_PackUnpack);

ArenaConfig SmallArena() {
  ArenaConfig config;
  config.region_size = 1 << 20;
  config.region_count = 10;
  return config;
}

// Range(0) is the cache size; 0 recomputes the permutation on every access.
void BM_Resolve(benchmark::State& state) {
  Arena arena(SmallArena(), SeededAliasSource(kKey));
  AccessContext ctx(arena, PermKey{kKey}, {}, static_cast<std::size_t>(state.range(0)));
  const AliasAddress h = arena.Alloc(128);
  std::uint64_t off = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ctx.Resolve(h + off));
    off = (off + 8) & 127;
  }
}
BENCHMARK(BM_Resolve)->Arg(0)->Arg(kDefaultCacheEntries);

void BM_LoadU64(benchmark::State& state) {
  Arena arena(SmallArena(), SeededAliasSource(kKey));
  AccessContext ctx(arena, PermKey{kKey}, {}, static_cast<std::size_t>(state.range(0)));
  const AliasAddress h = arena.Alloc(1024);
  std::uint64_t off = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ctx.LoadValue<std::uint64_t>(h + off));
    off = (off + 8) & 1023;
  }
}
BENCHMARK(BM_LoadU64)->Arg(0)->Arg(kDefaultCacheEntries);

void BM_AllocFree(benchmark::State& state) {
  Arena arena(SmallArena(), SeededAliasSource(kKey));
  for (auto _ : state) {
    arena.Free(arena.Alloc(static_cast<std::uint64_t>(state.range(0))));
  }
}
BENCHMARK(BM_AllocFree)->Arg(128)->Arg(4096);

void BM_MallocFree(benchmark::State& state) {
  for (auto _ : state) {
    void* p = std::malloc(static_cast<std::size_t>(state.range(0)));
    benchmark::DoNotOptimize(p);
    std::free(p);
  }
}
BENCHMARK(BM_MallocFree)->Arg(128)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
