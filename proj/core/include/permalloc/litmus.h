#ifndef PERMALLOC_LITMUS_H_
#define PERMALLOC_LITMUS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "permalloc/perm_cache.h"
#include "permalloc/permutation.h"

namespace permalloc {

enum class Scenario {
  kIntraOverflow,
  kInterOverflow,
  kUseAfterFree,
  kTypeConfusion,
  kOverRead,
  kUninitRead,
};

inline constexpr Scenario kAllScenarios[] = {
    Scenario::kIntraOverflow, Scenario::kInterOverflow, Scenario::kUseAfterFree,
    Scenario::kTypeConfusion, Scenario::kOverRead,      Scenario::kUninitRead};

std::string_view ScenarioName(Scenario s);
// Throws kInvalidArgument for unknown names.
Scenario ParseScenario(std::string_view name);

struct LitmusOptions {
  Scenario scenario = Scenario::kInterOverflow;
  std::uint64_t trials = 16000;
  std::optional<std::uint64_t> seed;
  PermParams params;
  // 0 pins every alias number to 0 (the control case for use_after_free).
  std::uint32_t alias_bits = 16;
  std::size_t cache_entries = kDefaultCacheEntries;
  // Trials are split across this many threads, each with its own context and
  // thread-local arena; results are deterministic per (seed, threads).
  unsigned threads = 1;
};

struct LitmusResult {
  std::string scenario;
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  double empirical = 0.0;
  double theoretical = 0.0;
  // Per-chunk view: for uninit_read, chunks recovered at their original
  // offset; for single-target scenarios identical to trials/successes.
  std::uint64_t chunk_trials = 0;
  std::uint64_t chunk_successes = 0;
  double chunk_theoretical = 0.0;
  // Trials whose attacker and victim drew the same alias number, and the
  // successes among them. An equal alias number means an equal permutation.
  std::uint64_t alias_collisions = 0;
  std::uint64_t alias_collision_successes = 0;

  // |successes - trials * p| <= 3 sigma of the binomial.
  bool WithinThreeSigma() const;
};

// Attacks use a fixed, permutation-ignorant offset against victims built
// through the runtime. Requires trials >= 1000.
LitmusResult RunLitmus(const LitmusOptions& options);

// Probability that an attacker under a different alias hits one chunk
// (or, with `full_block`, all C chunks) of a C-chunk block.
double TheoreticalHit(std::uint32_t alias_bits, std::uint32_t chunk_count, bool full_block);

bool WithinThreeSigma(std::uint64_t trials, std::uint64_t successes, double p);

std::string LitmusCsv(std::span<const LitmusResult> results);
nlohmann::json LitmusJson(const LitmusResult& result);

}  // namespace permalloc

#endif  // PERMALLOC_LITMUS_H_
