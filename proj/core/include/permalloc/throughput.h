#ifndef PERMALLOC_THROUGHPUT_H_
#define PERMALLOC_THROUGHPUT_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "permalloc/aes_round.h"
#include "permalloc/permutation.h"

namespace permalloc {

// Mean nanoseconds to seed the generator and produce one full permutation
// (16 chunks by default). Requires iterations >= 10^4.
double PrngThroughputBench(std::uint64_t iterations, AesBackend backend = AesBackend::kAuto,
                           const PermParams& params = {});

struct ThroughputRow {
  std::string prng;
  double mean_ns = 0.0;  // per permutation, over repeats
  double cv = 0.0;       // stddev / mean across repeats
};

// Built-in generator (hardware and software rounds) against xorshift64*,
// xorshift128+ and the platform rand(), each driving the same shuffle.
std::vector<ThroughputRow> ThroughputReport(std::uint64_t iterations, unsigned repeats,
                                            const PermParams& params = {});

std::string ThroughputCsv(const std::vector<ThroughputRow>& rows);
nlohmann::json ThroughputJson(const std::vector<ThroughputRow>& rows);

}  // namespace permalloc

#endif  // PERMALLOC_THROUGHPUT_H_
