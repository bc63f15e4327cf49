#include "permalloc/throughput.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <utility>

#include "permalloc/error.h"
#include "permalloc/prng.h"

namespace permalloc {
namespace {

constexpr PermKey kBenchKey{0x0123456789ABCDEFull};
constexpr std::uint64_t kBenchBase = 0x00007F0000000000ull;

// Same shuffle as FisherYates, over an arbitrary word source.
template <typename Next>
std::uint32_t Shuffle(std::size_t chunks, Next&& next) {
  std::uint8_t p[kMaxChunks];
  for (std::size_t i = 0; i < chunks; ++i) p[i] = static_cast<std::uint8_t>(i);
  for (std::size_t i = chunks - 1; i >= 1; --i) {
    std::swap(p[i], p[next() % (i + 1)]);
  }
  return p[0];
}

std::uint64_t SeedWord(std::uint64_t addr, std::uint64_t size) {
  std::uint64_t s = kBenchKey.value ^ addr ^ (size << 48);
  return SplitMix64(s);
}

template <typename PermFn>
double TimePerPerm(std::uint64_t iterations, PermFn&& make) {
  volatile std::uint32_t sink = 0;
  const auto start = std::chrono::steady_clock::now();
  std::uint32_t acc = 0;
  for (std::uint64_t i = 0; i < iterations; ++i) acc += make(kBenchBase + i * 128);
  const auto stop = std::chrono::steady_clock::now();
  sink = acc;
  (void)sink;
  return std::chrono::duration<double, std::nano>(stop - start).count() /
         static_cast<double>(iterations);
}

double TimeBuiltin(std::uint64_t iterations, AesBackend backend, const PermParams& params) {
  return TimePerPerm(iterations, [&](std::uint64_t addr) {
    return GenPerm(kBenchKey, addr, params.boundary, params, backend)[0];
  });
}

double TimeXorshift64Star(std::uint64_t iterations, const PermParams& params) {
  return TimePerPerm(iterations, [&](std::uint64_t addr) {
    std::uint64_t x = SeedWord(addr, params.boundary) | 1;
    return Shuffle(params.chunk_count(), [&] {
      x ^= x >> 12;
      x ^= x << 25;
      x ^= x >> 27;
      return x * 0x2545F4914F6CDD1Dull;
    });
  });
}

double TimeXorshift128Plus(std::uint64_t iterations, const PermParams& params) {
  return TimePerPerm(iterations, [&](std::uint64_t addr) {
    std::uint64_t seed = SeedWord(addr, params.boundary);
    std::uint64_t s0 = SplitMix64(seed), s1 = SplitMix64(seed) | 1;
    return Shuffle(params.chunk_count(), [&] {
      std::uint64_t a = s0;
      const std::uint64_t b = s1;
      s0 = b;
      a ^= a << 23;
      s1 = a ^ b ^ (a >> 17) ^ (b >> 26);
      return s1 + b;
    });
  });
}

double TimePlatformRand(std::uint64_t iterations, const PermParams& params) {
  return TimePerPerm(iterations, [&](std::uint64_t addr) {
    std::srand(static_cast<unsigned>(SeedWord(addr, params.boundary)));
    return Shuffle(params.chunk_count(), [] { return static_cast<std::uint64_t>(std::rand()); });
  });
}

std::string Fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

double PrngThroughputBench(std::uint64_t iterations, AesBackend backend, const PermParams& params) {
  if (iterations < 10000) {
    Fail(ErrorCode::kInvalidArgument, "throughput: iterations must be >= 10000");
  }
  params.Validate();
  return TimeBuiltin(iterations, backend, params);
}

std::vector<ThroughputRow> ThroughputReport(std::uint64_t iterations, unsigned repeats,
                                            const PermParams& params) {
  if (iterations < 10000) {
    Fail(ErrorCode::kInvalidArgument, "throughput: iterations must be >= 10000");
  }
  if (repeats == 0) Fail(ErrorCode::kInvalidArgument, "throughput: repeats must be >= 1");
  params.Validate();

  struct Candidate {
    const char* name;
    double (*run)(std::uint64_t, const PermParams&);
  };
  std::vector<Candidate> candidates;
  if (HardwareAesAvailable()) {
    candidates.push_back({"aes-rounds (AES-NI)", [](std::uint64_t n, const PermParams& p) {
                            return TimeBuiltin(n, AesBackend::kHardware, p);
                          }});
  }
  candidates.push_back({"aes-rounds (software)", [](std::uint64_t n, const PermParams& p) {
                          return TimeBuiltin(n, AesBackend::kSoftware, p);
                        }});
  candidates.push_back({"xorshift64*", &TimeXorshift64Star});
  candidates.push_back({"xorshift128+", &TimeXorshift128Plus});
  candidates.push_back({"rand", &TimePlatformRand});

  std::vector<ThroughputRow> rows;
  for (const Candidate& c : candidates) {
    c.run(iterations / 10, params);  // warm-up
    double sum = 0.0, sum_sq = 0.0;
    for (unsigned r = 0; r < repeats; ++r) {
      const double ns = c.run(iterations, params);
      sum += ns;
      sum_sq += ns * ns;
    }
    const double mean = sum / repeats;
    const double var = repeats > 1 ? std::max(0.0, (sum_sq - repeats * mean * mean) / (repeats - 1)) : 0.0;
    rows.push_back({c.name, mean, mean > 0 ? std::sqrt(var) / mean : 0.0});
  }
  return rows;
}

std::string ThroughputCsv(const std::vector<ThroughputRow>& rows) {
  std::string out = "prng,ns_per_permutation,cv\n";
  for (const ThroughputRow& r : rows) out += r.prng + "," + Fixed(r.mean_ns) + "," + Fixed(r.cv) + "\n";
  return out;
}

nlohmann::json ThroughputJson(const std::vector<ThroughputRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const ThroughputRow& r : rows) {
    out.push_back({{"prng", r.prng}, {"ns_per_permutation", r.mean_ns}, {"cv", r.cv}});
  }
  return out;
}

}  // namespace permalloc
