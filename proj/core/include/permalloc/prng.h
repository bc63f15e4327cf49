#ifndef PERMALLOC_PRNG_H_
#define PERMALLOC_PRNG_H_

#include <cstdint>

#include "permalloc/aes_round.h"

namespace permalloc {

// Per-process secret that seeds every permutation.
struct PermKey {
  std::uint64_t value = 0;

  friend bool operator==(const PermKey&, const PermKey&) = default;
};

// Counter-mode generator built from two AES rounds per 128-bit refill.
//
// The stream is a pure function of (key, alias address, size): the seed block
// is {lo = alias address, hi = size ^ rotl(key, 32)} whitened by the same two
// keyed rounds used for output. Round keys are expanded from the key with
// splitmix64. Software and AES-NI backends are bit-identical.
class Prng {
 public:
  static Prng Seed(PermKey key, std::uint64_t alias_addr, std::uint64_t size,
                   AesBackend backend = AesBackend::kAuto);

  std::uint64_t Next();

  Block128 state() const { return counter_; }
  int rounds_buffered() const { return buffered_; }

  static constexpr Block128 kIncrement{0x9E3779B97F4A7C15ull, 0xD1B54A32D192ED03ull};

 private:
  Prng() = default;

  Block128 Encrypt(Block128 block) const;

  Block128 counter_;
  Block128 round_keys_[2];
  Block128 buffer_;
  int buffered_ = 0;
  AesTwoRoundsFn rounds_ = nullptr;
};

// splitmix64 step: advances `state` and returns the mixed output.
std::uint64_t SplitMix64(std::uint64_t& state);

}  // namespace permalloc

#endif  // PERMALLOC_PRNG_H_
