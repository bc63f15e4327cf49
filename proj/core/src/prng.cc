#include "permalloc/prng.h"

#include <bit>

#include "permalloc/error.h"

namespace permalloc {

std::uint64_t SplitMix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Prng Prng::Seed(PermKey key, std::uint64_t alias_addr, std::uint64_t size,
                AesBackend backend) {
  if (size == 0) Fail(ErrorCode::kInvalidArgument, "prng seed: size must be > 0");

  Prng prng;
  prng.rounds_ = SelectAesTwoRounds(backend);

  std::uint64_t expand = key.value;
  for (auto& rk : prng.round_keys_) {
    rk.lo = SplitMix64(expand);
    rk.hi = SplitMix64(expand);
  }

  const Block128 seed{alias_addr, size ^ std::rotl(key.value, 32)};
  prng.counter_ = prng.Encrypt(seed);
  return prng;
}

Block128 Prng::Encrypt(Block128 block) const {
  return rounds_(block, round_keys_);
}

std::uint64_t Prng::Next() {
  if (buffered_ == 0) {
    counter_.lo += kIncrement.lo;
    counter_.hi += kIncrement.hi;
    buffer_ = Encrypt(counter_);
    buffered_ = 2;
  }
  return buffered_-- == 2 ? buffer_.lo : buffer_.hi;
}

}  // namespace permalloc
