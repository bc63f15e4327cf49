#ifndef PERMALLOC_AES_ROUND_H_
#define PERMALLOC_AES_ROUND_H_

#include <cstdint>

namespace permalloc {

// 128-bit block in the byte order of an x86 XMM register: byte 0 is the
// least significant byte of `lo`.
struct Block128 {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;

  friend bool operator==(const Block128&, const Block128&) = default;
};

enum class AesBackend { kAuto, kSoftware, kHardware };

using AesRoundFn = Block128 (*)(Block128 state, Block128 round_key);

// One AES encryption round (SubBytes, ShiftRows, MixColumns, AddRoundKey),
// i.e. the semantics of AESENC.
Block128 AesEncRoundSoftware(Block128 state, Block128 round_key);

// Only valid when HardwareAesAvailable() is true.
Block128 AesEncRoundHardware(Block128 state, Block128 round_key);

bool HardwareAesAvailable();

// kAuto picks hardware when available. Requesting kHardware on a CPU without
// AES-NI falls back to software; both produce identical output.
AesRoundFn SelectAesRound(AesBackend backend = AesBackend::kAuto);

// Two chained rounds under round_keys[0] then round_keys[1]. The hardware
// version keeps the state in a vector register between rounds.
using AesTwoRoundsFn = Block128 (*)(Block128 state, const Block128* round_keys);

Block128 AesEncTwoRoundsSoftware(Block128 state, const Block128* round_keys);
Block128 AesEncTwoRoundsHardware(Block128 state, const Block128* round_keys);
AesTwoRoundsFn SelectAesTwoRounds(AesBackend backend = AesBackend::kAuto);

}  // namespace permalloc

#endif  // PERMALLOC_AES_ROUND_H_
