#include "permalloc/aes_round.h"

#include <array>
#include <cstring>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define PERMALLOC_X86 1
#endif

namespace permalloc {
namespace {

constexpr std::uint8_t Xtime(std::uint8_t x) {
  return static_cast<std::uint8_t>((x << 1) ^ ((x & 0x80) ? 0x1b : 0x00));
}

constexpr std::uint8_t GfMul(std::uint8_t a, std::uint8_t b) {
  std::uint8_t p = 0;
  while (b != 0) {
    if (b & 1) p ^= a;
    a = Xtime(a);
    b >>= 1;
  }
  return p;
}

constexpr std::uint8_t Rotl8(std::uint8_t x, int s) {
  return static_cast<std::uint8_t>((x << s) | (x >> (8 - s)));
}

// S-box from the multiplicative inverse in GF(2^8) followed by the affine map.
constexpr std::array<std::uint8_t, 256> BuildSbox() {
  std::array<std::uint8_t, 256> sbox{};
  for (int v = 0; v < 256; ++v) {
    std::uint8_t inv = 0;
    if (v != 0) {
      for (int c = 1; c < 256; ++c) {
        if (GfMul(static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(c)) == 1) {
          inv = static_cast<std::uint8_t>(c);
          break;
        }
      }
    }
    sbox[v] = static_cast<std::uint8_t>(inv ^ Rotl8(inv, 1) ^ Rotl8(inv, 2) ^
                                        Rotl8(inv, 3) ^ Rotl8(inv, 4) ^ 0x63);
  }
  return sbox;
}

constexpr std::array<std::uint8_t, 256> kSbox = BuildSbox();
static_assert(kSbox[0x00] == 0x63 && kSbox[0x53] == 0xed);

void ToBytes(Block128 b, std::uint8_t out[16]) {
  for (int i = 0; i < 8; ++i) {
    out[i] = static_cast<std::uint8_t>(b.lo >> (8 * i));
    out[8 + i] = static_cast<std::uint8_t>(b.hi >> (8 * i));
  }
}

Block128 FromBytes(const std::uint8_t in[16]) {
  Block128 b;
  for (int i = 0; i < 8; ++i) {
    b.lo |= static_cast<std::uint64_t>(in[i]) << (8 * i);
    b.hi |= static_cast<std::uint64_t>(in[8 + i]) << (8 * i);
  }
  return b;
}

}  // namespace

Block128 AesEncRoundSoftware(Block128 state, Block128 round_key) {
  std::uint8_t s[16];
  ToBytes(state, s);

  // SubBytes + ShiftRows. State is column-major: byte (row r, column c) is s[r + 4c].
  std::uint8_t t[16];
  for (int c = 0; c < 4; ++c) {
    for (int r = 0; r < 4; ++r) {
      t[r + 4 * c] = kSbox[s[r + 4 * ((c + r) & 3)]];
    }
  }

  // MixColumns
  for (int c = 0; c < 4; ++c) {
    const std::uint8_t a0 = t[4 * c], a1 = t[4 * c + 1], a2 = t[4 * c + 2], a3 = t[4 * c + 3];
    const std::uint8_t all = a0 ^ a1 ^ a2 ^ a3;
    s[4 * c] = a0 ^ all ^ Xtime(a0 ^ a1);
    s[4 * c + 1] = a1 ^ all ^ Xtime(a1 ^ a2);
    s[4 * c + 2] = a2 ^ all ^ Xtime(a2 ^ a3);
    s[4 * c + 3] = a3 ^ all ^ Xtime(a3 ^ a0);
  }

  Block128 out = FromBytes(s);
  out.lo ^= round_key.lo;
  out.hi ^= round_key.hi;
  return out;
}

#ifdef PERMALLOC_X86

__attribute__((target("aes,sse2"))) Block128 AesEncRoundHardware(Block128 state,
                                                                Block128 round_key) {
  const __m128i s = _mm_set_epi64x(static_cast<long long>(state.hi),
                                   static_cast<long long>(state.lo));
  const __m128i k = _mm_set_epi64x(static_cast<long long>(round_key.hi),
                                   static_cast<long long>(round_key.lo));
  const __m128i r = _mm_aesenc_si128(s, k);
  Block128 out;
  std::memcpy(&out.lo, &r, 8);
  std::memcpy(&out.hi, reinterpret_cast<const char*>(&r) + 8, 8);
  return out;
}

__attribute__((target("aes,sse2"))) Block128 AesEncTwoRoundsHardware(
    Block128 state, const Block128* round_keys) {
  __m128i s = _mm_set_epi64x(static_cast<long long>(state.hi), static_cast<long long>(state.lo));
  for (int i = 0; i < 2; ++i) {
    s = _mm_aesenc_si128(s, _mm_set_epi64x(static_cast<long long>(round_keys[i].hi),
                                           static_cast<long long>(round_keys[i].lo)));
  }
  Block128 out;
  std::memcpy(&out.lo, &s, 8);
  std::memcpy(&out.hi, reinterpret_cast<const char*>(&s) + 8, 8);
  return out;
}

bool HardwareAesAvailable() {
  static const bool available = __builtin_cpu_supports("aes");
  return available;
}

#else

Block128 AesEncRoundHardware(Block128 state, Block128 round_key) {
  return AesEncRoundSoftware(state, round_key);
}

Block128 AesEncTwoRoundsHardware(Block128 state, const Block128* round_keys) {
  return AesEncTwoRoundsSoftware(state, round_keys);
}

bool HardwareAesAvailable() { return false; }

#endif

Block128 AesEncTwoRoundsSoftware(Block128 state, const Block128* round_keys) {
  return AesEncRoundSoftware(AesEncRoundSoftware(state, round_keys[0]), round_keys[1]);
}

AesTwoRoundsFn SelectAesTwoRounds(AesBackend backend) {
  if (backend == AesBackend::kSoftware || !HardwareAesAvailable()) {
    return &AesEncTwoRoundsSoftware;
  }
  return &AesEncTwoRoundsHardware;
}

AesRoundFn SelectAesRound(AesBackend backend) {
  if (backend == AesBackend::kSoftware || !HardwareAesAvailable()) {
    return &AesEncRoundSoftware;
  }
  return &AesEncRoundHardware;
}

}  // namespace permalloc
