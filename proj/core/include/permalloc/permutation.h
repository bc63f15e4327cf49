#ifndef PERMALLOC_PERMUTATION_H_
#define PERMALLOC_PERMUTATION_H_

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "permalloc/prng.h"

namespace permalloc {

// Chunk geometry. `granularity` bytes move together; `boundary` bytes form
// one permutation block.
struct PermParams {
  std::uint32_t granularity = 8;
  std::uint32_t boundary = 128;

  std::uint32_t chunk_count() const { return boundary / granularity; }

  // Throws kInvalidArgument unless G in {1,2,4,8}, B in {64,128}.
  void Validate() const;

  friend bool operator==(const PermParams&, const PermParams&) = default;
};

inline constexpr std::size_t kMaxChunks = 128;
inline constexpr std::size_t kMaxPackedChunks = 16;

// A bijection on chunk indices: mapping[i] is where source chunk i lives.
// Stored inline so permutations can be passed around by value without
// allocating.
class Permutation {
 public:
  Permutation() = default;

  static Permutation Identity(std::size_t chunk_count);
  // Throws kInvalidArgument if `mapping` is not a bijection on {0..n-1}.
  static Permutation FromMapping(std::span<const std::uint8_t> mapping);

  std::size_t size() const { return size_; }
  std::uint8_t operator[](std::size_t i) const { return mapping_[i]; }
  std::span<const std::uint8_t> mapping() const { return {mapping_.data(), size_}; }

  bool IsIdentity() const;

  friend bool operator==(const Permutation& a, const Permutation& b) {
    return a.size_ == b.size_ &&
           std::equal(a.mapping_.begin(), a.mapping_.begin() + a.size_, b.mapping_.begin());
  }

 private:
  friend Permutation FisherYates(Prng& rng, std::size_t chunk_count);

  std::array<std::uint8_t, kMaxChunks> mapping_{};
  std::size_t size_ = 0;
};

bool IsBijection(std::span<const std::uint8_t> mapping);

// Fisher-Yates: for i = C-1 down to 1, j = rng() mod (i+1), swap(P[i], P[j]).
Permutation FisherYates(Prng& rng, std::size_t chunk_count);

// Seeds the generator with (key, alias address, size) and shuffles B/G chunks.
// Throws kInvalidArgument for bad params.
// Throws kInvalidSize unless size is a non-zero multiple of the boundary.
Permutation GenPerm(PermKey key, std::uint64_t alias_addr, std::uint64_t size,
                    const PermParams& params = {},
                    AesBackend backend = AesBackend::kAuto);

// 4-bit field i holds mapping[i]. Throws kUnsupportedPacking for C > 16.
std::uint64_t PackPerm(const Permutation& perm);
Permutation UnpackPerm(std::uint64_t packed, std::size_t chunk_count);

Permutation InvertPerm(const Permutation& perm);

// (a ∘ b)[i] = a[b[i]]
Permutation ComposePerm(const Permutation& a, const Permutation& b);

// block*B + mapping[chunk]*G + byte, for the block/chunk/byte of `offset`.
inline std::uint64_t RemapOffset(std::uint64_t offset, const Permutation& perm,
                                    const PermParams& params) {
  const std::uint64_t in_block = offset % params.boundary;
  const std::uint64_t chunk = in_block / params.granularity;
  return (offset - in_block) + perm[chunk] * std::uint64_t{params.granularity} +
         offset % params.granularity;
}

}  // namespace permalloc

#endif  // PERMALLOC_PERMUTATION_H_
