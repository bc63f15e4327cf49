#include "permalloc/permutation.h"

#include <algorithm>
#include <bitset>
#include <string>
#include <utility>

#include "permalloc/error.h"

namespace permalloc {

void PermParams::Validate() const {
  const bool g_ok = granularity == 1 || granularity == 2 || granularity == 4 || granularity == 8;
  const bool b_ok = boundary == 64 || boundary == 128;
  if (!g_ok || !b_ok || boundary % granularity != 0 || chunk_count() < 2) {
    Fail(ErrorCode::kInvalidArgument,
         "invalid permutation params: G=" + std::to_string(granularity) +
             " B=" + std::to_string(boundary));
  }
}

Permutation Permutation::Identity(std::size_t chunk_count) {
  if (chunk_count == 0 || chunk_count > kMaxChunks) {
    Fail(ErrorCode::kInvalidArgument, "chunk count out of range");
  }
  Permutation p;
  p.size_ = chunk_count;
  for (std::size_t i = 0; i < chunk_count; ++i) p.mapping_[i] = static_cast<std::uint8_t>(i);
  return p;
}

Permutation Permutation::FromMapping(std::span<const std::uint8_t> mapping) {
  if (mapping.empty() || mapping.size() > kMaxChunks || !IsBijection(mapping)) {
    Fail(ErrorCode::kInvalidArgument, "mapping is not a bijection");
  }
  Permutation p;
  p.size_ = mapping.size();
  std::copy(mapping.begin(), mapping.end(), p.mapping_.begin());
  return p;
}

bool Permutation::IsIdentity() const {
  for (std::size_t i = 0; i < size_; ++i) {
    if (mapping_[i] != i) return false;
  }
  return true;
}

bool IsBijection(std::span<const std::uint8_t> mapping) {
  std::bitset<256> seen;
  for (const std::uint8_t v : mapping) {
    if (v >= mapping.size() || seen.test(v)) return false;
    seen.set(v);
  }
  return true;
}

Permutation FisherYates(Prng& rng, std::size_t chunk_count) {
  Permutation p = Permutation::Identity(chunk_count);
  for (std::size_t i = chunk_count - 1; i >= 1; --i) {
    const std::size_t j = rng.Next() % (i + 1);
    std::swap(p.mapping_[i], p.mapping_[j]);
  }
  return p;
}

Permutation GenPerm(PermKey key, std::uint64_t alias_addr, std::uint64_t size,
                    const PermParams& params, AesBackend backend) {
  params.Validate();
  if (size < params.boundary || size % params.boundary != 0) {
    Fail(ErrorCode::kInvalidSize,
         "allocation size " + std::to_string(size) + " is not a multiple of the " +
             std::to_string(params.boundary) + "-byte boundary");
  }
  Prng rng = Prng::Seed(key, alias_addr, size, backend);
  return FisherYates(rng, params.chunk_count());
}

std::uint64_t PackPerm(const Permutation& perm) {
  if (perm.size() > kMaxPackedChunks) {
    Fail(ErrorCode::kUnsupportedPacking,
         "cannot pack " + std::to_string(perm.size()) + " chunks into 64 bits");
  }
  std::uint64_t packed = 0;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    packed |= std::uint64_t{perm[i]} << (4 * i);
  }
  return packed;
}

Permutation UnpackPerm(std::uint64_t packed, std::size_t chunk_count) {
  if (chunk_count > kMaxPackedChunks) {
    Fail(ErrorCode::kUnsupportedPacking, "packed permutations hold at most 16 chunks");
  }
  std::array<std::uint8_t, kMaxPackedChunks> mapping{};
  for (std::size_t i = 0; i < chunk_count; ++i) {
    mapping[i] = static_cast<std::uint8_t>((packed >> (4 * i)) & 0xF);
  }
  return Permutation::FromMapping({mapping.data(), chunk_count});
}

Permutation InvertPerm(const Permutation& perm) {
  std::array<std::uint8_t, kMaxChunks> inverse{};
  for (std::size_t i = 0; i < perm.size(); ++i) {
    inverse[perm[i]] = static_cast<std::uint8_t>(i);
  }
  return Permutation::FromMapping({inverse.data(), perm.size()});
}

Permutation ComposePerm(const Permutation& a, const Permutation& b) {
  if (a.size() != b.size()) Fail(ErrorCode::kInvalidArgument, "size mismatch");
  std::array<std::uint8_t, kMaxChunks> out{};
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = a[b[i]];
  return Permutation::FromMapping({out.data(), a.size()});
}

}  // namespace permalloc
