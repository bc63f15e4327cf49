#ifndef PERMALLOC_ARENA_H_
#define PERMALLOC_ARENA_H_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <vector>

namespace permalloc {

inline constexpr int kVirtualBits = 48;
inline constexpr std::uint64_t kVirtualMask = (std::uint64_t{1} << kVirtualBits) - 1;

// Start of the address window used for fixed-base arenas.
inline constexpr std::uint64_t kFixedArenaBase = std::uint64_t{1} << 44;

constexpr std::uint64_t Strip(std::uint64_t addr) { return addr & kVirtualMask; }

// A 64-bit handle: 16-bit alias number over a 48-bit virtual address. The
// high bits make it non-canonical, so it is only ever dereferenced through
// the runtime.
class AliasAddress {
 public:
  constexpr AliasAddress() = default;
  constexpr explicit AliasAddress(std::uint64_t raw) : raw_(raw) {}

  static constexpr AliasAddress Assemble(std::uint16_t alias_number, std::uint64_t va) {
    return AliasAddress((std::uint64_t{alias_number} << kVirtualBits) | Strip(va));
  }

  constexpr std::uint64_t raw() const { return raw_; }
  constexpr std::uint16_t alias_number() const {
    return static_cast<std::uint16_t>(raw_ >> kVirtualBits);
  }
  constexpr std::uint64_t stripped() const { return Strip(raw_); }

  // Pointer arithmetic inside the 48-bit offset; the alias number is kept.
  constexpr AliasAddress operator+(std::uint64_t offset) const {
    return Assemble(alias_number(), raw_ + offset);
  }

  friend constexpr bool operator==(AliasAddress, AliasAddress) = default;

 private:
  std::uint64_t raw_ = 0;
};

struct ArenaConfig {
  std::uint64_t region_size = std::uint64_t{16} << 20;
  std::uint32_t region_count = 64;
  // Ascending powers of two; region i serves size_classes[i % size()].
  std::vector<std::uint64_t> size_classes = DefaultClasses(10);
  // Random bits in each alias number (0..16). 0 pins every alias number to 0.
  std::uint32_t alias_bits = 16;
  // Non-zero: map the arena exactly here (region-aligned) or fail. Seeded
  // experiments use this so permutations, which depend on the address, repeat
  // across processes.
  std::uint64_t base_address = 0;

  // 128 * 2^k for k in [0, count).
  static std::vector<std::uint64_t> DefaultClasses(std::uint32_t count);

  // Applies PERMALLOC_REGION_SIZE, PERMALLOC_REGION_COUNT, PERMALLOC_MAX_CLASS
  // and PERMALLOC_ALIAS_BITS on top of `base`.
  static ArenaConfig FromEnvironment(ArenaConfig base);
  static ArenaConfig FromEnvironment();

  void Validate() const;
};

// Source of raw random bits for alias numbers. Independent of the permutation
// key on purpose.
using AliasSource = std::function<std::uint64_t()>;

AliasSource OsAliasSource();
AliasSource SeededAliasSource(std::uint64_t seed);

// Low-fat style size-class arena. The address range is reserved once and cut
// into equally sized, size-aligned regions, each serving one power-of-two
// class, so GetBase/GetSize are a table lookup and a mask.
class Arena {
 public:
  explicit Arena(ArenaConfig config = {}, AliasSource alias_source = OsAliasSource());
  ~Arena();

  Arena(const Arena&) = delete;
  Arena& operator=(const Arena&) = delete;

  AliasAddress Alloc(std::uint64_t size);
  void Free(AliasAddress handle);

  std::uint64_t GetBase(std::uint64_t addr) const;
  std::uint64_t GetSize(std::uint64_t base) const;

  bool Contains(std::uint64_t addr) const;
  bool IsLive(std::uint64_t base) const;

  // Smallest class >= max(size, 128). Throws kUnsupportedSize.
  std::uint64_t ClassFor(std::uint64_t size) const;

  std::byte* Data(std::uint64_t addr) const {
    return reinterpret_cast<std::byte*>(Strip(addr));
  }

  const ArenaConfig& config() const { return config_; }
  std::uint64_t begin() const { return begin_; }
  std::uint64_t end() const { return begin_ + span_; }
  std::size_t live_slots() const { return live_.load(std::memory_order_relaxed); }

 private:
  struct Region {
    std::uint64_t class_size = 0;
    std::uint64_t slot_count = 0;
    std::mutex mu;
    std::vector<std::uint32_t> free_list;  // LIFO
    std::uint64_t bump = 0;
    std::unique_ptr<std::atomic<std::uint64_t>[]> occupancy;
  };

  std::size_t RegionIndex(std::uint64_t stripped) const;
  std::uint16_t NextAliasNumber();

  ArenaConfig config_;
  int region_shift_ = 0;
  void* mapping_ = nullptr;
  std::size_t mapping_size_ = 0;
  std::uint64_t begin_ = 0;
  std::uint64_t span_ = 0;
  std::vector<std::unique_ptr<Region>> regions_;
  std::mutex alias_mu_;
  AliasSource alias_source_;
  std::atomic<std::size_t> live_{0};
};

}  // namespace permalloc

#endif  // PERMALLOC_ARENA_H_
