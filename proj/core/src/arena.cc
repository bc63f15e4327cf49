#include "permalloc/arena.h"

#include <sys/mman.h>

#include <bit>
#include <cstdlib>
#include <random>
#include <string>

#include "permalloc/error.h"

namespace permalloc {
namespace {

constexpr std::uint64_t kMinClass = 128;

std::uint64_t EnvU64(const char* name, std::uint64_t fallback) {
  const char* value = std::getenv(name);
  if (value == nullptr || *value == '\0') return fallback;
  char* end = nullptr;
  const unsigned long long parsed = std::strtoull(value, &end, 0);
  if (end == value || *end != '\0') {
    Fail(ErrorCode::kInvalidArgument, std::string("cannot parse ") + name + "=" + value);
  }
  return parsed;
}

}  // namespace

std::vector<std::uint64_t> ArenaConfig::DefaultClasses(std::uint32_t count) {
  std::vector<std::uint64_t> classes;
  classes.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) classes.push_back(kMinClass << k);
  return classes;
}

ArenaConfig ArenaConfig::FromEnvironment(ArenaConfig base) {
  base.region_size = EnvU64("PERMALLOC_REGION_SIZE", base.region_size);
  base.region_count =
      static_cast<std::uint32_t>(EnvU64("PERMALLOC_REGION_COUNT", base.region_count));
  base.alias_bits = static_cast<std::uint32_t>(EnvU64("PERMALLOC_ALIAS_BITS", base.alias_bits));
  if (std::getenv("PERMALLOC_MAX_CLASS") != nullptr) {
    const std::uint64_t max_class = EnvU64("PERMALLOC_MAX_CLASS", 0);
    base.size_classes.clear();
    for (std::uint64_t c = kMinClass; c <= max_class; c <<= 1) base.size_classes.push_back(c);
  }
  return base;
}

ArenaConfig ArenaConfig::FromEnvironment() { return FromEnvironment(ArenaConfig{}); }

void ArenaConfig::Validate() const {
  auto bad = [](const std::string& why) { Fail(ErrorCode::kInvalidArgument, "arena config: " + why); };
  if (!std::has_single_bit(region_size)) bad("region_size must be a power of two");
  if (region_count == 0) bad("region_count must be > 0");
  if (alias_bits > 16) bad("alias_bits must be <= 16");
  if (size_classes.empty()) bad("no size classes");
  if (size_classes.front() != kMinClass) bad("smallest class must be 128");
  for (std::size_t i = 0; i < size_classes.size(); ++i) {
    const std::uint64_t c = size_classes[i];
    if (!std::has_single_bit(c)) bad("class " + std::to_string(c) + " is not a power of two");
    if (c > region_size) bad("class " + std::to_string(c) + " exceeds region size");
    if (i > 0 && c <= size_classes[i - 1]) bad("classes must be strictly ascending");
    if (region_size / c > (std::uint64_t{1} << 32)) bad("too many slots per region");
  }
  if (region_count < size_classes.size()) bad("need at least one region per class");
  if ((std::uint64_t{region_count} * region_size) >> kVirtualBits != 0) bad("arena too large");
  if (base_address % region_size != 0) bad("base_address must be region-aligned");
}

AliasSource OsAliasSource() {
  auto device = std::make_shared<std::random_device>();
  return [device] {
    return (std::uint64_t{(*device)()} << 32) | (*device)();
  };
}

AliasSource SeededAliasSource(std::uint64_t seed) {
  auto engine = std::make_shared<std::mt19937_64>(seed);
  return [engine] { return (*engine)(); };
}

Arena::Arena(ArenaConfig config, AliasSource alias_source)
    : config_(std::move(config)), alias_source_(std::move(alias_source)) {
  config_.Validate();
  region_shift_ = std::countr_zero(config_.region_size);
  span_ = std::uint64_t{config_.region_count} * config_.region_size;

  if (config_.base_address != 0) {
    mapping_size_ = span_;
    void* want = reinterpret_cast<void*>(config_.base_address);
    mapping_ = mmap(want, mapping_size_, PROT_READ | PROT_WRITE,
                    MAP_PRIVATE | MAP_ANONYMOUS | MAP_NORESERVE | MAP_FIXED_NOREPLACE, -1, 0);
    if (mapping_ != MAP_FAILED && mapping_ != want) munmap(mapping_, mapping_size_);
    if (mapping_ != want) {
      mapping_ = nullptr;
      Fail(ErrorCode::kOutOfMemory, "address range at the fixed arena base is unavailable");
    }
    begin_ = config_.base_address;
  } else {
    // Over-reserve by one region so the arena can start on a region boundary.
    mapping_size_ = span_ + config_.region_size;
    mapping_ = mmap(nullptr, mapping_size_, PROT_READ | PROT_WRITE,
                    MAP_PRIVATE | MAP_ANONYMOUS | MAP_NORESERVE, -1, 0);
    if (mapping_ == MAP_FAILED) {
      mapping_ = nullptr;
      Fail(ErrorCode::kOutOfMemory, "cannot reserve " + std::to_string(mapping_size_) + " bytes");
    }
    const std::uint64_t raw = reinterpret_cast<std::uint64_t>(mapping_);
    begin_ = (raw + config_.region_size - 1) & ~(config_.region_size - 1);
  }
  if (Strip(begin_ + span_ - 1) != begin_ + span_ - 1) {
    munmap(mapping_, mapping_size_);
    mapping_ = nullptr;
    Fail(ErrorCode::kOutOfMemory, "arena does not fit in 48-bit address space");
  }

  regions_.reserve(config_.region_count);
  for (std::uint32_t i = 0; i < config_.region_count; ++i) {
    auto region = std::make_unique<Region>();
    region->class_size = config_.size_classes[i % config_.size_classes.size()];
    region->slot_count = config_.region_size / region->class_size;
    const std::size_t words = (region->slot_count + 63) / 64;
    region->occupancy = std::make_unique<std::atomic<std::uint64_t>[]>(words);
    for (std::size_t w = 0; w < words; ++w) region->occupancy[w].store(0, std::memory_order_relaxed);
    regions_.push_back(std::move(region));
  }
}

Arena::~Arena() {
  if (mapping_ != nullptr) munmap(mapping_, mapping_size_);
}

std::uint64_t Arena::ClassFor(std::uint64_t size) const {
  for (const std::uint64_t c : config_.size_classes) {
    if (c >= size) return c;
  }
  Fail(ErrorCode::kUnsupportedSize,
       "size " + std::to_string(size) + " exceeds largest class " +
           std::to_string(config_.size_classes.back()));
}

std::uint16_t Arena::NextAliasNumber() {
  if (config_.alias_bits == 0) return 0;
  std::uint64_t bits;
  {
    std::lock_guard lock(alias_mu_);
    bits = alias_source_();
  }
  const std::uint64_t mask = (std::uint64_t{1} << config_.alias_bits) - 1;
  // The random bits occupy the most significant end of the 16-bit field.
  return static_cast<std::uint16_t>((bits & mask) << (16 - config_.alias_bits));
}

AliasAddress Arena::Alloc(std::uint64_t size) {
  if (size == 0) Fail(ErrorCode::kInvalidArgument, "alloc: size must be > 0");
  const std::uint64_t cls = ClassFor(size);

  for (std::size_t i = 0; i < regions_.size(); ++i) {
    Region& region = *regions_[i];
    if (region.class_size != cls) continue;

    std::uint64_t slot;
    {
      std::lock_guard lock(region.mu);
      if (!region.free_list.empty()) {
        slot = region.free_list.back();
        region.free_list.pop_back();
      } else if (region.bump < region.slot_count) {
        slot = region.bump++;
      } else {
        continue;
      }
      region.occupancy[slot / 64].fetch_or(std::uint64_t{1} << (slot % 64),
                                            std::memory_order_release);
    }
    live_.fetch_add(1, std::memory_order_relaxed);
    const std::uint64_t va = begin_ + (std::uint64_t{i} << region_shift_) + slot * cls;
    return AliasAddress::Assemble(NextAliasNumber(), va);
  }
  Fail(ErrorCode::kOutOfMemory, "no free slot of class " + std::to_string(cls));
}

void Arena::Free(AliasAddress handle) {
  const std::uint64_t va = handle.stripped();
  if (!Contains(va)) Fail(ErrorCode::kInvalidFree, "free of address outside the arena");
  Region& region = *regions_[RegionIndex(va)];
  const std::uint64_t slot = ((va - begin_) & (config_.region_size - 1)) / region.class_size;
  const std::uint64_t bit = std::uint64_t{1} << (slot % 64);

  std::lock_guard lock(region.mu);
  if ((region.occupancy[slot / 64].load(std::memory_order_relaxed) & bit) == 0) {
    Fail(ErrorCode::kInvalidFree, "double free or never-allocated slot");
  }
  region.occupancy[slot / 64].fetch_and(~bit, std::memory_order_release);
  region.free_list.push_back(static_cast<std::uint32_t>(slot));
  live_.fetch_sub(1, std::memory_order_relaxed);
}

bool Arena::Contains(std::uint64_t addr) const {
  const std::uint64_t va = Strip(addr);
  return va >= begin_ && va - begin_ < span_;
}

std::size_t Arena::RegionIndex(std::uint64_t stripped) const {
  return static_cast<std::size_t>((stripped - begin_) >> region_shift_);
}

std::uint64_t Arena::GetBase(std::uint64_t addr) const {
  const std::uint64_t va = Strip(addr);
  if (!Contains(va)) Fail(ErrorCode::kUnknownAddress, "address outside the arena");
  return va & ~(regions_[RegionIndex(va)]->class_size - 1);
}

std::uint64_t Arena::GetSize(std::uint64_t base) const {
  const std::uint64_t va = Strip(base);
  if (!Contains(va)) Fail(ErrorCode::kUnknownAddress, "address outside the arena");
  const std::uint64_t cls = regions_[RegionIndex(va)]->class_size;
  if ((va & (cls - 1)) != 0) Fail(ErrorCode::kUnknownAddress, "address is not a slot base");
  return cls;
}

bool Arena::IsLive(std::uint64_t base) const {
  const std::uint64_t va = Strip(base);
  if (!Contains(va)) return false;
  const Region& region = *regions_[RegionIndex(va)];
  const std::uint64_t slot = ((va - begin_) & (config_.region_size - 1)) / region.class_size;
  return (region.occupancy[slot / 64].load(std::memory_order_acquire) >> (slot % 64)) & 1;
}

}  // namespace permalloc
