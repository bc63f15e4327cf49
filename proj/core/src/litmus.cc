#include "permalloc/litmus.h"

#include <array>
#include <cmath>
#include <cstdio>
#include <exception>
#include <memory>
#include <random>
#include <thread>
#include <vector>

#include "permalloc/arena.h"
#include "permalloc/buf2ptr.h"
#include "permalloc/error.h"
#include "permalloc/runtime.h"

namespace permalloc {

std::string_view ScenarioName(Scenario s) {
  switch (s) {
    case Scenario::kIntraOverflow: return "intra_overflow";
    case Scenario::kInterOverflow: return "inter_overflow";
    case Scenario::kUseAfterFree: return "use_after_free";
    case Scenario::kTypeConfusion: return "type_confusion";
    case Scenario::kOverRead: return "over_read";
    case Scenario::kUninitRead: return "uninit_read";
  }
  return "?";
}

Scenario ParseScenario(std::string_view name) {
  for (Scenario s : kAllScenarios) {
    if (ScenarioName(s) == name) return s;
  }
  Fail(ErrorCode::kInvalidArgument, "unknown litmus scenario '" + std::string(name) + "'");
}

double TheoreticalHit(std::uint32_t alias_bits, std::uint32_t chunk_count, bool full_block) {
  // Equal alias numbers give the attacker the victim's own permutation.
  const double same_alias = std::ldexp(1.0, -static_cast<int>(alias_bits));
  double blind = 1.0 / chunk_count;
  if (full_block) {
    blind = 1.0;
    for (std::uint32_t k = 2; k <= chunk_count; ++k) blind /= k;
  }
  return same_alias + (1.0 - same_alias) * blind;
}

bool WithinThreeSigma(std::uint64_t trials, std::uint64_t successes, double p) {
  const double n = static_cast<double>(trials);
  const double sigma = std::sqrt(n * p * (1.0 - p));
  return std::abs(static_cast<double>(successes) - n * p) <= 3.0 * sigma + 1e-9;
}

bool LitmusResult::WithinThreeSigma() const {
  return permalloc::WithinThreeSigma(trials, successes, theoretical);
}

namespace {

constexpr std::uint64_t kObjectSize = 128;
constexpr std::uint64_t kAliasSeedSalt = 0x5EC0DA11A5ull;
constexpr std::uint64_t kWorkerArenaStride = std::uint64_t{1} << 24;
constexpr std::uint64_t kTagSalt = 0x7A61DEADBEEFull;

using Token = std::array<std::byte, 8>;

// Victim tokens carry the chunk index in the low byte (< 128); attacker
// tokens set bit 7, so even 1-byte chunks stay distinguishable.
Token MakeToken(std::uint64_t tag, std::uint32_t chunk, bool attacker) {
  const std::uint64_t v = (tag << 8) | chunk | (attacker ? 0x80u : 0u);
  Token t;
  for (int i = 0; i < 8; ++i) t[i] = static_cast<std::byte>(v >> (8 * i));
  return t;
}

struct TrialOutcome {
  bool success = false;
  std::uint32_t chunk_hits = 0;
  std::uint32_t chunks = 0;
  // Attacker and victim handles carried the same alias number.
  bool same_alias = false;
};

class Worker {
 public:
  Worker(const LitmusOptions& o, PermKey key, AliasSource aliases, std::uint64_t tag_seed,
         std::uint64_t base_address)
      : arena_(LitmusArena(o.alias_bits, base_address), std::move(aliases)),
        ctx_(arena_, key, o.params, o.cache_entries),
        g_(o.params.granularity),
        chunks_(o.params.chunk_count()),
        target_(std::min<std::uint32_t>(3, chunks_ - 1)),
        tag_seed_(tag_seed) {
    if (o.scenario == Scenario::kIntraOverflow) PrepareIntra();
  }

  TrialOutcome Run(Scenario s, std::uint64_t trial) {
    std::uint64_t mix = tag_seed_ + trial;
    const std::uint64_t tag = SplitMix64(mix) >> 16;
    switch (s) {
      case Scenario::kIntraOverflow: return IntraOverflow(tag);
      case Scenario::kInterOverflow: return InterOverflow(tag);
      case Scenario::kUseAfterFree: return UseAfterFree(tag);
      case Scenario::kTypeConfusion: return TypeConfusion(tag);
      case Scenario::kOverRead: return OverRead(tag);
      case Scenario::kUninitRead: return UninitRead(tag);
    }
    return {};
  }

 private:
  static ArenaConfig LitmusArena(std::uint32_t alias_bits, std::uint64_t base_address) {
    ArenaConfig c;
    c.base_address = base_address;
    c.region_size = std::uint64_t{1} << 20;
    c.region_count = 1;
    c.size_classes = {kObjectSize};
    c.alias_bits = alias_bits;
    return c;
  }

  std::span<const std::byte> Chunk(const Token& t) const { return {t.data(), g_}; }

  void WriteVictim(AliasAddress h, std::uint64_t tag) {
    for (std::uint32_t c = 0; c < chunks_; ++c) {
      ctx_.Store(h + c * g_, Chunk(MakeToken(tag, c, false)));
    }
  }

  bool ChunkEquals(AliasAddress at, const Token& expected) {
    Token got{};
    ctx_.Load(at, {got.data(), g_});
    return std::equal(got.begin(), got.begin() + g_, expected.begin());
  }

  static std::uint64_t Distance(AliasAddress from, AliasAddress to) {
    return to.stripped() - from.stripped();  // modular; AliasAddress::operator+ wraps
  }

  static TrialOutcome Single(bool hit, AliasAddress a, AliasAddress b) {
    return {hit, hit ? 1u : 0u, 1, a.alias_number() == b.alias_number()};
  }

  // Attacker overflows its own object into the neighbour's target chunk.
  TrialOutcome InterOverflow(std::uint64_t tag) {
    const AliasAddress attacker = arena_.Alloc(kObjectSize);
    const AliasAddress victim = arena_.Alloc(kObjectSize);
    WriteVictim(victim, tag);
    const Token payload = MakeToken(tag, target_, true);
    ctx_.Store(attacker + Distance(attacker, victim) + target_ * g_, Chunk(payload));
    const bool hit = ChunkEquals(victim + target_ * g_, payload);
    arena_.Free(victim);
    arena_.Free(attacker);
    return Single(hit, attacker, victim);
  }

  // Attacker reads past its own object and hopes for the neighbour's field.
  TrialOutcome OverRead(std::uint64_t tag) {
    const AliasAddress attacker = arena_.Alloc(kObjectSize);
    const AliasAddress victim = arena_.Alloc(kObjectSize);
    WriteVictim(victim, tag);
    const bool hit = ChunkEquals(attacker + Distance(attacker, victim) + target_ * g_,
                                 MakeToken(tag, target_, false));
    arena_.Free(victim);
    arena_.Free(attacker);
    return Single(hit, attacker, victim);
  }

  // The victim slot is reinterpreted through a pointer carrying the alias of
  // the attacker's own (differently typed) object.
  TrialOutcome TypeConfusion(std::uint64_t tag) {
    const AliasAddress victim = arena_.Alloc(kObjectSize);
    const AliasAddress attacker = arena_.Alloc(kObjectSize);
    WriteVictim(victim, tag);
    const AliasAddress confused = AliasAddress::Assemble(attacker.alias_number(), victim.stripped());
    const bool hit = ChunkEquals(confused + target_ * g_, MakeToken(tag, target_, false));
    arena_.Free(attacker);
    arena_.Free(victim);
    return Single(hit, attacker, victim);
  }

  // A dangling handle writes into the slot's next owner.
  TrialOutcome UseAfterFree(std::uint64_t tag) {
    const AliasAddress dangling = arena_.Alloc(kObjectSize);
    WriteVictim(dangling, tag ^ 1);
    arena_.Free(dangling);
    const AliasAddress owner = arena_.Alloc(kObjectSize);
    if (owner.stripped() != dangling.stripped()) {
      Fail(ErrorCode::kStateError, "use_after_free: slot was not reused");
    }
    WriteVictim(owner, tag);
    const Token payload = MakeToken(tag, target_, true);
    ctx_.Store(dangling + target_ * g_, Chunk(payload));
    const bool hit = ChunkEquals(owner + target_ * g_, payload);
    arena_.Free(owner);
    return Single(hit, dangling, owner);
  }

  // A fresh allocation over a freed secret reads the secret back in place.
  TrialOutcome UninitRead(std::uint64_t tag) {
    const AliasAddress old_owner = arena_.Alloc(kObjectSize);
    WriteVictim(old_owner, tag);
    arena_.Free(old_owner);
    const AliasAddress reader = arena_.Alloc(kObjectSize);
    if (reader.stripped() != old_owner.stripped()) {
      Fail(ErrorCode::kStateError, "uninit_read: slot was not reused");
    }
    TrialOutcome out;
    out.chunks = chunks_;
    for (std::uint32_t c = 0; c < chunks_; ++c) {
      if (ChunkEquals(reader + c * g_, MakeToken(tag, c, false))) ++out.chunk_hits;
    }
    out.success = out.chunk_hits == chunks_;
    out.same_alias = reader.alias_number() == old_owner.alias_number();
    arena_.Free(reader);
    return out;
  }

  void PrepareIntra() {
    using namespace buf2ptr;
    StructSchema session;
    session.name = "Session";
    session.fields = {Field::Array("name", "char", 16), Field::Scalar("is_admin", "uint64")};
    const RecordLayout original = ComputeLayout(session);
    // The overflow reaches is_admin from name[] in the original layout.
    overflow_offset_ = original.at("is_admin").offset - original.at("name").offset;

    const PromotionResult promoted = Promote(session);
    const RecordLayout parent = ComputeLayout(promoted.schemas[0]);
    parent_size_ = parent.size;
    pointer_offset_ = parent.at("p_name").offset;
    admin_offset_ = parent.at("is_admin").offset;
    child_size_ = ComputeLayout(promoted.schemas[1]).size;
  }

  // name[] is promoted to its own allocation, so the classic overflow into
  // is_admin now runs inside the child object instead.
  TrialOutcome IntraOverflow(std::uint64_t tag) {
    const AliasAddress parent = arena_.Alloc(parent_size_);
    const AliasAddress child = arena_.Alloc(child_size_);
    ctx_.StoreValue<std::uint64_t>(parent + pointer_offset_, child.raw());
    const std::uint64_t victim_value = tag << 1;
    const std::uint64_t attack_value = victim_value | 1;
    ctx_.StoreValue<std::uint64_t>(parent + admin_offset_, victim_value);

    const AliasAddress buffer(ctx_.LoadValue<std::uint64_t>(parent + pointer_offset_));
    ctx_.StoreValue<std::uint64_t>(buffer + overflow_offset_, attack_value);

    const bool hit = ctx_.LoadValue<std::uint64_t>(parent + admin_offset_) == attack_value;
    arena_.Free(child);
    arena_.Free(parent);
    return {hit, hit ? 1u : 0u, 1, false};
  }

  Arena arena_;
  AccessContext ctx_;
  std::size_t g_;
  std::uint32_t chunks_;
  std::uint32_t target_;
  std::uint64_t tag_seed_;

  std::uint64_t overflow_offset_ = 0;
  std::uint64_t parent_size_ = 0;
  std::uint64_t child_size_ = 0;
  std::uint64_t pointer_offset_ = 0;
  std::uint64_t admin_offset_ = 0;
};

std::uint64_t Entropy64() {
  std::random_device rd;
  return (std::uint64_t{rd()} << 32) | rd();
}

std::string Fixed(double v, const char* fmt = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

LitmusResult RunLitmus(const LitmusOptions& options) {
  if (options.trials < 1000) Fail(ErrorCode::kInvalidArgument, "litmus: trials must be >= 1000");
  if (options.threads == 0) Fail(ErrorCode::kInvalidArgument, "litmus: threads must be >= 1");
  options.params.Validate();

  std::uint64_t seed_state = options.seed ? *options.seed : Entropy64();
  const PermKey key{SplitMix64(seed_state)};

  const unsigned threads = options.threads;
  struct Tally {
    std::uint64_t successes = 0;
    std::uint64_t chunk_hits = 0;
    std::uint64_t chunks = 0;
    std::uint64_t same_alias = 0;
    std::uint64_t same_alias_successes = 0;
  };
  std::vector<Tally> totals(threads);
  std::vector<std::exception_ptr> errors(threads);

  auto work = [&](unsigned t) {
    try {
      const std::uint64_t begin = options.trials * t / threads;
      const std::uint64_t end = options.trials * (t + 1) / threads;
      AliasSource aliases = options.seed
                                ? SeededAliasSource(*options.seed ^ kAliasSeedSalt ^ (t * 0x9E37ull))
                                : OsAliasSource();
      // Seeded runs pin each thread's arena so addresses, and with them the
      // permutations, repeat from run to run.
      const std::uint64_t base = options.seed ? kFixedArenaBase + t * kWorkerArenaStride : 0;
      Worker worker(options, key, std::move(aliases), key.value ^ kTagSalt, base);
      Tally& sum = totals[t];
      for (std::uint64_t i = begin; i < end; ++i) {
        const TrialOutcome o = worker.Run(options.scenario, i);
        sum.chunk_hits += o.chunk_hits;
        sum.chunks += o.chunks;
        if (o.success) ++sum.successes;
        if (o.same_alias) {
          ++sum.same_alias;
          if (o.success) ++sum.same_alias_successes;
        }
      }
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };

  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (std::thread& th : pool) th.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  LitmusResult r;
  r.scenario = std::string(ScenarioName(options.scenario));
  r.trials = options.trials;
  for (const Tally& t : totals) {
    r.successes += t.successes;
    r.chunk_successes += t.chunk_hits;
    r.chunk_trials += t.chunks;
    r.alias_collisions += t.same_alias;
    r.alias_collision_successes += t.same_alias_successes;
  }
  r.empirical = static_cast<double>(r.successes) / static_cast<double>(r.trials);

  const std::uint32_t c = options.params.chunk_count();
  switch (options.scenario) {
    case Scenario::kIntraOverflow:
      r.theoretical = r.chunk_theoretical = 0.0;
      break;
    case Scenario::kUninitRead:
      r.theoretical = TheoreticalHit(options.alias_bits, c, true);
      r.chunk_theoretical = TheoreticalHit(options.alias_bits, c, false);
      break;
    default:
      r.theoretical = r.chunk_theoretical = TheoreticalHit(options.alias_bits, c, false);
      break;
  }
  return r;
}

std::string LitmusCsv(std::span<const LitmusResult> results) {
  std::string out =
      "scenario,trials,successes,empirical,theoretical,chunk_trials,chunk_successes,"
      "chunk_theoretical,alias_collisions,alias_collision_successes\n";
  for (const LitmusResult& r : results) {
    out += r.scenario + "," + std::to_string(r.trials) + "," + std::to_string(r.successes) + "," +
           Fixed(r.empirical, "%.8f") + "," + Fixed(r.theoretical, "%.8g") + "," +
           std::to_string(r.chunk_trials) + "," + std::to_string(r.chunk_successes) + "," +
           Fixed(r.chunk_theoretical, "%.8g") + "," + std::to_string(r.alias_collisions) + "," +
           std::to_string(r.alias_collision_successes) + "\n";
  }
  return out;
}

nlohmann::json LitmusJson(const LitmusResult& r) {
  return {{"scenario", r.scenario},
          {"trials", r.trials},
          {"successes", r.successes},
          {"empirical", r.empirical},
          {"theoretical", r.theoretical},
          {"chunk_trials", r.chunk_trials},
          {"chunk_successes", r.chunk_successes},
          {"chunk_theoretical", r.chunk_theoretical},
          {"alias_collisions", r.alias_collisions},
          {"alias_collision_successes", r.alias_collision_successes},
          {"within_3_sigma", r.WithinThreeSigma()}};
}

}  // namespace permalloc
