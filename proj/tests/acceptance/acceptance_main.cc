// Acceptance gate: runs criteria 1-10 at their stated sizes and tolerances
// and prints one PASS/FAIL line per criterion. Exit status is non-zero if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "permalloc/permalloc.h"

namespace {

using namespace permalloc;

constexpr std::uint64_t kSeed = 0x0123456789ABCDEFull;

struct Outcome {
  bool pass = false;
  std::string detail;
  // Every measured quantity, so two runs can be compared for identity.
  std::string fingerprint;
};

struct Settings {
  std::size_t cache_entries = kDefaultCacheEntries;
};

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::string BinsOf(const Histogram& h) {
  std::string s;
  for (std::uint64_t b : h.bins) s += std::to_string(b) + " ";
  return s;
}

// 1. Exhaustive round trips for every class <= 1024 and every geometry, then
// unpermute/permute on the filled slot.
Outcome RoundTrips(const Settings& st) {
  const auto start = std::chrono::steady_clock::now();
  ArenaConfig config;
  config.region_size = 1 << 20;
  config.region_count = 10;
  Arena arena(config, SeededAliasSource(kSeed));
  std::mt19937_64 rng(kSeed);
  std::uint64_t checks = 0, failures = 0;

  for (std::uint32_t g : {1u, 2u, 4u, 8u}) {
    for (std::uint32_t b : {64u, 128u}) {
      AccessContext ctx(arena, PermKey{kSeed}, {g, b}, st.cache_entries);
      for (std::uint64_t size : {128u, 256u, 512u, 1024u}) {
        const AliasAddress h = arena.Alloc(size);
        std::vector<std::byte> shadow(size);
        for (auto& x : shadow) x = static_cast<std::byte>(rng());
        ctx.Store(h, shadow);
        for (std::size_t w : {1u, 2u, 4u, 8u}) {
          for (std::size_t off = 0; off + w <= size; ++off) {
            std::byte value[8];
            for (std::size_t i = 0; i < w; ++i) value[i] = static_cast<std::byte>(rng());
            ctx.Store(h + off, {value, w});
            std::memcpy(shadow.data() + off, value, w);
            std::byte back[8];
            ctx.Load(h + off, {back, w});
            ++checks;
            failures += std::memcmp(back, value, w) != 0;
          }
        }
        ++checks;
        failures += ctx.Load(h, size) != shadow;

        ctx.Unpermute(h);
        ++checks;
        failures += std::memcmp(arena.Data(h.stripped()), shadow.data(), size) != 0;
        ctx.Permute(h);
        ++checks;
        failures += ctx.Load(h, size) != shadow;
        arena.Free(h);
      }
    }
  }
  const double secs = Seconds(start);
  return {failures == 0 && secs < 60,
          Format("%llu round-trip checks over classes 128..1024 x 8 geometries, %llu failures, %.1fs",
                 static_cast<unsigned long long>(checks), static_cast<unsigned long long>(failures), secs),
          std::to_string(failures)};
}

// 2. 10^6 permutations at C = 16 are bijections and survive packing.
Outcome PermutationValidity(const Settings&) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(kSeed);
  std::uint64_t bad = 0, bad_pack = 0, digest = 0;
  for (int i = 0; i < 1000000; ++i) {
    const std::uint64_t addr = rng();
    const std::uint64_t size = 128 << (rng() % 10);
    const Permutation p = GenPerm(PermKey{kSeed}, addr, size);
    bad += p.size() != 16 || !IsBijection(p.mapping());
    const std::uint64_t packed = PackPerm(p);
    bad_pack += UnpackPerm(packed, 16) != p;
    digest = digest * 31 + packed;
  }
  const double secs = Seconds(start);
  return {bad == 0 && bad_pack == 0 && secs < 60,
          Format("10^6 permutations at C=16: %llu non-bijections, %llu pack mismatches, %.1fs",
                 static_cast<unsigned long long>(bad), static_cast<unsigned long long>(bad_pack), secs),
          std::to_string(digest)};
}

UniformityOptions Uniform(std::uint64_t trials, const Settings& st) {
  UniformityOptions o;
  o.trials = trials;
  o.seed = kSeed;
  o.cache_entries = st.cache_entries;
  return o;
}

Outcome HistogramOutcome(const char* what, const Histogram& h, double bound, double secs,
                         double limit) {
  const double lo = *std::min_element(h.bins.begin(), h.bins.end()) / h.expected();
  const double hi = *std::max_element(h.bins.begin(), h.bins.end()) / h.expected();
  return {h.Within(bound) && secs < limit,
          Format("%s: %llu trials, normalized bins in [%.4f, %.4f], bound [%.2f, %.2f], %.1fs", what,
                 static_cast<unsigned long long>(h.trials), lo, hi, 1 - bound, 1 + bound, secs),
          BinsOf(h)};
}

// 3-5. The three uniformity histograms.
Outcome UniformIntra(const Settings& st) {
  const auto start = std::chrono::steady_clock::now();
  const Histogram h = UniformityIntra(Uniform(1000000, st));
  return HistogramOutcome("intra, class 128", h, kIntraBound, Seconds(start), 300);
}

Outcome UniformInter(const Settings& st) {
  const auto start = std::chrono::steady_clock::now();
  const Histogram h = UniformityInter(Uniform(2000, st));
  return HistogramOutcome("inter, 20 classes", h, kInterBound, Seconds(start), 1e9);
}

Outcome UniformAlias(const Settings& st) {
  const auto start = std::chrono::steady_clock::now();
  const Histogram h = UniformityAlias(Uniform(10000, st));
  return HistogramOutcome("alias, one slot", h, kAliasBound, Seconds(start), 1e9);
}

// 6. At C = 4 every one of the 24 orderings, enumerated independently,
// appears within 3 sigma of 10,000 in 240,000 shuffles.
Outcome SmallShuffle(const Settings&) {
  constexpr int kDraws = 240000;
  std::map<std::vector<std::uint8_t>, int> counts;
  std::vector<std::uint8_t> all = {0, 1, 2, 3};
  do {
    counts[all] = 0;
  } while (std::next_permutation(all.begin(), all.end()));

  int outside = 0;
  for (int i = 0; i < kDraws; ++i) {
    Prng rng = Prng::Seed(PermKey{kSeed}, kFixedArenaBase + static_cast<std::uint64_t>(i) * 128, 128);
    const Permutation p = FisherYates(rng, 4);
    auto it = counts.find({p.mapping().begin(), p.mapping().end()});
    if (it == counts.end()) {
      ++outside;
    } else {
      ++it->second;
    }
  }
  const double mean = kDraws / 24.0;
  const double sigma = std::sqrt(kDraws * (1.0 / 24) * (23.0 / 24));
  int lo = kDraws, hi = 0, out_of_band = 0;
  std::string fp;
  for (const auto& [perm, n] : counts) {
    lo = std::min(lo, n);
    hi = std::max(hi, n);
    out_of_band += std::abs(n - mean) > 3 * sigma;
    fp += std::to_string(n) + " ";
  }
  return {out_of_band == 0 && outside == 0,
          Format("24 orderings seen %d..%d times (band %.0f +/- %.0f), %d outside band, %d invalid", lo,
                 hi, mean, 3 * sigma, out_of_band, outside),
          fp};
}

// 7. Attacker success against the 1/16 per-chunk bound and the full secret.
Outcome AttackerBound(const Settings& st) {
  LitmusOptions o;
  o.seed = kSeed;
  o.cache_entries = st.cache_entries;
  o.scenario = Scenario::kInterOverflow;
  o.trials = 16000;
  const LitmusResult inter = RunLitmus(o);
  const bool inter_ok = WithinThreeSigma(inter.trials, inter.successes, 1.0 / 16);

  o.scenario = Scenario::kUninitRead;
  o.trials = 100000;
  const LitmusResult uninit = RunLitmus(o);
  const bool uninit_ok = uninit.successes == 0;

  return {inter_ok && uninit_ok,
          Format("inter_overflow %llu/16000 (expect 1000 +/- %.0f) %s; uninit_read full secret "
                 "%llu/100000 (required 0) %s; alias-number collisions %llu, successes under "
                 "collision %llu, successes without collision %llu",
                 static_cast<unsigned long long>(inter.successes),
                 3 * std::sqrt(16000 * (1.0 / 16) * (15.0 / 16)), inter_ok ? "ok" : "out of band",
                 static_cast<unsigned long long>(uninit.successes), uninit_ok ? "ok" : "VIOLATED",
                 static_cast<unsigned long long>(uninit.alias_collisions),
                 static_cast<unsigned long long>(uninit.alias_collision_successes),
                 static_cast<unsigned long long>(uninit.successes - uninit.alias_collision_successes)),
          Format("%llu %llu %llu", static_cast<unsigned long long>(inter.successes),
                 static_cast<unsigned long long>(uninit.successes),
                 static_cast<unsigned long long>(uninit.chunk_successes))};
}

// 8. Consecutive owners of one slot share an alias number about 10^5 / 2^16 times.
Outcome AliasFreshness(const Settings&) {
  constexpr int kCycles = 100000;
  ArenaConfig config;
  config.region_size = 1 << 20;
  config.region_count = 10;
  Arena arena(config, SeededAliasSource(kSeed));
  AliasAddress h = arena.Alloc(128);
  const std::uint64_t slot = h.stripped();
  int collisions = 0;
  bool reused = true;
  for (int i = 0; i < kCycles; ++i) {
    const std::uint16_t before = h.alias_number();
    arena.Free(h);
    h = arena.Alloc(128);
    reused = reused && h.stripped() == slot;
    collisions += h.alias_number() == before;
  }
  const double p = 1.0 / 65536;
  const double mean = kCycles * p;
  const double band = 3 * std::sqrt(kCycles * p * (1 - p));
  return {reused && std::abs(collisions - mean) <= band,
          Format("%d collisions in %d realloc cycles (expect %.2f +/- %.2f), slot reused: %s", collisions,
                 kCycles, mean, band, reused ? "yes" : "no"),
          std::to_string(collisions)};
}

// 9. Buf2Ptr reproduces the listing example and keeps its invariants.
Outcome Buf2PtrConformance(const Settings&) {
  using namespace buf2ptr;
  StructSchema foo;
  foo.name = "Foo";
  foo.fields = {Field::Array("buf", "char", 10)};
  const PromotionResult r = Promote(foo);
  StructSchema want_parent;
  want_parent.name = "Foo";
  want_parent.fields = {Field::Pointer("p_buf", "Foo_buf")};
  StructSchema want_child;
  want_child.name = "Foo_buf";
  want_child.fields = {Field::Array("buf", "char", 10)};
  want_child.promoted = true;
  const bool example_ok =
      !r.no_op && r.schemas.size() == 2 && r.schemas[0] == want_parent && r.schemas[1] == want_child &&
      r.plan.allocation_order == std::vector<std::string>{"Foo", "Foo_buf"} &&
      r.plan.deallocation_order == std::vector<std::string>{"Foo_buf", "Foo"} &&
      r.plan.usages.size() == 1 && r.plan.usages[0].to == "p_buf->buf[i]";

  std::mt19937_64 rng(kSeed);
  const char* scalars[] = {"char", "int", "long", "double", "uint16"};
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    StructSchema s;
    s.name = "R" + std::to_string(trial);
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      const std::string name = "f" + std::to_string(i);
      Annotations a;
      if (rng() % 6 == 0) a.add(kAllAnnotations[rng() % 5]);
      switch (rng() % 4) {
        case 0: s.fields.push_back(Field::Scalar(name, scalars[rng() % 5], a)); break;
        case 1: s.fields.push_back(Field::Pointer(name, "R", a)); break;
        case 2: s.fields.push_back(Field::Array(name, scalars[rng() % 5], 1 + rng() % 64, a)); break;
        case 3: s.fields.push_back(Field::Nested(name, foo, a)); break;
      }
    }
    if (rng() % 10 == 0) s.annotations.add(kAllAnnotations[rng() % 5]);

    const PromotionResult out = Promote(s);
    // Field conservation.
    for (const Field& orig : s.fields) {
      int seen = 0;
      for (const StructSchema& rec : out.schemas) {
        seen += static_cast<int>(std::count(rec.fields.begin(), rec.fields.end(), orig));
      }
      violations += seen != 1;
    }
    // Promoted records hold exactly one array.
    for (std::size_t i = 1; i < out.schemas.size(); ++i) {
      violations += out.schemas[i].fields.size() != 1 ||
                    out.schemas[i].fields[0].kind != FieldKind::kArray;
    }
    // No promotable array is left beside other fields.
    violations += Classify(out.schemas[0]).promotable != 0;
  }
  return {example_ok && violations == 0,
          Format("listing example %s; 1000 random schemas, %d invariant violations",
                 example_ok ? "reproduced exactly" : "MISMATCH", violations),
          std::to_string(violations) + (example_ok ? " ok" : " bad")};
}

struct Criterion {
  int id;
  std::function<Outcome(const Settings&)> run;
};

const std::vector<Criterion>& Criteria() {
  static const std::vector<Criterion> list = {
      {1, RoundTrips},   {2, PermutationValidity}, {3, UniformIntra},
      {4, UniformInter}, {5, UniformAlias},        {6, SmallShuffle},
      {7, AttackerBound}, {8, AliasFreshness},     {9, Buf2PtrConformance},
  };
  return list;
}

// 10. Same results with the cache off; 4 threads agree with 1 thread.
Outcome Statelessness(const std::vector<Outcome>& cached) {
  const Settings off{0};
  std::string differing;
  for (std::size_t i = 0; i < Criteria().size(); ++i) {
    const Outcome again = Criteria()[i].run(off);
    if (again.pass != cached[i].pass || again.fingerprint != cached[i].fingerprint) {
      differing += " " + std::to_string(Criteria()[i].id);
    }
  }

  std::string threads_detail;
  bool threads_ok = true;
  for (Scenario s : kAllScenarios) {
    LitmusOptions o;
    o.scenario = s;
    o.seed = kSeed;
    o.trials = s == Scenario::kUninitRead ? 100000 : 16000;
    const LitmusResult one = RunLitmus(o);
    o.threads = 4;
    const LitmusResult four = RunLitmus(o);
    // Chunk-level counts carry the distribution for every scenario.
    const double p = one.chunk_theoretical;
    const double n = static_cast<double>(one.chunk_trials);
    const double band = 3 * std::sqrt(2 * n * p * (1 - p)) + 1e-9;
    const double diff = std::abs(static_cast<double>(one.chunk_successes) -
                                 static_cast<double>(four.chunk_successes));
    const bool ok = diff <= band && four.WithinThreeSigma() == one.WithinThreeSigma();
    threads_ok = threads_ok && ok;
    threads_detail += Format(" %s %llu/%llu", one.scenario.c_str(),
                             static_cast<unsigned long long>(one.chunk_successes),
                             static_cast<unsigned long long>(four.chunk_successes));
  }
  return {differing.empty() && threads_ok,
          Format("cache off: criteria 1-9 %s; 1 vs 4 threads (chunk hits):%s %s",
                 differing.empty() ? "give identical measurements and verdicts"
                                   : ("differ in" + differing).c_str(),
                 threads_detail.c_str(), threads_ok ? "all within 3 sigma" : "OUT OF BAND"),
          ""};
}

}  // namespace

int main() {
  bool all = true;
  std::vector<Outcome> outcomes;
  for (const Criterion& c : Criteria()) {
    Outcome o;
    try {
      o = c.run(Settings{});
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what(), "error"};
    }
    std::printf("criterion %d %s: %s\n", c.id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
    outcomes.push_back(std::move(o));
  }
  Outcome ten;
  try {
    ten = Statelessness(outcomes);
  } catch (const std::exception& e) {
    ten = {false, std::string("error: ") + e.what(), ""};
  }
  std::printf("criterion 10 %s: %s\n", ten.pass ? "PASS" : "FAIL", ten.detail.c_str());
  all = all && ten.pass;
  return all ? 0 : 1;
}
