// permalloc: uniformity histograms, security litmus tests, PRNG throughput
// and Buf2Ptr schema promotion from the command line.
//
// Exit status: 0 when every result is inside its acceptance bound, 2 when a
// bound is violated, 1 on usage or input errors.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "permalloc/buf2ptr.h"
#include "permalloc/error.h"
#include "permalloc/litmus.h"
#include "permalloc/throughput.h"
#include "permalloc/uniformity.h"

namespace {

using nlohmann::json;
using namespace permalloc;

constexpr int kExitPass = 0;
constexpr int kExitUsage = 1;
constexpr int kExitBound = 2;

struct Common {
  std::optional<std::uint64_t> trials;
  std::string seed;
  std::uint32_t granularity = 8;
  std::uint32_t boundary = 128;
  std::string format = "csv";
  std::string out;
  std::uint32_t alias_bits = 16;
  bool no_cache = false;

  PermParams params() const { return {granularity, boundary}; }
  std::size_t cache_entries() const { return no_cache ? 0 : kDefaultCacheEntries; }

  std::optional<std::uint64_t> ParsedSeed() const {
    if (seed.empty()) return std::nullopt;
    std::size_t used = 0;
    std::uint64_t value = 0;
    try {
      value = std::stoull(seed, &used, 16);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != seed.size()) Fail(ErrorCode::kInvalidArgument, "--seed expects hex, got '" + seed + "'");
    return value;
  }
};

void AddCommon(CLI::App* cmd, Common& c, bool with_seed = true) {
  cmd->add_option(with_seed ? "--trials" : "--iterations,--trials", c.trials,
                  with_seed ? "Number of trials" : "Permutations per measurement")
      ->check(CLI::PositiveNumber);
  if (with_seed) cmd->add_option("--seed", c.seed, "Hex seed; fixes key, alias numbers and arena placement");
  cmd->add_option("--granularity", c.granularity, "Chunk size in bytes")
      ->check(CLI::IsMember({1, 2, 4, 8}));
  cmd->add_option("--boundary", c.boundary, "Permutation block size in bytes")
      ->check(CLI::IsMember({64, 128}));
  cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--out", c.out, "Write output here instead of stdout");
  cmd->add_flag("--no-cache", c.no_cache, "Disable the permutation cache");
}

void Emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) Fail(ErrorCode::kInvalidArgument, "cannot open '" + c.out + "' for writing");
  f << text;
}

int RunUniformity(const std::string& kind, const Common& c, std::uint32_t classes) {
  UniformityOptions o;
  o.seed = c.ParsedSeed();
  o.params = c.params();
  o.cache_entries = c.cache_entries();
  o.alias_bits = c.alias_bits;
  o.classes = classes;

  Histogram h;
  double bound = 0;
  if (kind == "intra") {
    o.trials = c.trials.value_or(1000000);
    h = UniformityIntra(o);
    bound = kIntraBound;
  } else if (kind == "inter") {
    o.trials = c.trials.value_or(2000);
    h = UniformityInter(o);
    bound = kInterBound;
  } else {
    o.trials = c.trials.value_or(10000);
    h = UniformityAlias(o);
    bound = kAliasBound;
  }

  const bool pass = h.Within(bound);
  if (c.format == "json") {
    json j = HistogramJson(h);
    j["experiment"] = kind;
    j["bound"] = bound;
    j["max_deviation"] = h.MaxDeviation();
    j["pass"] = pass;
    Emit(c, j.dump(2) + "\n");
  } else {
    Emit(c, HistogramCsv(h));
  }
  std::fprintf(stderr, "uniformity %s: %llu trials, max |normalized-1| = %.4f, bound %.2f: %s\n",
               kind.c_str(), static_cast<unsigned long long>(h.trials), h.MaxDeviation(), bound,
               pass ? "PASS" : "FAIL");
  return pass ? kExitPass : kExitBound;
}

int RunLitmusCommand(const std::string& name, const Common& c, unsigned threads) {
  std::vector<Scenario> scenarios;
  if (name == "all") {
    scenarios.assign(std::begin(kAllScenarios), std::end(kAllScenarios));
  } else {
    scenarios.push_back(ParseScenario(name));
  }

  std::vector<LitmusResult> results;
  for (Scenario s : scenarios) {
    LitmusOptions o;
    o.scenario = s;
    o.trials = c.trials.value_or(s == Scenario::kUninitRead ? 100000 : 16000);
    o.seed = c.ParsedSeed();
    o.params = c.params();
    o.alias_bits = c.alias_bits;
    o.cache_entries = c.cache_entries();
    o.threads = threads;
    results.push_back(RunLitmus(o));
  }

  bool pass = true;
  for (const LitmusResult& r : results) {
    const bool ok = r.WithinThreeSigma();
    pass = pass && ok;
    std::fprintf(stderr, "litmus %s: %llu/%llu successes (p=%.6g, expected %.6g): %s\n",
                 r.scenario.c_str(), static_cast<unsigned long long>(r.successes),
                 static_cast<unsigned long long>(r.trials), r.empirical, r.theoretical,
                 ok ? "PASS" : "FAIL");
  }
  if (c.format == "json") {
    json arr = json::array();
    for (const LitmusResult& r : results) {
      json j = LitmusJson(r);
      j["pass"] = r.WithinThreeSigma();
      arr.push_back(std::move(j));
    }
    Emit(c, (results.size() == 1 ? arr[0] : arr).dump(2) + "\n");
  } else {
    Emit(c, LitmusCsv(results));
  }
  return pass ? kExitPass : kExitBound;
}

int RunThroughput(const Common& c, unsigned repeats) {
  const std::vector<ThroughputRow> rows =
      ThroughputReport(c.trials.value_or(100000), repeats, c.params());
  if (c.format == "json") {
    Emit(c, ThroughputJson(rows).dump(2) + "\n");
  } else {
    Emit(c, ThroughputCsv(rows));
  }
  return kExitPass;
}

json ReadJson(const std::string& path) {
  std::stringstream buffer;
  if (path == "-") {
    buffer << std::cin.rdbuf();
  } else {
    std::ifstream f(path);
    if (!f) Fail(ErrorCode::kInvalidArgument, "cannot open '" + path + "'");
    buffer << f.rdbuf();
  }
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    Fail(ErrorCode::kSchemaError, path + ": " + e.what());
  }
}

int RunBuf2Ptr(const std::string& action, const std::string& in, const Common& c) {
  const std::vector<buf2ptr::StructSchema> schemas = buf2ptr::SchemasFromJson(ReadJson(in));
  json out;
  if (action == "classify") {
    out = buf2ptr::ReportToJson(buf2ptr::ClassifyAll(schemas));
    out["records"] = json::array();
    for (const auto& s : schemas) out["records"].push_back(buf2ptr::ReportToJson(buf2ptr::Classify(s)));
  } else {
    out["results"] = json::array();
    for (const auto& s : schemas) out["results"].push_back(buf2ptr::PromotionToJson(buf2ptr::Promote(s)));
  }
  Emit(c, out.dump(2) + "\n");
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memory-permutation runtime experiments"};
  app.require_subcommand(1);

  Common uni;
  std::string uni_kind;
  std::uint32_t classes = 20;
  CLI::App* uniformity = app.add_subcommand("uniformity", "Lehmer-rank histogram of permutations");
  uniformity->add_option("kind", uni_kind, "intra, inter or alias")
      ->required()
      ->check(CLI::IsMember({"intra", "inter", "alias"}));
  AddCommon(uniformity, uni);
  uniformity->add_option("--classes", classes, "Size classes for inter (1..20)")->check(CLI::Range(1, 20));
  uniformity->add_option("--alias-bits", uni.alias_bits, "Random alias-number bits")->check(CLI::Range(0, 16));

  Common lit;
  std::string scenario;
  unsigned threads = 1;
  CLI::App* litmus = app.add_subcommand("litmus", "Attack success probability against the runtime");
  litmus->add_option("scenario", scenario,
                     "intra_overflow, inter_overflow, use_after_free, type_confusion, over_read, "
                     "uninit_read or all")
      ->required();
  AddCommon(litmus, lit);
  litmus->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 256));
  litmus->add_option("--alias-bits", lit.alias_bits, "Random alias-number bits")->check(CLI::Range(0, 16));

  Common thr;
  unsigned repeats = 10;
  CLI::App* throughput = app.add_subcommand("throughput", "Time per generated permutation");
  AddCommon(throughput, thr, false);
  throughput->add_option("--repeats", repeats, "Measurement repetitions")->check(CLI::PositiveNumber);

  Common b2p;
  std::string action, input = "-";
  CLI::App* schema = app.add_subcommand("buf2ptr", "Classify or promote record schemas (JSON)");
  schema->add_option("action", action, "classify or promote")
      ->required()
      ->check(CLI::IsMember({"classify", "promote"}));
  schema->add_option("--in", input, "Schema JSON file, '-' for stdin");
  schema->add_option("--out", b2p.out, "Write output here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (*uniformity) return RunUniformity(uni_kind, uni, classes);
    if (*litmus) return RunLitmusCommand(scenario, lit, threads);
    if (*throughput) return RunThroughput(thr, repeats);
    if (*schema) return RunBuf2Ptr(action, input, b2p);
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", std::string(ErrorCodeName(e.code())).c_str(), e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
