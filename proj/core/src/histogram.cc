#include "permalloc/histogram.h"

#include <cmath>
#include <cstdio>

#include "permalloc/error.h"

namespace permalloc {
namespace {

__extension__ typedef unsigned __int128 Uint128;

// Lehmer digits: d[i] = #{j > i : p[j] < p[i]}, in [0, C-1-i].
std::vector<std::uint32_t> LehmerDigits(const Permutation& perm) {
  const std::size_t n = perm.size();
  std::vector<std::uint32_t> digits(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (perm[j] < perm[i]) ++digits[i];
    }
  }
  return digits;
}

std::string Fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

double Histogram::normalized(std::size_t bin) const {
  const double e = expected();
  return e == 0.0 ? 0.0 : static_cast<double>(bins.at(bin)) / e;
}

double Histogram::MaxDeviation() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < bins.size(); ++i) worst = std::max(worst, std::abs(normalized(i) - 1.0));
  return worst;
}

std::uint64_t LehmerRank(const Permutation& perm) {
  if (perm.size() > 20) Fail(ErrorCode::kInvalidArgument, "Lehmer rank needs C <= 20");
  const auto digits = LehmerDigits(perm);
  std::uint64_t rank = 0;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    rank = rank * (perm.size() - i) + digits[i];
  }
  return rank;
}

std::size_t RankBin(const Permutation& perm, std::size_t bins) {
  const std::size_t n = perm.size();
  if (n <= 20) {
    Uint128 factorial = 1;
    for (std::size_t k = 2; k <= n; ++k) factorial *= k;
    const Uint128 scaled = static_cast<Uint128>(LehmerRank(perm)) * bins;
    return static_cast<std::size_t>(scaled / factorial);
  }
  // rank / n! = d0/n + d1/(n(n-1)) + ... evaluated innermost first.
  const auto digits = LehmerDigits(perm);
  double fraction = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    fraction = (digits[i] + fraction) / static_cast<double>(n - i);
  }
  return std::min(bins - 1, static_cast<std::size_t>(fraction * static_cast<double>(bins)));
}

std::string HistogramCsv(const Histogram& h) {
  std::string out = "bin_index,count,expected,normalized\n";
  for (std::size_t i = 0; i < h.bins.size(); ++i) {
    out += std::to_string(i) + "," + std::to_string(h.bins[i]) + "," + Fixed(h.expected()) + "," +
           Fixed(h.normalized(i)) + "\n";
  }
  return out;
}

nlohmann::json HistogramJson(const Histogram& h) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < h.bins.size(); ++i) {
    rows.push_back({{"bin_index", i},
                    {"count", h.bins[i]},
                    {"expected", h.expected()},
                    {"normalized", h.normalized(i)}});
  }
  return {{"trials", h.trials}, {"bins", std::move(rows)}};
}

}  // namespace permalloc
