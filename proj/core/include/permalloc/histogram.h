#ifndef PERMALLOC_HISTOGRAM_H_
#define PERMALLOC_HISTOGRAM_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "permalloc/permutation.h"

namespace permalloc {

inline constexpr std::size_t kHistogramBins = 10;

struct Histogram {
  std::vector<std::uint64_t> bins = std::vector<std::uint64_t>(kHistogramBins, 0);
  std::uint64_t trials = 0;

  void Add(std::size_t bin) {
    ++bins.at(bin);
    ++trials;
  }
  double expected() const { return static_cast<double>(trials) / static_cast<double>(bins.size()); }
  double normalized(std::size_t bin) const;
  // max |normalized - 1| over all bins.
  double MaxDeviation() const;
  bool Within(double tolerance) const { return MaxDeviation() <= tolerance; }
};

// Index of `perm` in lexicographic order of all C! permutations. C <= 20.
std::uint64_t LehmerRank(const Permutation& perm);

// floor(bins * rank / C!) computed exactly for C <= 20 and by Horner
// evaluation of the factorial-base fraction beyond that.
std::size_t RankBin(const Permutation& perm, std::size_t bins = kHistogramBins);

// bin_index,count,expected,normalized
std::string HistogramCsv(const Histogram& h);
nlohmann::json HistogramJson(const Histogram& h);

}  // namespace permalloc

#endif  // PERMALLOC_HISTOGRAM_H_
