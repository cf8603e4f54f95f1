#include "dccm/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace dccm {

double ordered_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  // Neumaier compensation on the sorted sequence.
  double sum = 0.0;
  double comp = 0.0;
  for (double t : terms) {
    const double s = sum + t;
    if (std::abs(sum) >= std::abs(t)) {
      comp += (sum - s) + t;
    } else {
      comp += (t - s) + sum;
    }
    sum = s;
  }
  return sum + comp;
}

double nearest_rank(std::span<const double> values, double p) {
  if (values.empty()) throw ArgumentError("percentile of empty sequence");
  if (!(p > 0.0 && p <= 100.0)) throw ArgumentError("percentile must be in (0, 100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

Measure safe_ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace dccm
