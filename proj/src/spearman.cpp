#include "clare/spearman.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "clare/error.hpp"

namespace clare {

std::vector<double> average_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });

  std::vector<double> ranks(n);
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo + 1;
    while (hi < n && xs[order[hi]] == xs[order[lo]]) ++hi;
    // Positions lo..hi-1 (0-based) are ranks lo+1..hi; their mean:
    const double rank = 0.5 * static_cast<double>(lo + 1 + hi);
    for (std::size_t t = lo; t < hi; ++t) ranks[order[t]] = rank;
    lo = hi;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw InvalidArgument("spearman: length mismatch " + std::to_string(xs.size()) + " vs " +
                          std::to_string(ys.size()));
  }
  const std::size_t n = xs.size();
  if (n < 2) throw InvalidArgument("spearman: need at least 2 observations");
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(xs.begin(), xs.end(), finite) || !std::all_of(ys.begin(), ys.end(), finite)) {
    throw InvalidArgument("spearman: non-finite input");
  }

  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  // Mean rank is (n + 1) / 2 regardless of ties.
  const double mean = 0.5 * static_cast<double>(n + 1);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelation("spearman: undefined correlation (constant series)");
  }
  const double rho = sxy / std::sqrt(sxx * syy);
  return std::clamp(rho, -1.0, 1.0);
}

}  // namespace clare
