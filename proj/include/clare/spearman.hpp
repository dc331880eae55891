#pragma once

#include <span>
#include <vector>

namespace clare {

/// 1-based ranks; tied values share the mean of the positions they span.
std::vector<double> average_ranks(std::span<const double> xs);

/// Spearman's rho as the Pearson correlation of average ranks, so ties are
/// handled exactly. Requires equal lengths n >= 2 and finite values; throws
/// UndefinedCorrelation when either series is constant.
double spearman(std::span<const double> xs, std::span<const double> ys);

}  // namespace clare
