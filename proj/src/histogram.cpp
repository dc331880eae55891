#include "clare/histogram.hpp"

#include <algorithm>
#include <cmath>

#include "clare/error.hpp"
#include "clare/format.hpp"

namespace clare {

SimilarityHistogram::SimilarityHistogram(double bin_width) : bin_width_(bin_width) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw InvalidArgument("bin_width must be > 0, got " + format_number(bin_width));
  }
  // A width that divides 2 up to rounding must not grow a sliver bin.
  const double exact = 2.0 / bin_width;
  const double rounded = std::round(exact);
  const auto bins = std::abs(exact - rounded) < 1e-9 ? rounded : std::ceil(exact);
  counts_.assign(static_cast<std::size_t>(std::max(bins, 1.0)), 0);
}

double SimilarityHistogram::lower(std::size_t bin) const {
  return -1.0 + static_cast<double>(bin) * bin_width_;
}

double SimilarityHistogram::upper(std::size_t bin) const {
  return bin + 1 == counts_.size() ? 1.0 : lower(bin + 1);
}

std::size_t SimilarityHistogram::bin_of(double score) const {
  if (!(score >= -1.0 && score <= 1.0)) {
    throw InvalidArgument("score " + format_number(score) + " outside [-1, 1]");
  }
  const double raw = std::floor((score + 1.0) / bin_width_);
  auto bin = static_cast<std::size_t>(std::clamp(raw, 0.0, static_cast<double>(counts_.size() - 1)));
  // Settle rounding at bin edges against the same edges lower() reports.
  while (bin > 0 && score < lower(bin)) --bin;
  while (bin + 1 < counts_.size() && score >= lower(bin + 1)) ++bin;
  return bin;
}

void SimilarityHistogram::add(double score) {
  ++counts_[bin_of(score)];
  ++total_;
}

SimilarityHistogram similarity_histogram(const VecStore& store, double bin_width,
                                         const EntanglementConfig& cfg) {
  SimilarityHistogram h(bin_width);
  pairwise_entanglement(store, cfg, [&](std::size_t, std::span<const double> row) {
    for (const double s : row) h.add(s);
  });
  return h;
}

SimilarityHistogram similarity_histogram(const SimilarityMatrix& matrix, double bin_width) {
  SimilarityHistogram h(bin_width);
  for (const float s : matrix.entries()) h.add(s);
  return h;
}

SimilarityHistogram similarity_histogram_from_file(const std::filesystem::path& matrix_path,
                                                   double bin_width) {
  SimilarityHistogram h(bin_width);
  MatrixReader reader(matrix_path);
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  float s = 0;
  while (reader.next(i, j, s)) h.add(s);
  return h;
}

}  // namespace clare
