#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "clare/entanglement.hpp"
#include "clare/similarity_matrix.hpp"
#include "clare/vecstore.hpp"

namespace clare {

inline constexpr double kDefaultBinWidth = 0.05;

/// Fixed-width bins over [-1, 1]. Bin b covers [lower(b), upper(b)); the last
/// bin is closed and truncated at 1 when the width does not divide 2.
class SimilarityHistogram {
 public:
  explicit SimilarityHistogram(double bin_width = kDefaultBinWidth);

  [[nodiscard]] double bin_width() const noexcept { return bin_width_; }
  [[nodiscard]] std::size_t bins() const noexcept { return counts_.size(); }
  [[nodiscard]] double lower(std::size_t bin) const;
  [[nodiscard]] double upper(std::size_t bin) const;
  [[nodiscard]] std::size_t bin_of(double score) const;
  [[nodiscard]] const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  [[nodiscard]] std::uint64_t total() const noexcept { return total_; }

  void add(double score);

 private:
  double bin_width_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

SimilarityHistogram similarity_histogram(const VecStore& store, double bin_width,
                                         const EntanglementConfig& cfg = {});
SimilarityHistogram similarity_histogram(const SimilarityMatrix& matrix, double bin_width);
SimilarityHistogram similarity_histogram_from_file(const std::filesystem::path& matrix_path,
                                                   double bin_width);

}  // namespace clare
