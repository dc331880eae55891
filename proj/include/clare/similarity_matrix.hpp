#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "clare/entanglement.hpp"
#include "clare/vecstore.hpp"

namespace clare {

// Sidecar layout (little-endian): magic "CLSM", version u16, n u64, then
// n(n-1)/2 entries {i u32, j u32, score f32} with i < j in lexicographic order.

inline constexpr std::array<char, 4> kMatrixMagic{'C', 'L', 'S', 'M'};
inline constexpr std::uint16_t kMatrixVersion = 1;
inline constexpr std::size_t kMatrixHeaderBytes = 14;
inline constexpr std::size_t kMatrixEntryBytes = 12;

inline constexpr std::uint64_t pair_count(std::uint64_t n) noexcept {
  return n < 2 ? 0 : n * (n - 1) / 2;
}

/// Narrows a score to storage precision, keeping it inside (-1, 1].
float to_stored_score(double score) noexcept;

/// Materialized strict upper triangle, packed row-major.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::size_t n, std::vector<float> entries, std::vector<FactId> fact_ids = {},
                   std::size_t dim = 0, std::string source_tag = {});

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] const std::string& source_tag() const noexcept { return source_tag_; }
  /// Fact id of node i; node indices when the matrix came without ids.
  [[nodiscard]] const std::vector<FactId>& fact_ids() const noexcept { return fact_ids_; }
  [[nodiscard]] const std::vector<float>& entries() const noexcept { return entries_; }

  /// Score of pair (i, j), i != j, in either order.
  [[nodiscard]] float score(std::size_t i, std::size_t j) const;

  /// Visits (i, j, score) for every i < j in lexicographic order.
  template <typename F>
  void for_each(F&& f) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) f(i, j, entries_[idx++]);
  }

 private:
  std::size_t n_ = 0;
  std::vector<float> entries_;
  std::vector<FactId> fact_ids_;
  std::size_t dim_ = 0;
  std::string source_tag_;
};

/// Scores every pair of `store` into memory. Intended for stores whose
/// n(n-1)/2 floats fit comfortably; stream with pairwise_entanglement()
/// otherwise.
SimilarityMatrix compute_similarity_matrix(const VecStore& store, const EntanglementConfig& cfg = {});

/// Streaming sidecar writer. Entries must arrive in lexicographic order.
class MatrixWriter {
 public:
  MatrixWriter(const std::filesystem::path& path, std::uint64_t n);
  MatrixWriter(const MatrixWriter&) = delete;
  MatrixWriter& operator=(const MatrixWriter&) = delete;

  void write(std::uint32_t i, std::uint32_t j, float score);
  /// Writes a row as delivered by pairwise_entanglement().
  void write_row(std::size_t i, std::span<const double> scores);
  void close();

 private:
  void flush();

  std::filesystem::path path_;
  std::ofstream out_;
  std::uint64_t n_;
  std::uint64_t written_ = 0;
  std::uint64_t next_i_ = 0;
  std::uint64_t next_j_ = 1;
  std::vector<char> buffer_;
};

/// Streaming sidecar reader; validates order and exact file length.
class MatrixReader {
 public:
  explicit MatrixReader(const std::filesystem::path& path);

  [[nodiscard]] std::uint64_t size() const noexcept { return n_; }
  bool next(std::uint32_t& i, std::uint32_t& j, float& score);

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::uint64_t n_ = 0;
  std::uint64_t read_ = 0;
  std::uint64_t expect_i_ = 0;
  std::uint64_t expect_j_ = 1;
};

void write_similarity_matrix(const SimilarityMatrix& matrix, const std::filesystem::path& path);
SimilarityMatrix read_similarity_matrix(const std::filesystem::path& path,
                                        std::vector<FactId> fact_ids = {});

}  // namespace clare
