#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "clare/corpus.hpp"
#include "clare/vecstore.hpp"

namespace clare {

struct EntanglementConfig {
  /// Stabilizer added to numerator and denominator of the cosine.
  double epsilon = 1e-8;
  /// Edge length of a square tile of pairs in the blocked evaluator.
  std::size_t block_size = 64;
  /// Accumulate dot products and norms in double rather than float.
  bool accumulate_wide = true;
  /// Worker threads for blocked evaluation; 0 means hardware concurrency.
  unsigned threads = 0;

  /// Throws InvalidArgument unless 0 < epsilon <= 1e-4 and block_size >= 1.
  void validate() const;
  [[nodiscard]] unsigned resolved_threads() const;
};

/// Entanglement between two facts' hidden-state probes:
///
///   (<a, b> + eps) / (|a| |b| + eps)
///
/// Symmetric in (a, b) bit-for-bit. The result lies in (-1, 1]; values that
/// rounding would push outside that interval are clamped to it.
double clare_score(std::span<const float> a, std::span<const float> b,
                   const EntanglementConfig& cfg = {});

/// Same kernel over flattened gradient vectors of arbitrary equal length.
double gradsim_score(std::span<const float> a, std::span<const float> b,
                     const EntanglementConfig& cfg = {});

/// Receives one row of the strict upper triangle: `scores[t]` is the score of
/// pair (i, i + 1 + t), in store order.
using ScoreRowSink = std::function<void(std::size_t i, std::span<const double> scores)>;

/// Scores every pair i < j of the store. Norms are computed once per vector;
/// dot products are evaluated in block_size x block_size tiles, in parallel
/// across tiles of a row band. Rows are delivered to `sink` in ascending i
/// regardless of thread count, and every score equals clare_score() on the
/// same pair exactly.
void pairwise_entanglement(const VecStore& store, const EntanglementConfig& cfg,
                           const ScoreRowSink& sink);

struct Neighbor {
  FactId fact_id = 0;
  double score = 0.0;

  bool operator==(const Neighbor&) const = default;
};

/// Ordering used by neighbor lists: score descending, then fact id ascending.
inline bool ranks_before(const Neighbor& a, const Neighbor& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.fact_id < b.fact_id;
}

/// For each fact (in store order), the k best other facts scoring at least
/// `min_score`, sorted by ranks_before. Never materializes the full matrix.
std::vector<std::vector<Neighbor>> top_k_neighbors(const VecStore& store, std::size_t k,
                                                   double min_score,
                                                   const EntanglementConfig& cfg = {});

/// Fallback probe layer when causal analysis is unavailable: one third of
/// the model depth, rounded half away from zero. Requires num_layers >= 3.
int approximate_critical_layer(int num_layers);

}  // namespace clare
