#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "clare/entanglement.hpp"
#include "clare/ripple.hpp"
#include "clare/vecstore.hpp"

namespace clare {

/// Entanglement score per (edit, control) pair.
using PairScores = std::map<EditControlPair, double>;

struct CorrelationReport {
  std::size_t n_pairs = 0;
  double rho_l2 = 0.0;
  double rho_dlogp = 0.0;
  std::string method_tag;
  std::string technique_tag;
  std::string model_tag;
};

enum class ScoreMethod { clare, gradsim };

/// Scores every ripple pair from one store (hidden states for clare,
/// flattened gradients for gradsim). Throws InvalidArgument naming the first
/// fact id the store does not hold.
PairScores score_ripple_pairs(const VecStore& store, std::span<const RippleRecord> ripples,
                              const EntanglementConfig& cfg = {},
                              ScoreMethod method = ScoreMethod::clare);

/// Joins ripples to scores by (edit, control) and rank-correlates the scores
/// against both ripple magnitudes. The join is put in canonical order first,
/// so the result does not depend on the order of `ripples`. Technique and
/// model tags are taken from the records ("mixed" if they disagree).
CorrelationReport correlate(const PairScores& scores, std::span<const RippleRecord> ripples,
                            std::string method_tag = "clare");

struct LayerProfile {
  std::map<int, double> per_layer_rho;
  int peak_layer = 0;
  double peak_rho = 0.0;

  /// |rho(layer) - rho(peak)| in percentage points; unrounded.
  [[nodiscard]] double diff_from_peak(int layer) const;
};

/// Per-layer Spearman rho between clare scores and l2 shift. The peak is
/// the highest rho; ties go to the lowest layer index.
LayerProfile layer_profile(const std::map<int, const VecStore*>& per_layer_stores,
                           std::span<const RippleRecord> ripples,
                           const EntanglementConfig& cfg = {});

}  // namespace clare
