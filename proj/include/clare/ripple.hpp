#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "clare/corpus.hpp"

namespace clare {

/// Measured post-edit change on a control fact after editing `edit_fact_id`.
struct RippleRecord {
  FactId edit_fact_id = 0;
  FactId control_fact_id = 0;
  double l2_shift = 0.0;  ///< |f(q) - f'(q)|_2 over output logits
  double dlogp = 0.0;     ///< |log P'(a|q) - log P(a|q)|
  std::string technique_tag;
  std::string model_tag;

  bool operator==(const RippleRecord&) const = default;
};

void validate_ripple(const RippleRecord& r);

/// Euclidean norm of (after - before). Inputs must be equal-length, nonempty
/// and finite. Accumulates in double.
double l2_logit_shift(std::span<const double> logits_before, std::span<const double> logits_after);
double l2_logit_shift(std::span<const float> logits_before, std::span<const float> logits_after);

/// |logp_after - logp_before| for log-probabilities (both <= 0, finite).
double log_prob_shift(double logp_before, double logp_after);

/// One JSON object per line with the RippleRecord fields.
std::vector<RippleRecord> load_ripples(const std::filesystem::path& path);
void write_ripples(std::span<const RippleRecord> ripples, const std::filesystem::path& path);

struct EditControlPair {
  FactId edit_fact_id = 0;
  FactId control_fact_id = 0;

  auto operator<=>(const EditControlPair&) const = default;
};

/// Draws `count` distinct ordered (edit, control) pairs with edit != control,
/// uniformly at random. Deterministic for a given seed and id order.
std::vector<EditControlPair> sample_edit_control_pairs(std::span<const FactId> ids,
                                                       std::size_t count, std::uint64_t seed);

/// Selects `count` ripple records spread across the range of l2 shifts:
/// records are split into `strata` equal-population bins by l2_shift and
/// drawn round-robin across bins, uniformly within each. strata == 1 is a
/// plain uniform sample.
std::vector<RippleRecord> stratified_sample(std::span<const RippleRecord> candidates,
                                            std::size_t count, std::size_t strata,
                                            std::uint64_t seed);

}  // namespace clare
