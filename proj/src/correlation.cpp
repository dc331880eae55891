#include "clare/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <vector>

#include "clare/error.hpp"
#include "clare/spearman.hpp"

namespace clare {

PairScores score_ripple_pairs(const VecStore& store, std::span<const RippleRecord> ripples,
                              const EntanglementConfig& cfg, ScoreMethod method) {
  const auto kernel = method == ScoreMethod::clare ? &clare_score : &gradsim_score;
  PairScores scores;
  const auto locate = [&](FactId id) {
    const auto pos = store.find(id);
    if (pos == store.size()) {
      throw InvalidArgument("fact " + std::to_string(id) + " missing from vecstore" +
                            (store.header().layer >= 0
                                 ? " (layer " + std::to_string(store.header().layer) + ")"
                                 : std::string{}));
    }
    return pos;
  };
  for (const auto& r : ripples) {
    const EditControlPair key{r.edit_fact_id, r.control_fact_id};
    if (scores.contains(key)) continue;
    scores.emplace(key, kernel(store.row(locate(r.edit_fact_id)),
                               store.row(locate(r.control_fact_id)), cfg));
  }
  return scores;
}

namespace {

std::string common_tag(std::span<const RippleRecord> ripples, std::string RippleRecord::*field) {
  if (ripples.empty()) return {};
  const auto& first = ripples.front().*field;
  for (const auto& r : ripples) {
    if (r.*field != first) return "mixed";
  }
  return first;
}

struct JoinedSeries {
  std::vector<double> scores;
  std::vector<double> l2;
  std::vector<double> dlogp;
};

// Joins ripples to their scores and lays the series out in canonical
// (edit, control, l2, dlogp) order.
JoinedSeries join(const PairScores& scores, std::span<const RippleRecord> ripples) {
  struct Row {
    double score;
    double l2;
    double dlogp;
    FactId edit;
    FactId control;
  };
  std::vector<Row> rows;
  rows.reserve(ripples.size());
  for (const auto& r : ripples) {
    validate_ripple(r);
    const auto it = scores.find({r.edit_fact_id, r.control_fact_id});
    if (it == scores.end()) {
      throw InvalidArgument("no entanglement score for pair (" + std::to_string(r.edit_fact_id) +
                            ", " + std::to_string(r.control_fact_id) + ")");
    }
    rows.push_back({it->second, r.l2_shift, r.dlogp, r.edit_fact_id, r.control_fact_id});
  }
  if (rows.size() < 2) throw InvalidArgument("correlate: need at least 2 ripple pairs");

  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.edit, a.control, a.l2, a.dlogp) < std::tie(b.edit, b.control, b.l2, b.dlogp);
  });
  JoinedSeries out;
  for (const auto& row : rows) {
    out.scores.push_back(row.score);
    out.l2.push_back(row.l2);
    out.dlogp.push_back(row.dlogp);
  }
  return out;
}

}  // namespace

CorrelationReport correlate(const PairScores& scores, std::span<const RippleRecord> ripples,
                            std::string method_tag) {
  const auto series = join(scores, ripples);
  CorrelationReport report;
  report.n_pairs = series.scores.size();
  report.rho_l2 = spearman(series.scores, series.l2);
  report.rho_dlogp = spearman(series.scores, series.dlogp);
  report.method_tag = std::move(method_tag);
  report.technique_tag = common_tag(ripples, &RippleRecord::technique_tag);
  report.model_tag = common_tag(ripples, &RippleRecord::model_tag);
  return report;
}

double LayerProfile::diff_from_peak(int layer) const {
  const auto it = per_layer_rho.find(layer);
  if (it == per_layer_rho.end()) {
    throw InvalidArgument("layer " + std::to_string(layer) + " not in profile");
  }
  return std::abs(it->second - peak_rho) * 100.0;
}

LayerProfile layer_profile(const std::map<int, const VecStore*>& per_layer_stores,
                           std::span<const RippleRecord> ripples, const EntanglementConfig& cfg) {
  if (per_layer_stores.size() < 2) throw InvalidArgument("layer_profile: need at least 2 layers");
  LayerProfile profile;
  bool first = true;
  for (const auto& [layer, store] : per_layer_stores) {
    if (store == nullptr) throw InvalidArgument("layer " + std::to_string(layer) + ": null store");
    const auto scores = score_ripple_pairs(*store, ripples, cfg);
    const auto series = join(scores, ripples);
    const double rho = spearman(series.scores, series.l2);
    profile.per_layer_rho.emplace(layer, rho);
    if (first || rho > profile.peak_rho) {
      profile.peak_layer = layer;
      profile.peak_rho = rho;
      first = false;
    }
  }
  return profile;
}

}  // namespace clare
