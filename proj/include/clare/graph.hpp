#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clare/corpus.hpp"
#include "clare/entanglement.hpp"
#include "clare/similarity_matrix.hpp"
#include "clare/vecstore.hpp"

namespace clare {

inline constexpr double kDefaultGraphThreshold = 0.7;

/// Undirected edge between node indices, u < v.
struct GraphEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  double score = 0.0;

  bool operator==(const GraphEdge&) const = default;
};

struct Adjacent {
  std::size_t node = 0;
  double score = 0.0;
};

/// Facts as nodes; an edge joins two facts whose score is strictly above the
/// threshold. Immutable once built. Adjacency lists are sorted by neighbor
/// fact id.
class EntanglementGraph {
 public:
  EntanglementGraph() = default;
  /// Validates every edge: endpoints in range and distinct, no duplicates,
  /// score > threshold.
  EntanglementGraph(std::vector<FactId> node_ids, double threshold, std::vector<GraphEdge> edges);

  [[nodiscard]] std::size_t size() const noexcept { return ids_.size(); }
  [[nodiscard]] double threshold() const noexcept { return threshold_; }
  [[nodiscard]] const std::vector<FactId>& fact_ids() const noexcept { return ids_; }
  [[nodiscard]] FactId fact_id(std::size_t node) const { return ids_[node]; }
  /// Node index of a fact id, if present.
  [[nodiscard]] std::optional<std::size_t> find(FactId id) const;
  /// Throws InvalidArgument for unknown ids.
  [[nodiscard]] std::size_t index_of(FactId id) const;

  [[nodiscard]] std::span<const Adjacent> neighbors(std::size_t node) const {
    return adjacency_[node];
  }
  [[nodiscard]] std::size_t degree(std::size_t node) const { return adjacency_[node].size(); }
  [[nodiscard]] std::size_t edge_count() const noexcept { return edge_count_; }
  /// Every edge once, ordered by (fact_id(u), fact_id(v)) with fact_id(u) < fact_id(v).
  [[nodiscard]] std::vector<GraphEdge> edges() const;

 private:
  std::vector<FactId> ids_;
  double threshold_ = kDefaultGraphThreshold;
  std::vector<std::vector<Adjacent>> adjacency_;
  std::vector<std::pair<FactId, std::size_t>> sorted_ids_;
  std::size_t edge_count_ = 0;
};

/// Throws InvalidArgument unless threshold lies in (-1, 1].
void validate_threshold(double threshold);

/// Scores pairs on the fly (blocked, streaming); only edges are retained.
EntanglementGraph build_graph(const VecStore& store, double threshold,
                              const EntanglementConfig& cfg = {});
EntanglementGraph build_graph(const SimilarityMatrix& matrix, double threshold);
/// Streams a similarity sidecar. `fact_ids` names the nodes in matrix order;
/// empty means node index = fact id.
EntanglementGraph build_graph_from_matrix_file(const std::filesystem::path& path,
                                               std::vector<FactId> fact_ids, double threshold);

/// Edge-list text: one "i j score" line per edge (fact ids, i < j), sorted.
void write_edge_list(const EntanglementGraph& graph, const std::filesystem::path& path);
/// Reads an edge list over the given node set. Edges at or below `threshold`
/// are dropped; unknown ids are an error.
EntanglementGraph read_edge_list(const std::filesystem::path& path, std::vector<FactId> node_ids,
                                 double threshold);

/// Structured export: {threshold, nodes: [{id, subject, prompt}], edges:
/// [{source, target, score}]}. Without a corpus nodes carry only ids.
void write_graph_document(const EntanglementGraph& graph, const Corpus* corpus,
                          const std::filesystem::path& path);

struct HubEntry {
  FactId fact_id = 0;
  std::size_t degree = 0;
  std::string text;
};

/// "prompt → object (affects D facts)"
std::string render_hub_text(const FactTriple& fact, std::size_t degree);

/// The top_n highest-degree facts, ties by ascending fact id.
std::vector<HubEntry> rank_hubs(const EntanglementGraph& graph, std::size_t top_n,
                                const Corpus& corpus);

}  // namespace clare
