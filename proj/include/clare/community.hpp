#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "clare/corpus.hpp"
#include "clare/graph.hpp"

namespace clare {

inline constexpr std::uint64_t kDefaultLouvainSeed = 42;
inline constexpr std::size_t kDefaultMinReportSize = 50;

struct LouvainOptions {
  std::uint64_t seed = kDefaultLouvainSeed;
  double resolution = 1.0;
  /// Use edge scores as weights instead of 1.
  bool weighted = false;
};

struct Partition {
  /// Community label per node; labels are 0..community_count-1, numbered by
  /// first appearance in node order.
  std::vector<std::size_t> community;
  std::size_t community_count = 0;
  double modularity = 0.0;
  /// Modularity of the singleton start and after every aggregation level.
  std::vector<double> modularity_trace;
};

/// Newman modularity of a labelling. 0 for a graph without edges.
double modularity(const EntanglementGraph& graph, std::span<const std::size_t> community,
                  bool weighted = false, double resolution = 1.0);

/// Multi-level Louvain: repeated local moving (node order shuffled from the
/// seed at every level) followed by community aggregation, until a level
/// moves no node. Deterministic for a given graph and options.
Partition louvain(const EntanglementGraph& graph, const LouvainOptions& options = {});

struct SubjectShare {
  std::string subject;
  std::size_t count = 0;
  double percentage = 0.0;
};

struct Cluster {
  std::size_t cluster_id = 0;  ///< community label in the partition
  std::vector<FactId> fact_ids;  ///< ascending
  std::size_t internal_edge_count = 0;
  /// Filled by cluster_summary(): count desc, ties by subject.
  std::vector<SubjectShare> subject_histogram;
  std::size_t unique_subjects = 0;
  double cross_subject_edge_fraction = 0.0;

  [[nodiscard]] std::span<const SubjectShare> top_subjects(std::size_t k = 10) const {
    return std::span(subject_histogram).first(std::min(k, subject_histogram.size()));
  }
};

/// Communities with more than `min_report_size` members, largest first
/// (ties by smallest member id). Histogram fields are left empty.
std::vector<Cluster> clusters_from_partition(const EntanglementGraph& graph,
                                             const Partition& partition,
                                             std::size_t min_report_size = kDefaultMinReportSize);

/// louvain() followed by clusters_from_partition().
std::vector<Cluster> louvain_clusters(const EntanglementGraph& graph,
                                      std::uint64_t seed = kDefaultLouvainSeed,
                                      std::size_t min_report_size = kDefaultMinReportSize,
                                      bool weighted = false);

/// Subject histogram over members and the share of internal edges that join
/// facts about different subjects (0 when the cluster has no internal edge).
Cluster cluster_summary(Cluster cluster, const EntanglementGraph& graph, const Corpus& corpus);

enum class PreservationMode { neighbors, cluster };

/// Facts to constrain when editing `edit_fact_id`: its graph neighbors, or the
/// other members of its community. Ascending, never contains the edit fact.
std::vector<FactId> preservation_set(const EntanglementGraph& graph, const Partition& partition,
                                     FactId edit_fact_id, PreservationMode mode);

}  // namespace clare
