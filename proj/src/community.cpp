#include "clare/community.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <tuple>

#include "clare/error.hpp"
#include "random.hpp"

namespace clare {

namespace {

// A move must beat staying put by more than this to count; keeps sweeps from
// cycling on floating-point noise.
constexpr double kMinGain = 1e-12;

// Weighted graph in CSR form for one Louvain level. Aggregated nodes carry
// their community's internal weight as a self-loop.
struct LevelGraph {
  std::size_t n = 0;
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> targets;
  std::vector<double> weights;
  std::vector<double> self_loops;
  std::vector<double> degree;
  double total = 0.0;  // sum of degrees (2m)

  void finish_degrees() {
    degree.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double k = 2.0 * self_loops[i];
      for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) k += weights[e];
      degree[i] = k;
    }
    total = std::accumulate(degree.begin(), degree.end(), 0.0);
  }
};

double edge_weight(const Adjacent& a, bool weighted) { return weighted ? a.score : 1.0; }

LevelGraph from_graph(const EntanglementGraph& graph, bool weighted) {
  LevelGraph g;
  g.n = graph.size();
  g.offsets.assign(g.n + 1, 0);
  g.self_loops.assign(g.n, 0.0);
  for (std::size_t i = 0; i < g.n; ++i) {
    for (const auto& a : graph.neighbors(i)) {
      if (weighted && !(a.score > 0.0)) {
        throw InvalidArgument("weighted Louvain needs positive edge scores; raise the threshold");
      }
      g.targets.push_back(a.node);
      g.weights.push_back(edge_weight(a, weighted));
    }
    g.offsets[i + 1] = g.targets.size();
  }
  g.finish_degrees();
  return g;
}

// Renumbers labels 0..k-1 by first appearance; returns k.
std::size_t normalize_labels(std::vector<std::size_t>& labels) {
  std::vector<std::size_t> remap(labels.size(), SIZE_MAX);
  std::size_t next = 0;
  for (auto& l : labels) {
    if (remap[l] == SIZE_MAX) remap[l] = next++;
    l = remap[l];
  }
  return next;
}

// One level of local moving. Returns true if any node changed community.
bool local_moving(const LevelGraph& g, std::vector<std::size_t>& comm, double resolution,
                  std::mt19937_64& rng) {
  std::vector<double> tot(g.degree);
  std::vector<double> link(g.n, 0.0);
  std::vector<std::size_t> touched;
  std::vector<std::size_t> order(g.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  detail::shuffle(std::span(order), rng);

  bool any_move = false;
  for (bool moved = true; moved;) {
    moved = false;
    for (const std::size_t i : order) {
      const std::size_t home = comm[i];
      const double k = g.degree[i];
      touched.clear();
      for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
        const std::size_t c = comm[g.targets[e]];
        if (link[c] == 0.0) touched.push_back(c);
        link[c] += g.weights[e];
      }
      tot[home] -= k;
      std::size_t best = home;
      double best_gain = link[home] - resolution * tot[home] * k / g.total;
      for (const std::size_t c : touched) {
        if (c == home) continue;
        const double gain = link[c] - resolution * tot[c] * k / g.total;
        if (gain > best_gain + kMinGain) {
          best = c;
          best_gain = gain;
        }
      }
      tot[best] += k;
      comm[i] = best;
      for (const std::size_t c : touched) link[c] = 0.0;
      if (best != home) moved = any_move = true;
    }
  }
  return any_move;
}

LevelGraph aggregate(const LevelGraph& g, const std::vector<std::size_t>& comm, std::size_t count) {
  LevelGraph out;
  out.n = count;
  out.self_loops.assign(count, 0.0);
  std::vector<std::tuple<std::size_t, std::size_t, double>> links;
  for (std::size_t i = 0; i < g.n; ++i) {
    out.self_loops[comm[i]] += g.self_loops[i];
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
      const auto ci = comm[i];
      const auto cj = comm[g.targets[e]];
      if (ci == cj) {
        out.self_loops[ci] += 0.5 * g.weights[e];  // each internal edge is seen twice
      } else {
        links.emplace_back(ci, cj, g.weights[e]);
      }
    }
  }
  std::stable_sort(links.begin(), links.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  out.offsets.assign(count + 1, 0);
  for (std::size_t t = 0; t < links.size();) {
    const auto [ci, cj, w0] = links[t];
    double w = 0.0;
    for (; t < links.size() && std::get<0>(links[t]) == ci && std::get<1>(links[t]) == cj; ++t) {
      w += std::get<2>(links[t]);
    }
    out.targets.push_back(cj);
    out.weights.push_back(w);
    out.offsets[ci + 1] = out.targets.size();
  }
  for (std::size_t c = 1; c <= count; ++c) out.offsets[c] = std::max(out.offsets[c], out.offsets[c - 1]);
  out.finish_degrees();
  return out;
}

}  // namespace

double modularity(const EntanglementGraph& graph, std::span<const std::size_t> community,
                  bool weighted, double resolution) {
  if (community.size() != graph.size()) {
    throw InvalidArgument("modularity: labelling covers " + std::to_string(community.size()) +
                          " nodes, graph has " + std::to_string(graph.size()));
  }
  const std::size_t labels = community.empty() ? 0 : *std::max_element(community.begin(), community.end()) + 1;
  std::vector<double> internal(labels, 0.0);
  std::vector<double> tot(labels, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    for (const auto& a : graph.neighbors(i)) {
      const double w = edge_weight(a, weighted);
      tot[community[i]] += w;
      total += w;
      if (community[i] == community[a.node]) internal[community[i]] += w;
    }
  }
  if (total == 0.0) return 0.0;
  double q = 0.0;
  for (std::size_t c = 0; c < labels; ++c) {
    q += internal[c] / total - resolution * (tot[c] / total) * (tot[c] / total);
  }
  return q;
}

Partition louvain(const EntanglementGraph& graph, const LouvainOptions& options) {
  if (!(options.resolution > 0.0)) throw InvalidArgument("Louvain resolution must be > 0");
  Partition result;
  result.community.resize(graph.size());
  std::iota(result.community.begin(), result.community.end(), std::size_t{0});
  result.community_count = graph.size();
  result.modularity = modularity(graph, result.community, options.weighted, options.resolution);
  result.modularity_trace.push_back(result.modularity);

  LevelGraph level = from_graph(graph, options.weighted);
  if (level.total == 0.0) return result;

  std::mt19937_64 rng(options.seed);
  while (true) {
    std::vector<std::size_t> comm(level.n);
    std::iota(comm.begin(), comm.end(), std::size_t{0});
    if (!local_moving(level, comm, options.resolution, rng)) break;
    const std::size_t count = normalize_labels(comm);
    for (auto& c : result.community) c = comm[c];
    result.community_count = count;
    result.modularity_trace.push_back(
        modularity(graph, result.community, options.weighted, options.resolution));
    if (count == level.n) break;
    level = aggregate(level, comm, count);
  }
  result.community_count = normalize_labels(result.community);
  result.modularity = modularity(graph, result.community, options.weighted, options.resolution);
  return result;
}

std::vector<Cluster> clusters_from_partition(const EntanglementGraph& graph,
                                             const Partition& partition,
                                             std::size_t min_report_size) {
  if (partition.community.size() != graph.size()) {
    throw InvalidArgument("partition does not cover the graph");
  }
  std::vector<Cluster> all(partition.community_count);
  for (std::size_t c = 0; c < all.size(); ++c) all[c].cluster_id = c;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto c = partition.community[i];
    all[c].fact_ids.push_back(graph.fact_id(i));
    for (const auto& a : graph.neighbors(i)) {
      if (a.node > i && partition.community[a.node] == c) ++all[c].internal_edge_count;
    }
  }
  std::vector<Cluster> out;
  for (auto& c : all) {
    if (c.fact_ids.size() <= min_report_size) continue;
    std::sort(c.fact_ids.begin(), c.fact_ids.end());
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) {
    if (a.fact_ids.size() != b.fact_ids.size()) return a.fact_ids.size() > b.fact_ids.size();
    return a.fact_ids.front() < b.fact_ids.front();
  });
  return out;
}

std::vector<Cluster> louvain_clusters(const EntanglementGraph& graph, std::uint64_t seed,
                                      std::size_t min_report_size, bool weighted) {
  const auto partition = louvain(graph, {.seed = seed, .resolution = 1.0, .weighted = weighted});
  return clusters_from_partition(graph, partition, min_report_size);
}

Cluster cluster_summary(Cluster cluster, const EntanglementGraph& graph, const Corpus& corpus) {
  std::map<std::string, std::size_t> counts;
  std::vector<std::size_t> members;
  members.reserve(cluster.fact_ids.size());
  for (const auto id : cluster.fact_ids) {
    ++counts[corpus.at(id).subject];
    members.push_back(graph.index_of(id));
  }
  std::sort(members.begin(), members.end());

  cluster.subject_histogram.clear();
  for (const auto& [subject, count] : counts) {
    cluster.subject_histogram.push_back(
        {subject, count, 100.0 * static_cast<double>(count) / static_cast<double>(cluster.fact_ids.size())});
  }
  std::stable_sort(cluster.subject_histogram.begin(), cluster.subject_histogram.end(),
                   [](const SubjectShare& a, const SubjectShare& b) { return a.count > b.count; });
  cluster.unique_subjects = counts.size();

  std::size_t internal = 0;
  std::size_t cross = 0;
  for (const auto u : members) {
    const auto& su = corpus.at(graph.fact_id(u)).subject;
    for (const auto& a : graph.neighbors(u)) {
      if (a.node <= u || !std::binary_search(members.begin(), members.end(), a.node)) continue;
      ++internal;
      if (corpus.at(graph.fact_id(a.node)).subject != su) ++cross;
    }
  }
  cluster.internal_edge_count = internal;
  cluster.cross_subject_edge_fraction =
      internal == 0 ? 0.0 : static_cast<double>(cross) / static_cast<double>(internal);
  return cluster;
}

std::vector<FactId> preservation_set(const EntanglementGraph& graph, const Partition& partition,
                                     FactId edit_fact_id, PreservationMode mode) {
  const auto node = graph.index_of(edit_fact_id);
  std::vector<FactId> out;
  if (mode == PreservationMode::neighbors) {
    for (const auto& a : graph.neighbors(node)) out.push_back(graph.fact_id(a.node));
  } else {
    if (partition.community.size() != graph.size()) {
      throw InvalidArgument("partition does not cover the graph");
    }
    const auto c = partition.community[node];
    for (std::size_t i = 0; i < graph.size(); ++i) {
      if (i != node && partition.community[i] == c) out.push_back(graph.fact_id(i));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace clare
