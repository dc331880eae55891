#include "clare/graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "clare/error.hpp"
#include "clare/format.hpp"
#include "json.hpp"

namespace clare {

using json = nlohmann::json;

void validate_threshold(double threshold) {
  if (!(threshold > -1.0 && threshold <= 1.0)) {
    throw InvalidArgument("threshold must lie in (-1, 1], got " + format_number(threshold));
  }
}

EntanglementGraph::EntanglementGraph(std::vector<FactId> node_ids, double threshold,
                                     std::vector<GraphEdge> edges)
    : ids_(std::move(node_ids)), threshold_(threshold), adjacency_(ids_.size()) {
  validate_threshold(threshold_);
  sorted_ids_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) sorted_ids_.emplace_back(ids_[i], i);
  std::sort(sorted_ids_.begin(), sorted_ids_.end());
  for (std::size_t t = 1; t < sorted_ids_.size(); ++t) {
    if (sorted_ids_[t].first == sorted_ids_[t - 1].first) {
      throw InvalidArgument("duplicate graph node id " + std::to_string(sorted_ids_[t].first));
    }
  }

  for (const auto& e : edges) {
    if (e.u >= ids_.size() || e.v >= ids_.size()) throw InvalidArgument("graph edge endpoint out of range");
    if (e.u == e.v) throw InvalidArgument("self-loop on fact " + std::to_string(ids_[e.u]));
    if (!(e.score > threshold_)) {
      throw InvalidArgument("edge (" + std::to_string(ids_[e.u]) + ", " + std::to_string(ids_[e.v]) +
                            ") score " + format_number(e.score) + " not above threshold");
    }
    adjacency_[e.u].push_back({e.v, e.score});
    adjacency_[e.v].push_back({e.u, e.score});
  }
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    auto& adj = adjacency_[i];
    std::sort(adj.begin(), adj.end(),
              [&](const Adjacent& a, const Adjacent& b) { return ids_[a.node] < ids_[b.node]; });
    for (std::size_t t = 1; t < adj.size(); ++t) {
      if (adj[t].node == adj[t - 1].node) {
        throw InvalidArgument("duplicate edge (" + std::to_string(ids_[i]) + ", " +
                              std::to_string(ids_[adj[t].node]) + ")");
      }
    }
  }
  edge_count_ = edges.size();
}

std::optional<std::size_t> EntanglementGraph::find(FactId id) const {
  const auto it = std::lower_bound(sorted_ids_.begin(), sorted_ids_.end(),
                                   std::pair<FactId, std::size_t>{id, 0});
  if (it == sorted_ids_.end() || it->first != id) return std::nullopt;
  return it->second;
}

std::size_t EntanglementGraph::index_of(FactId id) const {
  const auto node = find(id);
  if (!node) throw InvalidArgument("unknown fact id " + std::to_string(id));
  return *node;
}

std::vector<GraphEdge> EntanglementGraph::edges() const {
  std::vector<GraphEdge> out;
  out.reserve(edge_count_);
  for (const auto& [id, u] : sorted_ids_) {
    for (const auto& a : adjacency_[u]) {
      if (ids_[a.node] > id) out.push_back({u, a.node, a.score});
    }
  }
  return out;
}

EntanglementGraph build_graph(const VecStore& store, double threshold, const EntanglementConfig& cfg) {
  validate_threshold(threshold);
  std::vector<GraphEdge> edges;
  pairwise_entanglement(store, cfg, [&](std::size_t i, std::span<const double> row) {
    for (std::size_t t = 0; t < row.size(); ++t) {
      if (row[t] > threshold) edges.push_back({i, i + 1 + t, row[t]});
    }
  });
  return EntanglementGraph(store.ids(), threshold, std::move(edges));
}

EntanglementGraph build_graph(const SimilarityMatrix& matrix, double threshold) {
  validate_threshold(threshold);
  std::vector<GraphEdge> edges;
  matrix.for_each([&](std::size_t i, std::size_t j, float s) {
    if (s > threshold) edges.push_back({i, j, s});
  });
  return EntanglementGraph(matrix.fact_ids(), threshold, std::move(edges));
}

EntanglementGraph build_graph_from_matrix_file(const std::filesystem::path& path,
                                               std::vector<FactId> fact_ids, double threshold) {
  validate_threshold(threshold);
  MatrixReader reader(path);
  if (fact_ids.empty()) {
    fact_ids.resize(reader.size());
    for (std::size_t i = 0; i < fact_ids.size(); ++i) fact_ids[i] = i;
  } else if (fact_ids.size() != reader.size()) {
    throw InvalidArgument(path.string() + ": matrix has " + std::to_string(reader.size()) +
                          " nodes but " + std::to_string(fact_ids.size()) + " fact ids were given");
  }
  std::vector<GraphEdge> edges;
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  float s = 0;
  while (reader.next(i, j, s)) {
    if (s > threshold) edges.push_back({i, j, s});
  }
  return EntanglementGraph(std::move(fact_ids), threshold, std::move(edges));
}

void write_edge_list(const EntanglementGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& e : graph.edges()) {
    out << graph.fact_id(e.u) << ' ' << graph.fact_id(e.v) << ' ' << format_number(e.score) << '\n';
  }
  if (!out) throw IoError("short write to " + path.string());
}

EntanglementGraph read_edge_list(const std::filesystem::path& path, std::vector<FactId> node_ids,
                                 double threshold) {
  validate_threshold(threshold);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list " + path.string());

  // Resolve ids against a temporary edge-free graph over the node set.
  const EntanglementGraph nodes(node_ids, threshold, {});
  std::vector<GraphEdge> edges;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    std::istringstream fields(line);
    FactId a = 0;
    FactId b = 0;
    double score = 0.0;
    std::string extra;
    if (!(fields >> a >> b >> score) || (fields >> extra)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected \"i j score\"");
    }
    if (!(score > threshold)) continue;
    const auto u = nodes.find(a);
    const auto v = nodes.find(b);
    if (!u || !v) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": unknown fact id " +
                        std::to_string(u ? b : a));
    }
    edges.push_back({std::min(*u, *v), std::max(*u, *v), score});
  }
  try {
    return EntanglementGraph(std::move(node_ids), threshold, std::move(edges));
  } catch (const InvalidArgument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_graph_document(const EntanglementGraph& graph, const Corpus* corpus,
                          const std::filesystem::path& path) {
  json nodes = json::array();
  for (std::size_t i = 0; i < graph.size(); ++i) {
    json node = {{"id", graph.fact_id(i)}};
    if (corpus != nullptr) {
      const auto& fact = corpus->at(graph.fact_id(i));
      node["subject"] = fact.subject;
      node["prompt"] = fact.prompt;
    }
    nodes.push_back(std::move(node));
  }
  json edges = json::array();
  for (const auto& e : graph.edges()) {
    edges.push_back({{"source", graph.fact_id(e.u)}, {"target", graph.fact_id(e.v)}, {"score", e.score}});
  }
  const json doc = {{"threshold", graph.threshold()},
                    {"directed", false},
                    {"nodes", std::move(nodes)},
                    {"edges", std::move(edges)}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("short write to " + path.string());
}

std::string render_hub_text(const FactTriple& fact, std::size_t degree) {
  return fact.prompt + " → " + fact.object + " (affects " + std::to_string(degree) + " facts)";
}

std::vector<HubEntry> rank_hubs(const EntanglementGraph& graph, std::size_t top_n,
                                const Corpus& corpus) {
  if (top_n < 1) throw InvalidArgument("rank_hubs: top_n must be >= 1");
  std::vector<std::size_t> nodes(graph.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = i;
  const auto by_degree = [&](std::size_t a, std::size_t b) {
    if (graph.degree(a) != graph.degree(b)) return graph.degree(a) > graph.degree(b);
    return graph.fact_id(a) < graph.fact_id(b);
  };
  const auto take = std::min(top_n, nodes.size());
  std::partial_sort(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(take), nodes.end(), by_degree);

  std::vector<HubEntry> hubs;
  hubs.reserve(take);
  for (std::size_t t = 0; t < take; ++t) {
    const auto node = nodes[t];
    const auto& fact = corpus.at(graph.fact_id(node));
    hubs.push_back({fact.id, graph.degree(node), render_hub_text(fact, graph.degree(node))});
  }
  return hubs;
}

}  // namespace clare
