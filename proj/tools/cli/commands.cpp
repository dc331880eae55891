#include "commands.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "clare/community.hpp"
#include "clare/corpus.hpp"
#include "clare/correlation.hpp"
#include "clare/entanglement.hpp"
#include "clare/format.hpp"
#include "clare/graph.hpp"
#include "clare/histogram.hpp"
#include "clare/ripple.hpp"
#include "clare/similarity_matrix.hpp"
#include "clare/vecstore.hpp"
#include "json.hpp"
#include "manifest.hpp"

namespace clare::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Stages outputs under "<path>.partial" and renames them into place only
// once the whole command has succeeded.
class OutputTransaction {
 public:
  OutputTransaction() = default;
  OutputTransaction(const OutputTransaction&) = delete;
  OutputTransaction& operator=(const OutputTransaction&) = delete;
  ~OutputTransaction() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& [final_path, temp] : staged_) fs::remove(temp, ec);
  }

  fs::path stage(const fs::path& final_path) {
    auto temp = final_path;
    temp += ".partial";
    staged_.emplace_back(final_path, temp);
    return temp;
  }

  /// Hashes the staged outputs into the manifest, writes the manifest beside
  /// the first output, then renames everything into place.
  void commit(Manifest& manifest) {
    for (const auto& [final_path, temp] : staged_) manifest.add_output(final_path, temp);
    const auto manifest_final = manifest_path_for(staged_.front().first);
    const auto manifest_temp = stage(manifest_final);
    write_text(manifest_temp, manifest.to_json().dump(2) + "\n");
    for (const auto& [final_path, temp] : staged_) {
      std::error_code ec;
      fs::rename(temp, final_path, ec);
      if (ec) throw IoError("cannot move " + temp.string() + " to " + final_path.string() + ": " + ec.message());
    }
    committed_ = true;
  }

  static void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("short write to " + path.string());
  }

 private:
  std::vector<std::pair<fs::path, fs::path>> staged_;
  bool committed_ = false;
};

void write_json(const fs::path& path, const json& doc) {
  OutputTransaction::write_text(path, doc.dump(2) + "\n");
}

// Left-aligned text table for console summaries.
void render_table(std::ostream& os, const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], row[c].size());
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      os << (c ? "  " : "") << std::left << std::setw(static_cast<int>(width[c])) << cells[c];
    }
    os << '\n';
  };
  line(header);
  std::vector<std::string> rule;
  for (const auto w : width) rule.emplace_back(w, '-');
  line(rule);
  for (const auto& row : rows) line(row);
}

void require(const fs::path& p, const char* flag) {
  if (p.empty()) throw UsageError(std::string(flag) + " is required");
}

EntanglementConfig entanglement_config(const RunConfig& c) {
  EntanglementConfig cfg;
  cfg.epsilon = c.epsilon;
  cfg.block_size = c.block_size;
  cfg.accumulate_wide = !c.narrow_accumulation;
  cfg.threads = c.threads;
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

json entanglement_json(const EntanglementConfig& cfg) {
  return {{"epsilon", cfg.epsilon}, {"block_size", cfg.block_size}, {"accumulate_wide", cfg.accumulate_wide}};
}

// ---------------------------------------------------------------------------
// Graph sources shared by graph / hubs / cluster / preserve.

struct GraphInput {
  EntanglementGraph graph;
  json source;
};

GraphInput load_graph(const RunConfig& c, Manifest& manifest, const Corpus* corpus) {
  try {
    validate_threshold(c.threshold);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (!c.matrix.empty()) {
    std::vector<FactId> ids;
    manifest.add_input("matrix", c.matrix);
    if (!c.vecstore.empty()) {
      manifest.add_input("vecstore", c.vecstore);
      ids = read_vecstore(c.vecstore).ids();
    }
    return {build_graph_from_matrix_file(c.matrix, std::move(ids), c.threshold), {{"kind", "matrix"}}};
  }
  if (!c.edges.empty()) {
    manifest.add_input("edges", c.edges);
    std::vector<FactId> ids;
    if (!c.vecstore.empty()) {
      manifest.add_input("vecstore", c.vecstore);
      ids = read_vecstore(c.vecstore).ids();
    } else if (corpus != nullptr) {
      for (const auto& f : *corpus) ids.push_back(f.id);
    } else {
      throw UsageError("--edges needs --vecstore or --corpus to name the node set");
    }
    return {read_edge_list(c.edges, std::move(ids), c.threshold), {{"kind", "edges"}}};
  }
  if (!c.vecstore.empty()) {
    manifest.add_input("vecstore", c.vecstore);
    const auto cfg = entanglement_config(c);
    const auto store = read_vecstore(c.vecstore);
    return {build_graph(store, c.threshold, cfg), {{"kind", "vecstore"}, {"entanglement", entanglement_json(cfg)}}};
  }
  throw UsageError("one of --vecstore, --matrix or --edges is required");
}

std::optional<Corpus> load_optional_corpus(const RunConfig& c, Manifest& manifest) {
  if (c.corpus.empty()) return std::nullopt;
  manifest.add_input("corpus", c.corpus);
  return load_corpus(c.corpus);
}

// ---------------------------------------------------------------------------

void cmd_stats(const RunConfig& c, std::ostream& console) {
  require(c.corpus, "--corpus");
  require(c.out, "--out");
  Manifest manifest("stats");
  manifest.add_input("corpus", c.corpus);
  manifest.set_config({{"corpus", c.corpus.string()}, {"out", c.out.string()}});

  const auto stats = corpus_stats(load_corpus(c.corpus));
  json subjects = json::array();
  for (const auto& [subject, count] : stats.subjects_by_fact_count) {
    subjects.push_back({{"subject", subject}, {"facts", count}});
  }
  OutputTransaction tx;
  write_json(tx.stage(c.out), {{"fact_count", stats.fact_count},
                               {"unique_subjects", stats.unique_subjects},
                               {"unique_prompt_formats", stats.unique_prompt_formats},
                               {"subjects_by_fact_count", subjects}});
  tx.commit(manifest);

  render_table(console, {"facts", "subjects", "prompt formats"},
               {{std::to_string(stats.fact_count), std::to_string(stats.unique_subjects),
                 std::to_string(stats.unique_prompt_formats)}});
}

void cmd_score(const RunConfig& c, std::ostream& console) {
  require(c.vecstore, "--vecstore");
  require(c.out, "--out");
  const auto cfg = entanglement_config(c);
  Manifest manifest("score");
  manifest.add_input("vecstore", c.vecstore);
  json config = {{"vecstore", c.vecstore.string()}, {"out", c.out.string()}, {"entanglement", entanglement_json(cfg)}};

  const auto store = read_vecstore(c.vecstore);
  OutputTransaction tx;
  const auto staged = tx.stage(c.out);
  if (c.k > 0) {
    config["k"] = c.k;
    config["min_score"] = c.min_score;
    const auto lists = top_k_neighbors(store, c.k, c.min_score, cfg);
    json facts = json::array();
    for (std::size_t i = 0; i < store.size(); ++i) {
      json nbrs = json::array();
      for (const auto& n : lists[i]) nbrs.push_back({{"fact_id", n.fact_id}, {"score", n.score}});
      facts.push_back({{"fact_id", store.id(i)}, {"neighbors", std::move(nbrs)}});
    }
    write_json(staged, {{"k", c.k}, {"min_score", c.min_score}, {"facts", std::move(facts)}});
  } else {
    MatrixWriter writer(staged, store.size());
    pairwise_entanglement(store, cfg, [&](std::size_t i, std::span<const double> row) { writer.write_row(i, row); });
    writer.close();
  }
  manifest.set_config(config);
  tx.commit(manifest);
  console << "scored " << pair_count(store.size()) << " pairs of " << store.size() << " facts (dim "
          << store.dim() << ") -> " << c.out.string() << '\n';
}

void cmd_graph(const RunConfig& c, std::ostream& console) {
  require(c.out, "--out");
  Manifest manifest("graph");
  const auto corpus = load_optional_corpus(c, manifest);
  auto [graph, source] = load_graph(c, manifest, corpus ? &*corpus : nullptr);
  manifest.set_config({{"source", source}, {"threshold", c.threshold}, {"out", c.out.string()},
                       {"doc", c.doc.string()}});

  OutputTransaction tx;
  write_edge_list(graph, tx.stage(c.out));
  if (!c.doc.empty()) write_graph_document(graph, corpus ? &*corpus : nullptr, tx.stage(c.doc));
  tx.commit(manifest);
  console << "graph: " << graph.size() << " nodes, " << graph.edge_count() << " edges (score > "
          << format_number(c.threshold) << ")\n";
}

void cmd_hubs(const RunConfig& c, std::ostream& console) {
  require(c.out, "--out");
  require(c.corpus, "--corpus");
  if (c.top_n < 1) throw UsageError("--top-n must be >= 1");
  Manifest manifest("hubs");
  const auto corpus = load_optional_corpus(c, manifest);
  auto [graph, source] = load_graph(c, manifest, &*corpus);
  manifest.set_config({{"source", source}, {"threshold", c.threshold}, {"top_n", c.top_n}, {"out", c.out.string()}});

  const auto hubs = rank_hubs(graph, c.top_n, *corpus);
  json list = json::array();
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < hubs.size(); ++r) {
    list.push_back({{"rank", r + 1}, {"fact_id", hubs[r].fact_id}, {"degree", hubs[r].degree}, {"text", hubs[r].text}});
    rows.push_back({std::to_string(r + 1), std::to_string(hubs[r].fact_id), std::to_string(hubs[r].degree), hubs[r].text});
  }
  OutputTransaction tx;
  write_json(tx.stage(c.out), {{"threshold", c.threshold}, {"hubs", std::move(list)}});
  tx.commit(manifest);
  render_table(console, {"rank", "fact", "degree", "fact text"}, rows);
}

LouvainOptions louvain_options(const RunConfig& c) {
  return {.seed = c.seed, .resolution = 1.0, .weighted = c.weighted};
}

void cmd_cluster(const RunConfig& c, std::ostream& console) {
  require(c.out, "--out");
  Manifest manifest("cluster");
  const auto corpus = load_optional_corpus(c, manifest);
  auto [graph, source] = load_graph(c, manifest, corpus ? &*corpus : nullptr);
  manifest.set_config({{"source", source}, {"threshold", c.threshold}, {"seed", c.seed},
                       {"weighted", c.weighted}, {"min_size", c.min_size}, {"resolution", 1.0},
                       {"out", c.out.string()}});

  const auto partition = louvain(graph, louvain_options(c));
  auto clusters = clusters_from_partition(graph, partition, c.min_size);
  json list = json::array();
  std::vector<std::vector<std::string>> rows;
  for (auto& cl : clusters) {
    if (corpus) cl = cluster_summary(std::move(cl), graph, *corpus);
    json entry = {{"cluster_id", cl.cluster_id},
                  {"size", cl.fact_ids.size()},
                  {"internal_edge_count", cl.internal_edge_count},
                  {"fact_ids", cl.fact_ids}};
    std::string cross = "-";
    if (corpus) {
      json top = json::array();
      for (const auto& s : cl.top_subjects(10)) {
        top.push_back({{"subject", s.subject}, {"count", s.count}, {"percentage", s.percentage}});
      }
      json hist = json::array();
      for (const auto& s : cl.subject_histogram) {
        hist.push_back({{"subject", s.subject}, {"count", s.count}, {"percentage", s.percentage}});
      }
      entry["unique_subjects"] = cl.unique_subjects;
      entry["cross_subject_edge_fraction"] = cl.cross_subject_edge_fraction;
      entry["top_subjects"] = std::move(top);
      entry["subject_histogram"] = std::move(hist);
      cross = format_fixed(100.0 * cl.cross_subject_edge_fraction, 1) + "%";
    }
    rows.push_back({std::to_string(cl.cluster_id), std::to_string(cl.fact_ids.size()),
                    corpus ? std::to_string(cl.unique_subjects) : "-", std::to_string(cl.internal_edge_count), cross});
    list.push_back(std::move(entry));
  }
  OutputTransaction tx;
  write_json(tx.stage(c.out), {{"seed", c.seed},
                               {"resolution", 1.0},
                               {"weighted", c.weighted},
                               {"min_size", c.min_size},
                               {"modularity", partition.modularity},
                               {"modularity_trace", partition.modularity_trace},
                               {"community_count", partition.community_count},
                               {"clusters", std::move(list)}});
  tx.commit(manifest);
  console << partition.community_count << " communities, modularity " << format_fixed(partition.modularity, 4)
          << "; " << clusters.size() << " with more than " << c.min_size << " facts\n";
  render_table(console, {"cluster", "facts", "subjects", "edges", "cross-subject"}, rows);
}

void cmd_correlate(const RunConfig& c, std::ostream& console) {
  require(c.vecstore, "--vecstore");
  require(c.ripples, "--ripples");
  require(c.out, "--out");
  if (c.method != "clare" && c.method != "gradsim") throw UsageError("--method must be clare or gradsim");
  const auto cfg = entanglement_config(c);
  Manifest manifest("correlate");
  manifest.add_input("vecstore", c.vecstore);
  manifest.add_input("ripples", c.ripples);
  manifest.set_config({{"vecstore", c.vecstore.string()}, {"ripples", c.ripples.string()}, {"method", c.method},
                       {"entanglement", entanglement_json(cfg)}, {"out", c.out.string()}});

  const auto store = read_vecstore(c.vecstore);
  const auto ripples = load_ripples(c.ripples);
  const auto method = c.method == "clare" ? ScoreMethod::clare : ScoreMethod::gradsim;
  const auto report = correlate(score_ripple_pairs(store, ripples, cfg, method), ripples, c.method);

  OutputTransaction tx;
  write_json(tx.stage(c.out), {{"n_pairs", report.n_pairs},
                               {"rho_l2", report.rho_l2},
                               {"rho_dlogp", report.rho_dlogp},
                               {"method_tag", report.method_tag},
                               {"technique_tag", report.technique_tag},
                               {"model_tag", report.model_tag}});
  tx.commit(manifest);
  render_table(console, {"method", "technique", "model", "pairs", "rho(l2)", "rho(dlogp)"},
               {{report.method_tag, report.technique_tag, report.model_tag, std::to_string(report.n_pairs),
                 format_fixed(report.rho_l2, 4), format_fixed(report.rho_dlogp, 4)}});
}

void cmd_layer_profile(const RunConfig& c, std::ostream& console) {
  if (c.layer_vecstores.size() < 2) throw UsageError("layer-profile needs --vecstore at least twice");
  require(c.ripples, "--ripples");
  require(c.out, "--out");
  const auto cfg = entanglement_config(c);
  Manifest manifest("layer-profile");
  std::vector<VecStore> stores;
  json store_paths = json::array();
  for (const auto& p : c.layer_vecstores) {
    manifest.add_input("vecstore", p);
    stores.push_back(read_vecstore(p));
    store_paths.push_back(p.string());
  }
  manifest.add_input("ripples", c.ripples);

  std::map<int, const VecStore*> by_layer;
  for (std::size_t s = 0; s < stores.size(); ++s) {
    const int layer = stores[s].header().layer;
    if (layer < 0) throw Error(c.layer_vecstores[s].string() + ": vecstore has no layer index");
    if (!by_layer.emplace(layer, &stores[s]).second) {
      throw Error("two vecstores for layer " + std::to_string(layer));
    }
  }
  std::optional<int> query = c.layer;
  if (!query && c.num_layers) {
    try {
      query = approximate_critical_layer(*c.num_layers);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }
  manifest.set_config({{"vecstores", store_paths}, {"ripples", c.ripples.string()},
                       {"layer", c.layer ? json(*c.layer) : json(nullptr)},
                       {"num_layers", c.num_layers ? json(*c.num_layers) : json(nullptr)},
                       {"entanglement", entanglement_json(cfg)}, {"out", c.out.string()}});

  const auto ripples = load_ripples(c.ripples);
  const auto profile = layer_profile(by_layer, ripples, cfg);
  json per_layer = json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto& [layer, rho] : profile.per_layer_rho) {
    const double diff = profile.diff_from_peak(layer);
    per_layer.push_back({{"layer", layer}, {"rho", rho}, {"diff_from_peak_pp", diff}});
    rows.push_back({std::to_string(layer) + (layer == profile.peak_layer ? " *" : ""),
                    format_fixed(100.0 * rho, 2) + "%", format_fixed(diff, 2)});
  }
  json doc = {{"per_layer", std::move(per_layer)}, {"peak_layer", profile.peak_layer}, {"peak_rho", profile.peak_rho}};
  if (query) {
    doc["query_layer"] = *query;
    doc["query_rho"] = profile.per_layer_rho.contains(*query) ? json(profile.per_layer_rho.at(*query)) : json(nullptr);
    doc["query_diff_from_peak_pp"] = profile.diff_from_peak(*query);
  }
  OutputTransaction tx;
  write_json(tx.stage(c.out), doc);
  tx.commit(manifest);
  render_table(console, {"layer", "rho(l2)", "diff from peak (p.p.)"}, rows);
  if (query) {
    console << "layer " << *query << ": " << format_fixed(profile.diff_from_peak(*query), 2)
            << " p.p. from peak (layer " << profile.peak_layer << ")\n";
  }
}

void cmd_histogram(const RunConfig& c, std::ostream& console) {
  require(c.out, "--out");
  if (!(c.bin_width > 0.0)) throw UsageError("--bin-width must be > 0");
  Manifest manifest("histogram");
  json config = {{"bin_width", c.bin_width}, {"out", c.out.string()}};
  std::optional<SimilarityHistogram> hist;
  if (!c.matrix.empty()) {
    manifest.add_input("matrix", c.matrix);
    hist = similarity_histogram_from_file(c.matrix, c.bin_width);
  } else if (!c.vecstore.empty()) {
    const auto cfg = entanglement_config(c);
    manifest.add_input("vecstore", c.vecstore);
    config["entanglement"] = entanglement_json(cfg);
    hist = similarity_histogram(read_vecstore(c.vecstore), c.bin_width, cfg);
  } else {
    throw UsageError("one of --vecstore or --matrix is required");
  }
  manifest.set_config(config);

  json bins = json::array();
  std::vector<std::vector<std::string>> rows;
  for (std::size_t b = 0; b < hist->bins(); ++b) {
    bins.push_back({{"lower", hist->lower(b)}, {"upper", hist->upper(b)}, {"count", hist->counts()[b]}});
    if (hist->counts()[b] > 0) {
      rows.push_back({"[" + format_fixed(hist->lower(b), 2) + ", " + format_fixed(hist->upper(b), 2) +
                          (b + 1 == hist->bins() ? "]" : ")"),
                      std::to_string(hist->counts()[b])});
    }
  }
  OutputTransaction tx;
  write_json(tx.stage(c.out), {{"bin_width", c.bin_width}, {"total", hist->total()}, {"bins", std::move(bins)}});
  tx.commit(manifest);
  render_table(console, {"bin", "pairs"}, rows);
}

void cmd_preserve(const RunConfig& c, std::ostream& console) {
  require(c.out, "--out");
  if (!c.fact_id) throw UsageError("--fact-id is required");
  PreservationMode mode;
  if (c.mode == "neighbors") {
    mode = PreservationMode::neighbors;
  } else if (c.mode == "cluster") {
    mode = PreservationMode::cluster;
  } else {
    throw UsageError("--mode must be neighbors or cluster");
  }
  Manifest manifest("preserve");
  const auto corpus = load_optional_corpus(c, manifest);
  auto [graph, source] = load_graph(c, manifest, corpus ? &*corpus : nullptr);
  json config = {{"source", source}, {"threshold", c.threshold}, {"fact_id", *c.fact_id}, {"mode", c.mode},
                 {"out", c.out.string()}};
  Partition partition;
  if (mode == PreservationMode::cluster) {
    config["seed"] = c.seed;
    config["weighted"] = c.weighted;
    partition = louvain(graph, louvain_options(c));
  }
  manifest.set_config(config);

  const auto facts = preservation_set(graph, partition, *c.fact_id, mode);
  OutputTransaction tx;
  write_json(tx.stage(c.out), {{"fact_id", *c.fact_id}, {"mode", c.mode}, {"threshold", c.threshold}, {"facts", facts}});
  tx.commit(manifest);
  console << facts.size() << " facts to preserve when editing fact " << *c.fact_id << " (" << c.mode << ")\n";
}

std::optional<std::uint64_t> peak_rss_bytes() {
  rusage usage{};
  if (getrusage(RUSAGE_SELF, &usage) != 0) return std::nullopt;
  return static_cast<std::uint64_t>(usage.ru_maxrss) * 1024;  // kilobytes on Linux
}

void cmd_bench(const RunConfig& c, std::ostream& console) {
  require(c.vecstore, "--vecstore");
  require(c.out, "--out");
  const auto cfg = entanglement_config(c);
  Manifest manifest("bench");
  manifest.add_input("vecstore", c.vecstore);
  manifest.set_config({{"vecstore", c.vecstore.string()}, {"threshold", c.threshold}, {"threads", cfg.resolved_threads()},
                       {"entanglement", entanglement_json(cfg)}, {"out", c.out.string()}});
  using clock = std::chrono::steady_clock;
  const auto seconds = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };

  auto t0 = clock::now();
  const auto store = read_vecstore(c.vecstore);
  auto t1 = clock::now();
  double norm_sum = 0.0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto row = store.row(i);
    double sq = 0.0;
    for (const float v : row) sq += static_cast<double>(v) * v;
    norm_sum += std::sqrt(sq);
  }
  auto t2 = clock::now();
  std::uint64_t pairs = 0;
  double score_sum = 0.0;
  pairwise_entanglement(store, cfg, [&](std::size_t, std::span<const double> row) {
    pairs += row.size();
    for (const double s : row) score_sum += s;
  });
  auto t3 = clock::now();
  const auto graph = build_graph(store, c.threshold, cfg);
  auto t4 = clock::now();

  const std::uint64_t repr_bytes = store.size() * store.header().payload_bytes();
  json doc = {{"facts", store.size()},
              {"dim", store.dim()},
              {"pairs", pairs},
              {"representation_bytes", repr_bytes},
              {"representation_bytes_per_fact", store.header().payload_bytes()},
              {"edges", graph.edge_count()},
              {"threads", cfg.resolved_threads()},
              {"seconds", {{"load", seconds(t0, t1)}, {"norms", seconds(t1, t2)}, {"pairwise", seconds(t2, t3)},
                           {"threshold", seconds(t3, t4)}}},
              {"checksum", {{"norm_sum", norm_sum}, {"score_sum", score_sum}}}};
  const auto rss = peak_rss_bytes();
  doc["peak_rss_bytes"] = rss ? json(*rss) : json(nullptr);

  OutputTransaction tx;
  write_json(tx.stage(c.out), doc);
  tx.commit(manifest);
  render_table(console, {"phase", "seconds"},
               {{"load", format_fixed(seconds(t0, t1), 3)},
                {"norms", format_fixed(seconds(t1, t2), 3)},
                {"pairwise", format_fixed(seconds(t2, t3), 3)},
                {"threshold", format_fixed(seconds(t3, t4), 3)}});
  console << pairs << " pairs, " << repr_bytes << " representation bytes (" << store.header().payload_bytes()
          << " per fact)\n";
}

// ---------------------------------------------------------------------------
// Argument parsing

void add_entanglement_flags(CLI::App* sub, RunConfig& c) {
  sub->add_option("--epsilon", c.epsilon, "Cosine stabilizer, in (0, 1e-4]");
  sub->add_option("--block-size", c.block_size, "Tile edge for blocked pair scoring")->check(CLI::PositiveNumber);
  sub->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
  sub->add_flag("--narrow-accumulation", c.narrow_accumulation, "Accumulate dot products in float");
}

void add_graph_source(CLI::App* sub, RunConfig& c) {
  sub->add_option("--vecstore", c.vecstore, "Vecstore to score (or node ids for --matrix/--edges)");
  sub->add_option("--matrix", c.matrix, "Similarity sidecar written by `score`");
  sub->add_option("--edges", c.edges, "Edge list (\"i j score\" per line)");
  sub->add_option("--threshold", c.threshold, "Edge threshold; edges need score > threshold");
  add_entanglement_flags(sub, c);
}

}  // namespace

void run(const RunConfig& config, std::ostream& console) {
  static const std::map<std::string, void (*)(const RunConfig&, std::ostream&)> kCommands = {
      {"stats", cmd_stats},         {"score", cmd_score},       {"graph", cmd_graph},
      {"hubs", cmd_hubs},           {"cluster", cmd_cluster},   {"correlate", cmd_correlate},
      {"layer-profile", cmd_layer_profile}, {"histogram", cmd_histogram}, {"preserve", cmd_preserve},
      {"bench", cmd_bench}};
  const auto it = kCommands.find(config.subcommand);
  if (it == kCommands.end()) throw UsageError("unknown subcommand '" + config.subcommand + "'");
  it->second(config, console);
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Factual-entanglement engine: scores, graphs, clusters and ripple correlations", kToolName};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  stats->add_option("--corpus", c.corpus, "Corpus file (one JSON fact per line)");
  stats->add_option("--out", c.out, "Output report (JSON)");

  auto* score = app.add_subcommand("score", "Score all fact pairs into a similarity sidecar");
  score->add_option("--vecstore", c.vecstore, "Input vecstore");
  score->add_option("--out", c.out, "Output sidecar (or neighbor lists with --top-k)");
  score->add_option("--top-k", c.k, "Write the k best neighbors per fact instead of the full matrix");
  score->add_option("--min-score", c.min_score, "Neighbor score floor for --top-k");
  add_entanglement_flags(score, c);

  auto* graph = app.add_subcommand("graph", "Build a thresholded entanglement graph");
  add_graph_source(graph, c);
  graph->add_option("--corpus", c.corpus, "Corpus for node labels in --doc");
  graph->add_option("--out", c.out, "Output edge list");
  graph->add_option("--doc", c.doc, "Optional structured graph document (JSON)");

  auto* hubs = app.add_subcommand("hubs", "Rank facts by entanglement degree");
  add_graph_source(hubs, c);
  hubs->add_option("--corpus", c.corpus, "Corpus for fact text");
  hubs->add_option("--top-n", c.top_n, "Number of hubs to report");
  hubs->add_option("--out", c.out, "Output report (JSON)");

  auto* cluster = app.add_subcommand("cluster", "Louvain clusters with subject statistics");
  add_graph_source(cluster, c);
  cluster->add_option("--corpus", c.corpus, "Corpus for subject statistics");
  cluster->add_option("--seed", c.seed, "Node-order shuffle seed");
  cluster->add_option("--min-size", c.min_size, "Report clusters with more facts than this");
  cluster->add_flag("--weighted", c.weighted, "Use edge scores as weights");
  cluster->add_option("--out", c.out, "Output report (JSON)");

  auto* correlate_cmd = app.add_subcommand("correlate", "Spearman correlation of scores against ripple magnitudes");
  correlate_cmd->add_option("--vecstore", c.vecstore, "Hidden-state (clare) or gradient (gradsim) vecstore");
  correlate_cmd->add_option("--ripples", c.ripples, "Ripple records (one JSON object per line)");
  correlate_cmd->add_option("--method", c.method, "clare or gradsim");
  correlate_cmd->add_option("--out", c.out, "Output report (JSON)");
  add_entanglement_flags(correlate_cmd, c);

  auto* profile = app.add_subcommand("layer-profile", "Per-layer correlation profile");
  profile->add_option("--vecstore", c.layer_vecstores, "One vecstore per layer (repeat)");
  profile->add_option("--ripples", c.ripples, "Ripple records");
  profile->add_option("--layer", c.layer, "Layer to compare against the peak");
  profile->add_option("--num-layers", c.num_layers, "Model depth; compares the one-third-depth layer when --layer is absent");
  profile->add_option("--out", c.out, "Output report (JSON)");
  add_entanglement_flags(profile, c);

  auto* histogram = app.add_subcommand("histogram", "Distribution of pair scores");
  histogram->add_option("--vecstore", c.vecstore, "Input vecstore");
  histogram->add_option("--matrix", c.matrix, "Input similarity sidecar");
  histogram->add_option("--bin-width", c.bin_width, "Bin width over [-1, 1]");
  histogram->add_option("--out", c.out, "Output histogram (JSON)");
  add_entanglement_flags(histogram, c);

  auto* preserve = app.add_subcommand("preserve", "Preservation set for an edit");
  add_graph_source(preserve, c);
  preserve->add_option("--corpus", c.corpus, "Corpus (node set for --edges)");
  preserve->add_option("--fact-id", c.fact_id, "Fact being edited");
  preserve->add_option("--mode", c.mode, "neighbors or cluster");
  preserve->add_option("--seed", c.seed, "Louvain seed for --mode cluster");
  preserve->add_flag("--weighted", c.weighted, "Weighted Louvain for --mode cluster");
  preserve->add_option("--out", c.out, "Output set (JSON)");

  auto* bench = app.add_subcommand("bench", "Time load, norms, pairwise scoring and thresholding");
  bench->add_option("--vecstore", c.vecstore, "Input vecstore");
  bench->add_option("--threshold", c.threshold, "Graph threshold for the threshold phase");
  bench->add_option("--out", c.out, "Output timing report (JSON)");
  add_entanglement_flags(bench, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }
  for (const auto* sub : app.get_subcommands()) c.subcommand = sub->get_name();

  try {
    run(c, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nRun with --help for options.\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace clare::cli
