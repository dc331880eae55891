#include <cmath>
#include <sstream>

#include "clare/corpus.hpp"
#include "clare/entanglement.hpp"
#include "clare/ripple.hpp"
#include "clare/vecstore.hpp"
#include "commands.hpp"
#include "doctest.h"
#include "json.hpp"
#include "manifest.hpp"
#include "support.hpp"

using namespace clare;
using clare::test::TempDir;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"clare"};
  for (const auto& s : args) argv.push_back(s.c_str());
  std::ostringstream out, err;
  const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

json read_json(const std::filesystem::path& p) { return json::parse(test::read_file(p)); }

/// Runs a subcommand twice into <name>.1 and <name>.2, checks the primary
/// outputs are byte-identical and the manifests differ only in the output
/// path and timestamp, and returns the first output path.
std::filesystem::path run_twice(const TempDir& dir, const std::string& name, const std::vector<std::string>& args) {
  std::vector<std::filesystem::path> outs{dir / (name + ".1"), dir / (name + ".2")};
  for (const auto& p : outs) {
    auto full = args;
    full.push_back("--out");
    full.push_back(p.string());
    const auto r = run_cli(full);
    INFO(name, ": ", r.err);
    REQUIRE(r.code == 0);
  }
  CHECK(test::read_file(outs[0]) == test::read_file(outs[1]));
  auto m1 = read_json(cli::manifest_path_for(outs[0]));
  auto m2 = read_json(cli::manifest_path_for(outs[1]));
  for (auto* m : {&m1, &m2}) {
    m->erase("created_at");
    (*m)["config"].erase("out");
    (*m)["outputs"][0].erase("path");
  }
  CHECK(m1 == m2);
  return outs[0];
}

/// 24 facts over 4 subjects; vectors cluster by subject (two tight groups of
/// two subjects each).
struct Fixture {
  TempDir dir{"clare-cli"};
  std::filesystem::path corpus = dir / "corpus.jsonl";
  std::filesystem::path store = dir / "store.vec";
  std::filesystem::path ripples = dir / "ripples.jsonl";

  Fixture() {
    const std::vector<std::string> subjects{"Ann", "Ben", "Cat", "Dan"};
    std::vector<FactTriple> facts;
    std::vector<FactVector> vecs;
    test::Gaussian g(12);
    for (FactId i = 0; i < 24; ++i) {
      const auto& s = subjects[i % 4];
      facts.push_back(test::make_fact(100 + i, s, "rel" + std::to_string(i % 3), "obj" + std::to_string(i),
                                      i % 2 ? "Where does " : "", i % 2 ? " live?" : " works for"));
      std::vector<float> v(8, 0.0f);
      v[(i % 4) / 2] = 5.0f;
      for (auto& x : v) x += static_cast<float>(0.3 * g());
      vecs.push_back({100 + i, v});
    }
    write_corpus(Corpus(facts), corpus);
    write_vecstore({.dim = 8, .layer = 3, .count = 24, .model_tag = "toy"}, vecs, store);

    const auto st = read_vecstore(store);
    std::vector<RippleRecord> rs;
    for (FactId e = 100; e < 104; ++e)
      for (FactId c = 104; c < 124; ++c) {
        const double s = clare_score(st.row(st.find(e)), st.row(st.find(c)));
        rs.push_back({e, c, std::exp(s), 2 * s + 3, "ROME", "toy"});
      }
    write_ripples(rs, ripples);
  }
};

}  // namespace

TEST_CASE("sha256 of a known string") {
  TempDir dir;
  test::write_file(dir / "abc", "abc");
  const auto d = cli::sha256_file(dir / "abc");
  CHECK(d.sha256 == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(d.bytes == 3);
}

TEST_CASE("exit codes") {
  CHECK(run_cli({"--help"}).code == 0);
  CHECK(run_cli({"--version"}).code == 0);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"stats", "--no-such-flag"}).code == 2);
  CHECK(run_cli({"stats"}).code == 2);
  CHECK(run_cli({"score", "--vecstore", "x", "--out", "y", "--epsilon", "1"}).code == 2);
  CHECK(run_cli({"stats", "--corpus", "/nonexistent/c.jsonl", "--out", "/tmp/never.json"}).code == 1);
}

TEST_CASE("help prints defaults") {
  const auto r = run_cli({"cluster", "--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("[0.7]") != std::string::npos);
  CHECK(r.out.find("[42]") != std::string::npos);
  CHECK(r.out.find("[50]") != std::string::npos);
  const auto h = run_cli({"histogram", "--help"});
  CHECK(h.out.find("[0.05]") != std::string::npos);
}

TEST_CASE("stats report and manifest") {
  Fixture fx;
  const auto out = fx.dir / "stats.json";
  const auto r = run_cli({"stats", "--corpus", fx.corpus.string(), "--out", out.string()});
  REQUIRE(r.code == 0);
  const auto doc = read_json(out);
  CHECK(doc["fact_count"] == 24);
  CHECK(doc["unique_subjects"] == 4);
  CHECK(doc["unique_prompt_formats"] == 2);
  CHECK(doc["subjects_by_fact_count"][0]["facts"] == 6);

  const auto m = read_json(cli::manifest_path_for(out));
  CHECK(m["tool"] == "clare");
  CHECK(m["subcommand"] == "stats");
  CHECK(m["inputs"][0]["sha256"] == cli::sha256_file(fx.corpus).sha256);
  CHECK(m["outputs"][0]["sha256"] == cli::sha256_file(out).sha256);
  CHECK(m["config"]["corpus"] == fx.corpus.string());
  CHECK(m.contains("created_at"));
}

TEST_CASE("pipeline subcommands are byte-stable and correct") {
  Fixture fx;
  const auto& d = fx.dir;
  const std::string store = fx.store.string(), corpus = fx.corpus.string(), ripples = fx.ripples.string();

  const auto matrix = run_twice(d, "score", {"score", "--vecstore", store});
  CHECK(std::filesystem::file_size(matrix) == 14 + 12 * 276);

  const auto nbrs = read_json(run_twice(d, "topk", {"score", "--vecstore", store, "--top-k", "3"}));
  CHECK(nbrs["facts"].size() == 24);
  CHECK(nbrs["facts"][0]["neighbors"].size() == 3);

  const auto edges = run_twice(d, "graph", {"graph", "--matrix", matrix.string(), "--vecstore", store});
  const auto edges_direct = run_twice(d, "graphv", {"graph", "--vecstore", store, "--corpus", corpus,
                                                    "--doc", (d / "doc.json").string()});
  const auto doc = read_json(d / "doc.json");
  CHECK(doc["nodes"].size() == 24);
  CHECK(doc["nodes"][0]["subject"] == "Ann");
  // Fixture groups are far apart, so float sidecar scores cannot flip any edge.
  std::istringstream a(test::read_file(edges)), b(test::read_file(edges_direct));
  std::string la, lb;
  std::size_t lines = 0;
  while (std::getline(a, la) && std::getline(b, lb)) {
    std::istringstream sa(la), sb(lb);
    FactId ia, ja, ib, jb;
    sa >> ia >> ja;
    sb >> ib >> jb;
    CHECK(ia == ib);
    CHECK(ja == jb);
    ++lines;
  }
  CHECK(lines > 0);

  const auto hubs = read_json(run_twice(d, "hubs", {"hubs", "--edges", edges.string(), "--corpus", corpus, "--top-n", "5"}));
  CHECK(hubs["hubs"].size() == 5);
  CHECK(hubs["hubs"][0]["rank"] == 1);
  CHECK(hubs["hubs"][0]["degree"] >= hubs["hubs"][4]["degree"]);
  CHECK(hubs["hubs"][0]["text"].get<std::string>().find("(affects ") != std::string::npos);

  const auto clusters =
      read_json(run_twice(d, "cluster", {"cluster", "--vecstore", store, "--corpus", corpus, "--min-size", "5"}));
  CHECK(clusters["seed"] == 42);
  CHECK(clusters["clusters"].size() == 2);
  CHECK(clusters["clusters"][0]["size"] == 12);
  CHECK(clusters["clusters"][0]["unique_subjects"] == 2);

  const auto rep = read_json(run_twice(d, "corr", {"correlate", "--vecstore", store, "--ripples", ripples}));
  CHECK(rep["n_pairs"] == 80);
  CHECK(rep["rho_l2"] == 1.0);
  CHECK(rep["rho_dlogp"] == 1.0);
  CHECK(rep["technique_tag"] == "ROME");
  const auto grad = read_json(
      run_twice(d, "grad", {"correlate", "--vecstore", store, "--ripples", ripples, "--method", "gradsim"}));
  CHECK(grad["method_tag"] == "gradsim");

  const auto hist = read_json(run_twice(d, "hist", {"histogram", "--matrix", matrix.string()}));
  CHECK(hist["total"] == 276);
  CHECK(hist["bins"].size() == 40);
  const auto hist_v = read_json(run_twice(d, "histv", {"histogram", "--vecstore", store, "--bin-width", "0.5"}));
  CHECK(hist_v["bins"].size() == 4);
  CHECK(hist_v["total"] == 276);

  const auto keep = read_json(
      run_twice(d, "keep", {"preserve", "--vecstore", store, "--fact-id", "100", "--mode", "cluster"}));
  CHECK(keep["facts"].size() == 11);
  for (const auto& f : keep["facts"]) CHECK(f != 100);

  // Timings differ run to run, so bench is checked once rather than for byte stability.
  REQUIRE(run_cli({"bench", "--vecstore", store, "--out", (d / "bench.json").string()}).code == 0);
  const auto bench = read_json(d / "bench.json");
  CHECK(bench["pairs"] == 276);
  CHECK(bench["representation_bytes"] == 24 * 4 * 8);
  CHECK(bench["seconds"].contains("pairwise"));
}

TEST_CASE("bench accounting") {
  TempDir dir;
  write_vecstore(test::random_store(2, 1600, 1), dir / "two.vec");
  write_vecstore(test::random_store(1, 1600, 1), dir / "one.vec");
  const auto r2 = run_cli({"bench", "--vecstore", (dir / "two.vec").string(), "--out", (dir / "b2.json").string()});
  REQUIRE(r2.code == 0);
  CHECK(read_json(dir / "b2.json")["pairs"] == 1);
  REQUIRE(run_cli({"bench", "--vecstore", (dir / "one.vec").string(), "--out", (dir / "b1.json").string()}).code == 0);
  const auto b1 = read_json(dir / "b1.json");
  CHECK(b1["representation_bytes"] == 6400);
  CHECK(b1["representation_bytes_per_fact"] == 6400);
  CHECK(b1["pairs"] == 0);
}

TEST_CASE("graph of orthogonal vectors is an empty edge file") {
  TempDir dir;
  write_vecstore(test::store_from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}), dir / "o.vec");
  REQUIRE(run_cli({"graph", "--vecstore", (dir / "o.vec").string(), "--out", (dir / "e.txt").string()}).code == 0);
  CHECK(test::read_file(dir / "e.txt").empty());
}

TEST_CASE("layer-profile") {
  Fixture fx;
  const auto& d = fx.dir;
  // Layer 3 is the fixture store; layer 7 carries unrelated random vectors.
  std::vector<FactId> ids;
  for (FactId i = 100; i < 124; ++i) ids.push_back(i);
  const auto noise = test::random_store(24, 8, 5, 100, 7);
  write_vecstore(noise, d / "l7.vec");
  const auto out = run_twice(d, "profile",
                             {"layer-profile", "--vecstore", fx.store.string(), "--vecstore", (d / "l7.vec").string(),
                              "--ripples", fx.ripples.string(), "--num-layers", "9"});
  const auto doc = read_json(out);
  CHECK(doc["peak_layer"] == 3);
  CHECK(doc["query_layer"] == 3);
  CHECK(doc["query_diff_from_peak_pp"] == 0.0);
  CHECK(doc["per_layer"].size() == 2);

  const auto dup = run_cli({"layer-profile", "--vecstore", fx.store.string(), "--vecstore", fx.store.string(),
                            "--ripples", fx.ripples.string(), "--out", (d / "dup.json").string()});
  CHECK(dup.code == 1);
  CHECK(run_cli({"layer-profile", "--vecstore", fx.store.string(), "--ripples", fx.ripples.string(), "--out",
                 (d / "one.json").string()})
            .code == 2);
  CHECK(run_cli({"layer-profile", "--vecstore", fx.store.string(), "--vecstore", (d / "l7.vec").string(),
                 "--ripples", fx.ripples.string(), "--num-layers", "2", "--out", (d / "q.json").string()})
            .code == 2);
}

TEST_CASE("failures leave no primary output behind") {
  Fixture fx;
  const auto& d = fx.dir;
  auto bytes = test::read_file(fx.store);
  test::write_file(d / "trunc.vec", bytes.substr(0, bytes.size() - 7));

  const auto check_clean = [&](const std::filesystem::path& out) {
    CHECK_FALSE(std::filesystem::exists(out));
    CHECK_FALSE(std::filesystem::exists(out.string() + ".partial"));
    CHECK_FALSE(std::filesystem::exists(cli::manifest_path_for(out)));
  };
  const auto out = d / "m.clsm";
  CHECK(run_cli({"score", "--vecstore", (d / "trunc.vec").string(), "--out", out.string()}).code == 1);
  check_clean(out);

  // Missing fact in the ripple file fails after the store is loaded.
  test::write_file(d / "bad.jsonl", R"({"edit_fact_id":100,"control_fact_id":999,"l2_shift":1,"dlogp":1})" "\n"
                                     R"({"edit_fact_id":100,"control_fact_id":101,"l2_shift":2,"dlogp":1})" "\n");
  const auto rep = d / "rep.json";
  const auto r = run_cli({"correlate", "--vecstore", fx.store.string(), "--ripples", (d / "bad.jsonl").string(),
                          "--out", rep.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("999") != std::string::npos);
  check_clean(rep);

  const auto doc = d / "doc.json";
  const auto edges = d / "edges.txt";
  CHECK(run_cli({"graph", "--vecstore", fx.store.string(), "--threshold", "2", "--out", edges.string(), "--doc",
                 doc.string()})
            .code == 2);
  check_clean(edges);
  check_clean(doc);

  CHECK(run_cli({"preserve", "--vecstore", fx.store.string(), "--fact-id", "5", "--out", (d / "p.json").string()})
            .code == 1);
  check_clean(d / "p.json");
  CHECK(run_cli({"preserve", "--vecstore", fx.store.string(), "--fact-id", "100", "--mode", "nope", "--out",
                 (d / "p.json").string()})
            .code == 2);
}
