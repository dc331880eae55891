#include <algorithm>
#include <cmath>
#include <set>

#include "clare/correlation.hpp"
#include "clare/error.hpp"
#include "clare/ripple.hpp"
#include "clare/spearman.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace clare;
using clare::test::TempDir;

TEST_CASE("l2_logit_shift") {
  const std::vector<double> z{0, 0}, p{3, 4};
  CHECK(l2_logit_shift(z, z) == 0.0);
  CHECK(l2_logit_shift(z, p) == 5.0);
  CHECK(l2_logit_shift(p, z) == 5.0);

  const std::vector<float> zf{0, 0}, pf{3, 4};
  CHECK(l2_logit_shift(zf, pf) == 5.0);

  CHECK_THROWS_AS((void)l2_logit_shift(std::vector<double>{1}, p), InvalidArgument);
  CHECK_THROWS_AS((void)l2_logit_shift(std::vector<double>{}, std::vector<double>{}), InvalidArgument);
  CHECK_THROWS_AS((void)l2_logit_shift(std::vector<double>{NAN, 0}, p), InvalidArgument);
}

TEST_CASE("l2_logit_shift matches a wide oracle at vocabulary size") {
  test::Gaussian g(50);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> a(50000), b(50000);
    long double sq = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      a[k] = 10 * g();
      b[k] = a[k] + g();
      const long double d = static_cast<long double>(b[k]) - a[k];
      sq += d * d;
    }
    const double ref = static_cast<double>(std::sqrt(sq));
    CHECK(std::abs(l2_logit_shift(a, b) - ref) <= 1e-4 * ref);
  }
}

TEST_CASE("l2_logit_shift is a metric on random triples") {
  test::Gaussian g(9);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> x(16), y(16), z(16);
    for (std::size_t k = 0; k < 16; ++k) {
      x[k] = g();
      y[k] = g();
      z[k] = g();
    }
    CHECK(l2_logit_shift(x, z) <= l2_logit_shift(x, y) + l2_logit_shift(y, z) + 1e-12);
    CHECK(l2_logit_shift(x, y) == l2_logit_shift(y, x));
  }
}

TEST_CASE("log_prob_shift") {
  CHECK(log_prob_shift(-2.0, -2.0) == 0.0);
  CHECK(log_prob_shift(-1.0, -3.5) == 2.5);
  CHECK(log_prob_shift(-0.105, -4.605) == doctest::Approx(4.5).epsilon(1e-12));
  CHECK(log_prob_shift(0.0, -1.0) == 1.0);
  CHECK_THROWS_AS((void)log_prob_shift(0.1, -1.0), InvalidArgument);
  CHECK_THROWS_AS((void)log_prob_shift(-1.0, -INFINITY), InvalidArgument);
  CHECK_THROWS_AS((void)log_prob_shift(NAN, -1.0), InvalidArgument);
}

TEST_CASE("validate_ripple") {
  RippleRecord r{1, 2, 0.5, 0.1, "ROME", "gpt-j"};
  CHECK_NOTHROW(validate_ripple(r));
  auto same = r;
  same.control_fact_id = 1;
  CHECK_THROWS_AS(validate_ripple(same), InvalidArgument);
  auto neg = r;
  neg.l2_shift = -0.1;
  CHECK_THROWS_AS(validate_ripple(neg), InvalidArgument);
  auto nan = r;
  nan.dlogp = NAN;
  CHECK_THROWS_AS(validate_ripple(nan), InvalidArgument);
}

TEST_CASE("ripple file round trip and errors") {
  TempDir dir;
  const std::vector<RippleRecord> rs{{1, 2, 0.5, 0.25, "MEMIT", "gpt2-xl"}, {3, 1, 1e-17, 12.75, "ROME", ""}};
  write_ripples(rs, dir / "r.jsonl");
  CHECK(load_ripples(dir / "r.jsonl") == rs);

  test::write_file(dir / "bad.jsonl", R"({"edit_fact_id":1,"control_fact_id":2,"l2_shift":0.5,"dlogp":0.1})"
                                      "\n"
                                      R"({"edit_fact_id":-4,"control_fact_id":2,"l2_shift":0.5,"dlogp":0.1})"
                                      "\n");
  CHECK_THROWS_WITH_AS((void)load_ripples(dir / "bad.jsonl"), doctest::Contains("bad.jsonl:2:"), FormatError);
  test::write_file(dir / "neg.jsonl", R"({"edit_fact_id":1,"control_fact_id":2,"l2_shift":-0.5,"dlogp":0.1})");
  CHECK_THROWS_AS((void)load_ripples(dir / "neg.jsonl"), FormatError);
  CHECK_THROWS_AS((void)load_ripples(dir / "missing.jsonl"), IoError);
}

TEST_CASE("sample_edit_control_pairs") {
  std::vector<FactId> ids(30);
  for (FactId i = 0; i < 30; ++i) ids[i] = 100 + i;
  const auto a = sample_edit_control_pairs(ids, 200, 7);
  const auto b = sample_edit_control_pairs(ids, 200, 7);
  CHECK(a == b);
  CHECK(a.size() == 200);
  std::set<EditControlPair> distinct(a.begin(), a.end());
  CHECK(distinct.size() == 200);
  for (const auto& p : a) {
    CHECK(p.edit_fact_id != p.control_fact_id);
    CHECK(p.edit_fact_id >= 100);
    CHECK(p.control_fact_id < 130);
  }
  CHECK(sample_edit_control_pairs(ids, 200, 8) != a);
  CHECK(sample_edit_control_pairs(ids, 30 * 29, 1).size() == 30 * 29);
  CHECK_THROWS_AS((void)sample_edit_control_pairs(ids, 30 * 29 + 1, 1), InvalidArgument);
}

TEST_CASE("stratified_sample spreads draws across l2 strata") {
  std::vector<RippleRecord> cands;
  for (FactId i = 0; i < 1000; ++i) cands.push_back({i, i + 1, static_cast<double>(i), 0.0, "", ""});
  const auto s = stratified_sample(cands, 100, 10, 3);
  CHECK(s.size() == 100);
  std::vector<int> per_decile(10, 0);
  for (const auto& r : s) ++per_decile[static_cast<int>(r.l2_shift) / 100];
  for (const int c : per_decile) CHECK(c == 10);
  CHECK(stratified_sample(cands, 100, 10, 3) == s);
  CHECK(stratified_sample(cands, 1000, 1, 3).size() == 1000);
  CHECK_THROWS_AS((void)stratified_sample(cands, 1001, 1, 3), InvalidArgument);
  CHECK_THROWS_AS((void)stratified_sample(cands, 10, 0, 3), InvalidArgument);
}

// ---------------------------------------------------------------------------

TEST_CASE("average_ranks") {
  const std::vector<double> xs{10, 20, 20, 5, 20};
  CHECK(average_ranks(xs) == std::vector<double>{2, 4, 4, 1, 4});
}

TEST_CASE("spearman fixed cases") {
  const std::vector<double> a{1, 2, 3}, up{10, 20, 30}, down{3, 2, 1};
  CHECK(spearman(a, up) == 1.0);
  CHECK(spearman(a, down) == -1.0);

  const std::vector<double> x{1, 2, 2, 4}, y{1, 3, 2, 4};
  CHECK(std::abs(spearman(x, y) - static_cast<double>(oracle::spearman(x, y))) <= 1e-12);
  CHECK(spearman(x, y) == doctest::Approx(0.9486832980505138).epsilon(1e-12));
}

TEST_CASE("spearman errors") {
  const std::vector<double> a{1, 2, 3}, c{5, 5, 5};
  CHECK_THROWS_AS((void)spearman(a, c), UndefinedCorrelation);
  CHECK_THROWS_AS((void)spearman(c, a), UndefinedCorrelation);
  CHECK_THROWS_AS((void)spearman(a, std::vector<double>{1, 2}), InvalidArgument);
  CHECK_THROWS_AS((void)spearman(std::vector<double>{1}, std::vector<double>{1}), InvalidArgument);
  CHECK_THROWS_AS((void)spearman(a, std::vector<double>{1, NAN, 2}), InvalidArgument);
}

TEST_CASE("spearman agrees with the naive oracle on tied series") {
  test::Gaussian g(123);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + g.engine()() % 499;
    const int levels = 2 + static_cast<int>(g.engine()() % 20);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(g.engine()() % levels);
      y[i] = x[i] + static_cast<double>(g.engine()() % levels);
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) x[0] += 1;
    if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) y[0] += 1;
    const double rho = spearman(x, y);
    CHECK(std::abs(rho - static_cast<double>(oracle::spearman(x, y))) <= 1e-12);
    CHECK(rho == spearman(y, x));

    // A strictly increasing transform keeps the tie structure, so rho is unchanged exactly.
    std::vector<double> tx(n);
    std::transform(x.begin(), x.end(), tx.begin(), [](double v) { return std::exp(v / 4) + 3 * v; });
    CHECK(spearman(tx, y) == rho);
    CHECK(spearman(x, x) == 1.0);
  }
}

// ---------------------------------------------------------------------------

namespace {

std::vector<RippleRecord> ripples_from(const PairScores& scores, double (*f)(double)) {
  std::vector<RippleRecord> out;
  for (const auto& [pair, s] : scores) out.push_back({pair.edit_fact_id, pair.control_fact_id, f(s), f(s) / 2, "ROME", "gpt-j"});
  return out;
}

}  // namespace

TEST_CASE("correlate with a monotone ripple gives rho = 1") {
  PairScores scores;
  test::Gaussian g(1);
  for (FactId i = 0; i < 50; ++i) scores[{i, i + 100}] = g();
  const auto ripples = ripples_from(scores, [](double s) { return std::exp(s); });
  const auto r = correlate(scores, ripples);
  CHECK(r.n_pairs == 50);
  CHECK(r.rho_l2 == 1.0);
  CHECK(r.rho_dlogp == 1.0);
  CHECK(r.method_tag == "clare");
  CHECK(r.technique_tag == "ROME");
  CHECK(r.model_tag == "gpt-j");
}

TEST_CASE("correlate is invariant to ripple order and reports mixed tags") {
  PairScores scores;
  test::Gaussian g(2);
  std::vector<RippleRecord> ripples;
  for (FactId i = 0; i < 80; ++i) {
    scores[{i, i + 1}] = g();
    ripples.push_back({i, i + 1, std::abs(g()), std::abs(g()), i % 2 ? "ROME" : "MEMIT", "gpt-j"});
  }
  const auto a = correlate(scores, ripples, "gradsim");
  std::reverse(ripples.begin(), ripples.end());
  const auto b = correlate(scores, ripples, "gradsim");
  CHECK(a.rho_l2 == b.rho_l2);
  CHECK(a.rho_dlogp == b.rho_dlogp);
  CHECK(a.method_tag == "gradsim");
  CHECK(a.technique_tag == "mixed");
}

TEST_CASE("independent ripples give a small rho at fixed seed") {
  PairScores scores;
  std::vector<RippleRecord> ripples;
  test::Gaussian g(1000);
  for (FactId i = 0; i < 1000; ++i) {
    scores[{i, i + 5000}] = g();
    ripples.push_back({i, i + 5000, std::abs(g()), std::abs(g()), "", ""});
  }
  const auto r = correlate(scores, ripples);
  CHECK(std::abs(r.rho_l2) < 0.1);
  CHECK(std::abs(r.rho_dlogp) < 0.1);
}

TEST_CASE("correlate errors") {
  PairScores scores{{{1, 2}, 0.5}, {{1, 3}, 0.7}};
  std::vector<RippleRecord> ripples{{1, 2, 0.1, 0.1, "", ""}, {1, 4, 0.2, 0.2, "", ""}};
  CHECK_THROWS_WITH_AS((void)correlate(scores, ripples), doctest::Contains("(1, 4)"), InvalidArgument);
  CHECK_THROWS_AS((void)correlate(scores, std::span(ripples).first(1)), InvalidArgument);
  std::vector<RippleRecord> flat{{1, 2, 0.1, 0.3, "", ""}, {1, 3, 0.1, 0.4, "", ""}};
  CHECK_THROWS_AS((void)correlate(scores, flat), UndefinedCorrelation);
}

TEST_CASE("score_ripple_pairs uses the store and reports missing facts") {
  const auto store = test::random_store(10, 6, 4, 20);
  std::vector<RippleRecord> ripples{{20, 21, 1, 1, "", ""}, {22, 29, 2, 2, "", ""}};
  const auto scores = score_ripple_pairs(store, ripples);
  CHECK(scores.at({20, 21}) == clare_score(store.row(0), store.row(1)));
  CHECK(scores.at({22, 29}) == clare_score(store.row(2), store.row(9)));
  const auto grad = score_ripple_pairs(store, ripples, {}, ScoreMethod::gradsim);
  CHECK(grad.at({20, 21}) == gradsim_score(store.row(0), store.row(1)));

  ripples.push_back({20, 99, 1, 1, "", ""});
  CHECK_THROWS_WITH_AS((void)score_ripple_pairs(store, ripples), doctest::Contains("99"), InvalidArgument);
}

namespace {

/// Store whose pair scores against fact 0 follow `order`: fact k sits at
/// angle order[k] away from fact 0 in the plane.
VecStore fan_store(const std::vector<double>& angles, std::int32_t layer) {
  std::vector<FactVector> recs;
  for (std::size_t k = 0; k < angles.size(); ++k) {
    recs.push_back({k, {static_cast<float>(std::cos(angles[k])), static_cast<float>(std::sin(angles[k]))}});
  }
  return VecStore({.dim = 2, .layer = layer, .count = angles.size(), .model_tag = ""}, recs);
}

}  // namespace

TEST_CASE("layer_profile picks the layer that orders ripples") {
  const std::size_t n = 12;
  std::vector<double> ordered(n), shuffled(n);
  std::vector<RippleRecord> ripples;
  for (std::size_t k = 0; k < n; ++k) ordered[k] = 0.1 * static_cast<double>(k);
  const std::vector<std::size_t> perm{0, 7, 3, 11, 1, 9, 5, 2, 10, 4, 8, 6};
  for (std::size_t k = 0; k < n; ++k) shuffled[k] = ordered[perm[k]];
  // Larger angle from fact 0 = lower score = smaller ripple.
  for (std::size_t k = 1; k < n; ++k) ripples.push_back({0, k, static_cast<double>(n - k), 1.0 + k, "", ""});

  const auto a = fan_store(ordered, 5);
  const auto b = fan_store(shuffled, 9);
  const auto profile = layer_profile({{5, &a}, {9, &b}}, ripples);
  CHECK(profile.peak_layer == 5);
  CHECK(profile.peak_rho == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(profile.per_layer_rho.at(9) < 1.0);
  CHECK(profile.diff_from_peak(5) == 0.0);
  CHECK(profile.diff_from_peak(9) == doctest::Approx(100 * (profile.peak_rho - profile.per_layer_rho.at(9))));
  CHECK(profile.diff_from_peak(9) >= 0.0);

  CHECK_THROWS_AS((void)layer_profile({{5, &a}}, ripples), InvalidArgument);
  std::vector<RippleRecord> missing = ripples;
  missing.push_back({0, 40, 1, 1, "", ""});
  CHECK_THROWS_AS((void)layer_profile({{5, &a}, {9, &b}}, missing), InvalidArgument);
}

TEST_CASE("layer_profile equals correlate composed per layer") {
  const std::size_t n = 60;
  std::vector<RippleRecord> ripples;
  test::Gaussian g(77);
  std::vector<VecStore> stores;
  for (int layer = 0; layer < 5; ++layer) stores.push_back(test::random_store(n, 16, 900 + layer, 0, layer));
  for (FactId e = 0; e < 10; ++e)
    for (FactId c = 10; c < n; c += 3) ripples.push_back({e, c, std::abs(g()), std::abs(g()), "", ""});

  std::map<int, const VecStore*> by_layer;
  for (auto& s : stores) by_layer[s.header().layer] = &s;
  const auto profile = layer_profile(by_layer, ripples);
  double best = -2;
  for (const auto& [layer, store] : by_layer) {
    const double rho = correlate(score_ripple_pairs(*store, ripples), ripples).rho_l2;
    CHECK(profile.per_layer_rho.at(layer) == rho);
    best = std::max(best, rho);
  }
  CHECK(profile.peak_rho == best);
  CHECK(profile.per_layer_rho.at(profile.peak_layer) == best);
}
