#include "clare/entanglement.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "clare/error.hpp"

namespace clare {

void EntanglementConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1e-4)) {
    throw InvalidArgument("epsilon must lie in (0, 1e-4], got " + std::to_string(epsilon));
  }
  if (block_size < 1) throw InvalidArgument("block_size must be >= 1");
}

unsigned EntanglementConfig::resolved_threads() const {
  if (threads != 0) return threads;
  return std::max(1U, std::thread::hardware_concurrency());
}

namespace {

// Both the scalar and the tiled path must go through these exact operations
// in this exact order; that is what makes them agree bit-for-bit.
template <typename Acc>
Acc dot(std::span<const float> a, std::span<const float> b) {
  Acc s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<Acc>(a[k]) * static_cast<Acc>(b[k]);
  return s;
}

template <typename Acc>
double squared_norm(std::span<const float> a) {
  return static_cast<double>(dot<Acc>(a, a));
}

// sqrt(|a|^2 |b|^2) rather than |a| |b|: for b = a (or b a power-of-two
// multiple of a) the denominator then equals the dot product exactly and the
// score is exactly 1.
double finish(double dot, double sq_a, double sq_b, double eps) {
  const double s = (dot + eps) / (std::sqrt(sq_a * sq_b) + eps);
  return std::clamp(s, std::nextafter(-1.0, 0.0), 1.0);
}

double checked_squared_norm(std::span<const float> v, bool wide, const char* which) {
  const double n = wide ? squared_norm<double>(v) : squared_norm<float>(v);
  if (!std::isfinite(n)) throw InvalidArgument(std::string(which) + " has non-finite values");
  if (!(n > 0.0)) throw InvalidArgument(std::string(which) + " has zero norm");
  return n;
}

double cosine_kernel(std::span<const float> a, std::span<const float> b,
                     const EntanglementConfig& cfg) {
  cfg.validate();
  if (a.size() != b.size()) {
    throw InvalidArgument("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  if (a.empty()) throw InvalidArgument("empty vectors");
  const double na = checked_squared_norm(a, cfg.accumulate_wide, "first vector");
  const double nb = checked_squared_norm(b, cfg.accumulate_wide, "second vector");
  const double d = cfg.accumulate_wide ? dot<double>(a, b) : static_cast<double>(dot<float>(a, b));
  return finish(d, na, nb, cfg.epsilon);
}

// Computes dot products for rows [i0, i1) against columns [j0, j1) into
// `band` (row-major, stride n, row index relative to i0). The column block is
// transposed once so the innermost loop runs over columns; each accumulator
// still sums its own pair strictly in k order.
template <typename Acc>
void tile_dots(const VecStore& store, std::size_t i0, std::size_t i1, std::size_t j0,
               std::size_t j1, std::vector<Acc>& transposed, double* band) {
  const std::size_t n = store.size();
  const std::size_t d = store.dim();
  const std::size_t w = j1 - j0;
  transposed.resize(d * w);
  for (std::size_t j = 0; j < w; ++j) {
    const auto col = store.row(j0 + j);
    for (std::size_t k = 0; k < d; ++k) transposed[k * w + j] = static_cast<Acc>(col[k]);
  }

  constexpr std::size_t kRows = 4;
  std::vector<Acc> acc(kRows * w);
  for (std::size_t i = i0; i < i1; i += kRows) {
    const std::size_t rows = std::min(kRows, i1 - i);
    std::fill(acc.begin(), acc.end(), Acc{0});
    const float* r[kRows];
    for (std::size_t t = 0; t < kRows; ++t) r[t] = store.row(i + std::min(t, rows - 1)).data();
    Acc* acc0 = acc.data();
    Acc* acc1 = acc0 + w;
    Acc* acc2 = acc1 + w;
    Acc* acc3 = acc2 + w;
    for (std::size_t k = 0; k < d; ++k) {
      const Acc a0 = static_cast<Acc>(r[0][k]);
      const Acc a1 = static_cast<Acc>(r[1][k]);
      const Acc a2 = static_cast<Acc>(r[2][k]);
      const Acc a3 = static_cast<Acc>(r[3][k]);
      const Acc* t = transposed.data() + k * w;
      for (std::size_t j = 0; j < w; ++j) {
        acc0[j] += a0 * t[j];
        acc1[j] += a1 * t[j];
        acc2[j] += a2 * t[j];
        acc3[j] += a3 * t[j];
      }
    }
    for (std::size_t t = 0; t < rows; ++t) {
      double* out = band + (i + t - i0) * n + j0;
      for (std::size_t j = 0; j < w; ++j) out[j] = static_cast<double>(acc[t * w + j]);
    }
  }
}

template <typename Acc>
void pairwise_impl(const VecStore& store, const EntanglementConfig& cfg, const ScoreRowSink& sink) {
  const std::size_t n = store.size();
  const std::size_t bs = cfg.block_size;
  const unsigned threads = cfg.resolved_threads();

  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = squared_norm<Acc>(store.row(i));

  std::vector<double> band(std::min(bs, n) * n);
  std::vector<std::vector<Acc>> scratch(threads);

  for (std::size_t i0 = 0; i0 < n; i0 += bs) {
    const std::size_t i1 = std::min(i0 + bs, n);
    // Column tiles start at the band's own diagonal block.
    const std::size_t tiles = (n - i0 + bs - 1) / bs;
    const auto run = [&](unsigned worker) {
      for (std::size_t t = worker; t < tiles; t += threads) {
        const std::size_t j0 = i0 + t * bs;
        tile_dots<Acc>(store, i0, i1, j0, std::min(j0 + bs, n), scratch[worker], band.data());
      }
    };
    if (threads == 1 || tiles == 1) {
      run(0);
    } else {
      std::vector<std::jthread> pool;
      pool.reserve(threads - 1);
      for (unsigned w = 1; w < threads; ++w) pool.emplace_back(run, w);
      run(0);
    }
    for (std::size_t i = i0; i < i1; ++i) {
      double* row = band.data() + (i - i0) * n;
      for (std::size_t j = i + 1; j < n; ++j) {
        row[j] = finish(row[j], norms[i], norms[j], cfg.epsilon);
      }
      sink(i, std::span<const double>(row + i + 1, n - i - 1));
    }
  }
}

}  // namespace

double clare_score(std::span<const float> a, std::span<const float> b,
                   const EntanglementConfig& cfg) {
  return cosine_kernel(a, b, cfg);
}

double gradsim_score(std::span<const float> a, std::span<const float> b,
                     const EntanglementConfig& cfg) {
  return cosine_kernel(a, b, cfg);
}

void pairwise_entanglement(const VecStore& store, const EntanglementConfig& cfg,
                           const ScoreRowSink& sink) {
  cfg.validate();
  if (store.empty()) throw InvalidArgument("pairwise_entanglement: empty store");
  if (cfg.accumulate_wide) {
    pairwise_impl<double>(store, cfg, sink);
  } else {
    pairwise_impl<float>(store, cfg, sink);
  }
}

std::vector<std::vector<Neighbor>> top_k_neighbors(const VecStore& store, std::size_t k,
                                                   double min_score,
                                                   const EntanglementConfig& cfg) {
  if (k < 1) throw InvalidArgument("top_k_neighbors: k must be >= 1");
  std::vector<std::vector<Neighbor>> heaps(store.size());
  // Heap top is the worst retained neighbor.
  const auto offer = [&](std::size_t owner, Neighbor cand) {
    auto& h = heaps[owner];
    if (h.size() < k) {
      h.push_back(cand);
      std::push_heap(h.begin(), h.end(), ranks_before);
    } else if (ranks_before(cand, h.front())) {
      std::pop_heap(h.begin(), h.end(), ranks_before);
      h.back() = cand;
      std::push_heap(h.begin(), h.end(), ranks_before);
    }
  };
  pairwise_entanglement(store, cfg, [&](std::size_t i, std::span<const double> row) {
    for (std::size_t t = 0; t < row.size(); ++t) {
      if (row[t] < min_score) continue;
      const std::size_t j = i + 1 + t;
      offer(i, {store.id(j), row[t]});
      offer(j, {store.id(i), row[t]});
    }
  });
  for (auto& h : heaps) std::sort(h.begin(), h.end(), ranks_before);
  return heaps;
}

int approximate_critical_layer(int num_layers) {
  if (num_layers < 3) {
    throw InvalidArgument("approximate_critical_layer: need at least 3 layers, got " +
                          std::to_string(num_layers));
  }
  return static_cast<int>(std::lround(static_cast<double>(num_layers) / 3.0));
}

}  // namespace clare
