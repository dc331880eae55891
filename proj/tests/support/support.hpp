#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "clare/corpus.hpp"
#include "clare/vecstore.hpp"

namespace clare::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "clare") {
    std::random_device rd;
    const auto base = std::filesystem::temp_directory_path();
    for (;;) {
      path_ = base / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
      if (std::filesystem::create_directory(path_)) break;
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Standard normal draws by Box-Muller, identical on every standard library.
class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::vector<float> gaussian_vector(Gaussian& g, std::size_t dim) {
  std::vector<float> v(dim);
  for (auto& x : v) x = static_cast<float>(g());
  return v;
}

/// Store of `n` standard-normal vectors with ids first_id, first_id+1, ...
inline VecStore random_store(std::size_t n, std::uint32_t dim, std::uint64_t seed, FactId first_id = 0,
                             std::int32_t layer = -1) {
  Gaussian g(seed);
  std::vector<FactVector> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) records.push_back({first_id + i, gaussian_vector(g, dim)});
  return VecStore({.dim = dim, .layer = layer, .count = n, .model_tag = "synthetic"}, records);
}

inline VecStore store_from_rows(const std::vector<std::vector<float>>& rows, std::vector<FactId> ids = {}) {
  if (ids.empty())
    for (std::size_t i = 0; i < rows.size(); ++i) ids.push_back(i);
  std::vector<FactVector> records;
  for (std::size_t i = 0; i < rows.size(); ++i) records.push_back({ids[i], rows[i]});
  const auto dim = rows.empty() ? 1u : static_cast<std::uint32_t>(rows.front().size());
  return VecStore({.dim = dim, .layer = -1, .count = rows.size(), .model_tag = ""}, records);
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline FactTriple make_fact(FactId id, const std::string& subject, const std::string& relation,
                            const std::string& object, const std::string& before = "",
                            const std::string& after = " is") {
  FactTriple f;
  f.id = id;
  f.subject = subject;
  f.relation = relation;
  f.object = object;
  f.prompt = before + subject + after;
  f.subject_span = {before.size(), before.size() + subject.size()};
  return f;
}

}  // namespace clare::test
