#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "clare/error.hpp"

namespace clare::cli {

/// Bad flag combination or value detected after parsing; exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string subcommand;

  std::filesystem::path corpus;
  std::filesystem::path vecstore;
  std::vector<std::filesystem::path> layer_vecstores;
  std::filesystem::path ripples;
  std::filesystem::path matrix;
  std::filesystem::path edges;
  std::filesystem::path out;
  std::filesystem::path doc;

  double threshold = 0.7;
  double epsilon = 1e-8;
  std::uint64_t seed = 42;
  std::size_t top_n = 10;
  std::size_t k = 0;  // 0: score writes the full matrix instead of neighbor lists
  double min_score = -1.0;
  double bin_width = 0.05;
  std::string mode = "neighbors";
  std::string method = "clare";
  std::size_t block_size = 64;
  std::optional<int> layer;
  std::optional<int> num_layers;
  std::optional<std::uint64_t> fact_id;
  std::size_t min_size = 50;
  bool weighted = false;
  bool narrow_accumulation = false;
  unsigned threads = 0;
};

/// Runs one subcommand. Human-readable summaries go to `console`; primary
/// outputs and the manifest are written atomically. Throws UsageError or
/// clare::Error.
void run(const RunConfig& config, std::ostream& console);

/// Full command-line entry point: parses argv, runs, maps failures to exit
/// status (0 ok, 1 module error, 2 usage error).
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace clare::cli
