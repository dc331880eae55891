#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace clare::cli {

inline constexpr const char* kToolName = "clare";
inline constexpr const char* kToolVersion = "0.1.0";

struct FileDigest {
  std::string sha256;
  std::uintmax_t bytes = 0;
};

/// SHA-256 of a file's content, lowercase hex.
FileDigest sha256_file(const std::filesystem::path& path);

/// Provenance record written beside every primary output. Only `created_at`
/// varies between identical invocations.
class Manifest {
 public:
  explicit Manifest(std::string subcommand) : subcommand_(std::move(subcommand)) {}

  void set_config(nlohmann::json config) { config_ = std::move(config); }
  void add_input(std::string role, const std::filesystem::path& path);
  void add_output(const std::filesystem::path& final_path, const std::filesystem::path& written);

  [[nodiscard]] nlohmann::json to_json() const;

 private:
  std::string subcommand_;
  nlohmann::json config_ = nlohmann::json::object();
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json outputs_ = nlohmann::json::array();
};

std::filesystem::path manifest_path_for(const std::filesystem::path& primary_output);

}  // namespace clare::cli
