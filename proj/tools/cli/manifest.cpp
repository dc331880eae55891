#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

#include "clare/error.hpp"

namespace clare::cli {

FileDigest sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for hashing");

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest init failed");
  }
  FileDigest digest;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = in.gcount();
    if (got <= 0) break;
    if (EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got)) != 1) {
      throw Error("sha256: digest update failed");
    }
    digest.bytes += static_cast<std::uintmax_t>(got);
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) throw Error("sha256: digest final failed");

  static constexpr char kHex[] = "0123456789abcdef";
  digest.sha256.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    digest.sha256.push_back(kHex[md[i] >> 4]);
    digest.sha256.push_back(kHex[md[i] & 0xF]);
  }
  return digest;
}

void Manifest::add_input(std::string role, const std::filesystem::path& path) {
  const auto d = sha256_file(path);
  inputs_.push_back({{"role", std::move(role)}, {"path", path.string()}, {"sha256", d.sha256}, {"bytes", d.bytes}});
}

void Manifest::add_output(const std::filesystem::path& final_path, const std::filesystem::path& written) {
  const auto d = sha256_file(written);
  outputs_.push_back({{"path", final_path.string()}, {"sha256", d.sha256}, {"bytes", d.bytes}});
}

nlohmann::json Manifest::to_json() const {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return {{"tool", kToolName},     {"version", kToolVersion}, {"subcommand", subcommand_},
          {"config", config_},     {"inputs", inputs_},       {"outputs", outputs_},
          {"created_at", stamp}};
}

std::filesystem::path manifest_path_for(const std::filesystem::path& primary_output) {
  auto p = primary_output;
  p += ".manifest.json";
  return p;
}

}  // namespace clare::cli
