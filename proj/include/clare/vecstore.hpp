#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "clare/corpus.hpp"

namespace clare {

// Vecstore layout (all integers little-endian, no padding):
//
//   0   magic "CLRE"
//   4   format_version u16 (= 1)
//   6   dim u32
//   10  layer i32 (-1 = unknown)
//   14  count u64
//   22  model_tag length u16
//   24  model_tag bytes
//   ..  count x { fact_id u64, dim x f32 }

inline constexpr std::array<char, 4> kVecStoreMagic{'C', 'L', 'R', 'E'};
inline constexpr std::uint16_t kVecStoreVersion = 1;
inline constexpr std::size_t kVecStoreFixedHeaderBytes = 24;

struct VecStoreHeader {
  std::uint32_t dim = 0;
  std::int32_t layer = -1;
  std::uint64_t count = 0;
  std::string model_tag;

  bool operator==(const VecStoreHeader&) const = default;

  [[nodiscard]] std::size_t header_bytes() const noexcept {
    return kVecStoreFixedHeaderBytes + model_tag.size();
  }
  /// Bytes of hidden-state payload per fact (4 * dim), excluding the id.
  [[nodiscard]] std::size_t payload_bytes() const noexcept { return 4 * std::size_t{dim}; }
  [[nodiscard]] std::size_t record_bytes() const noexcept { return 8 + payload_bytes(); }
  [[nodiscard]] std::uint64_t file_bytes() const noexcept {
    return header_bytes() + count * record_bytes();
  }
};

struct FactVector {
  FactId fact_id = 0;
  std::vector<float> values;

  bool operator==(const FactVector&) const = default;
};

/// Throws InvalidArgument if any value is non-finite or the norm is zero.
void validate_vector(FactId id, std::span<const float> values);

/// Owns a fully loaded store: ids plus one contiguous row-major value block.
class VecStore {
 public:
  VecStore() = default;
  VecStore(VecStoreHeader header, std::vector<FactId> ids, std::vector<float> values);
  /// Builds an in-memory store; header.count is set from `records`.
  VecStore(VecStoreHeader header, std::span<const FactVector> records);

  [[nodiscard]] const VecStoreHeader& header() const noexcept { return header_; }
  [[nodiscard]] std::size_t size() const noexcept { return ids_.size(); }
  [[nodiscard]] bool empty() const noexcept { return ids_.empty(); }
  [[nodiscard]] std::size_t dim() const noexcept { return header_.dim; }
  [[nodiscard]] const std::vector<FactId>& ids() const noexcept { return ids_; }
  [[nodiscard]] FactId id(std::size_t i) const { return ids_[i]; }
  [[nodiscard]] std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dim(), dim()};
  }
  [[nodiscard]] std::span<const float> values() const noexcept { return values_; }
  [[nodiscard]] FactVector record(std::size_t i) const;
  [[nodiscard]] std::vector<FactVector> records() const;

  /// Position of `id` in the store, or size() if absent.
  [[nodiscard]] std::size_t find(FactId id) const;

 private:
  void validate() const;
  void build_index();

  VecStoreHeader header_;
  std::vector<FactId> ids_;
  std::vector<float> values_;
  std::vector<std::pair<FactId, std::size_t>> sorted_index_;
};

/// Streaming writer. Records are validated as they arrive; close() checks
/// that exactly header.count records were written. A writer destroyed
/// without a successful close() leaves whatever bytes it flushed.
class VecStoreWriter {
 public:
  VecStoreWriter(const std::filesystem::path& path, VecStoreHeader header);
  VecStoreWriter(const VecStoreWriter&) = delete;
  VecStoreWriter& operator=(const VecStoreWriter&) = delete;

  void write(FactId fact_id, std::span<const float> values);
  void write(const FactVector& record) { write(record.fact_id, record.values); }
  void close();

 private:
  std::filesystem::path path_;
  VecStoreHeader header_;
  std::ofstream out_;
  std::uint64_t written_ = 0;
  std::vector<char> buffer_;
};

/// Streaming reader. The constructor checks magic, version, dim and that the
/// file is exactly as long as the header implies.
class VecStoreReader {
 public:
  explicit VecStoreReader(const std::filesystem::path& path);

  [[nodiscard]] const VecStoreHeader& header() const noexcept { return header_; }
  [[nodiscard]] std::uint64_t remaining() const noexcept { return header_.count - read_; }

  /// Reads the next record into `out`; false once all records are consumed.
  bool next(FactVector& out);

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  VecStoreHeader header_;
  std::uint64_t read_ = 0;
  std::vector<char> buffer_;
};

void write_vecstore(const VecStoreHeader& header, std::span<const FactVector> records,
                    const std::filesystem::path& path);
void write_vecstore(const VecStore& store, const std::filesystem::path& path);

/// Loads a whole store; additionally rejects duplicate fact ids.
VecStore read_vecstore(const std::filesystem::path& path);

}  // namespace clare
