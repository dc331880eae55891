#include "clare/vecstore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "byte_io.hpp"
#include "clare/error.hpp"

namespace clare {

using detail::load_le;
using detail::store_le;

void validate_vector(FactId id, std::span<const float> values) {
  double sq = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) {
      throw InvalidArgument("fact " + std::to_string(id) + ": non-finite value at index " +
                            std::to_string(k));
    }
    sq += static_cast<double>(values[k]) * values[k];
  }
  if (!(sq > 0.0)) throw InvalidArgument("fact " + std::to_string(id) + ": zero-norm vector");
}

// ---------------------------------------------------------------------------
// VecStore

VecStore::VecStore(VecStoreHeader header, std::vector<FactId> ids, std::vector<float> values)
    : header_(std::move(header)), ids_(std::move(ids)), values_(std::move(values)) {
  header_.count = ids_.size();
  validate();
  build_index();
}

VecStore::VecStore(VecStoreHeader header, std::span<const FactVector> records)
    : header_(std::move(header)) {
  header_.count = records.size();
  ids_.reserve(records.size());
  values_.reserve(records.size() * header_.dim);
  for (const auto& r : records) {
    if (r.values.size() != header_.dim) {
      throw InvalidArgument("fact " + std::to_string(r.fact_id) + ": dimension " +
                            std::to_string(r.values.size()) + " != header dim " +
                            std::to_string(header_.dim));
    }
    ids_.push_back(r.fact_id);
    values_.insert(values_.end(), r.values.begin(), r.values.end());
  }
  validate();
  build_index();
}

void VecStore::validate() const {
  if (header_.dim == 0) throw InvalidArgument("vecstore dim must be >= 1");
  if (values_.size() != ids_.size() * header_.dim) {
    throw InvalidArgument("vecstore value block holds " + std::to_string(values_.size()) +
                          " floats, expected " + std::to_string(ids_.size() * header_.dim));
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) validate_vector(ids_[i], row(i));
}

void VecStore::build_index() {
  sorted_index_.resize(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) sorted_index_[i] = {ids_[i], i};
  std::sort(sorted_index_.begin(), sorted_index_.end());
  const auto dup = std::adjacent_find(sorted_index_.begin(), sorted_index_.end(),
                                      [](const auto& a, const auto& b) { return a.first == b.first; });
  if (dup != sorted_index_.end()) {
    throw InvalidArgument("duplicate fact id " + std::to_string(dup->first) + " in vecstore");
  }
}

std::size_t VecStore::find(FactId id) const {
  const auto it = std::lower_bound(sorted_index_.begin(), sorted_index_.end(),
                                   std::pair<FactId, std::size_t>{id, 0});
  return (it != sorted_index_.end() && it->first == id) ? it->second : size();
}

FactVector VecStore::record(std::size_t i) const {
  const auto r = row(i);
  return {ids_[i], {r.begin(), r.end()}};
}

std::vector<FactVector> VecStore::records() const {
  std::vector<FactVector> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(record(i));
  return out;
}

// ---------------------------------------------------------------------------
// Writer

VecStoreWriter::VecStoreWriter(const std::filesystem::path& path, VecStoreHeader header)
    : path_(path), header_(std::move(header)) {
  if (header_.dim == 0) throw InvalidArgument("vecstore dim must be >= 1");
  if (header_.model_tag.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw InvalidArgument("model_tag longer than 65535 bytes");
  }
  out_.open(path_, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot open " + path_.string() + " for writing");

  std::vector<char> head(header_.header_bytes());
  std::copy(kVecStoreMagic.begin(), kVecStoreMagic.end(), head.begin());
  store_le<std::uint16_t>(head.data() + 4, kVecStoreVersion);
  store_le<std::uint32_t>(head.data() + 6, header_.dim);
  store_le<std::int32_t>(head.data() + 10, header_.layer);
  store_le<std::uint64_t>(head.data() + 14, header_.count);
  store_le<std::uint16_t>(head.data() + 22, static_cast<std::uint16_t>(header_.model_tag.size()));
  std::copy(header_.model_tag.begin(), header_.model_tag.end(), head.begin() + 24);
  out_.write(head.data(), static_cast<std::streamsize>(head.size()));
  buffer_.resize(header_.record_bytes());
}

void VecStoreWriter::write(FactId fact_id, std::span<const float> values) {
  if (values.size() != header_.dim) {
    throw InvalidArgument("fact " + std::to_string(fact_id) + ": dimension " +
                          std::to_string(values.size()) + " != header dim " +
                          std::to_string(header_.dim));
  }
  if (written_ == header_.count) {
    throw InvalidArgument("more records than header count " + std::to_string(header_.count));
  }
  validate_vector(fact_id, values);
  store_le<std::uint64_t>(buffer_.data(), fact_id);
  for (std::size_t k = 0; k < values.size(); ++k) {
    store_le<float>(buffer_.data() + 8 + 4 * k, values[k]);
  }
  out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  ++written_;
}

void VecStoreWriter::close() {
  if (written_ != header_.count) {
    throw InvalidArgument("header count " + std::to_string(header_.count) + " but " +
                          std::to_string(written_) + " records written");
  }
  out_.close();
  if (!out_) throw IoError("short write to " + path_.string());
}

void write_vecstore(const VecStoreHeader& header, std::span<const FactVector> records,
                    const std::filesystem::path& path) {
  if (records.size() != header.count) {
    throw InvalidArgument("header count " + std::to_string(header.count) + " but " +
                          std::to_string(records.size()) + " records supplied");
  }
  VecStoreWriter writer(path, header);
  for (const auto& r : records) writer.write(r);
  writer.close();
}

void write_vecstore(const VecStore& store, const std::filesystem::path& path) {
  VecStoreWriter writer(path, store.header());
  for (std::size_t i = 0; i < store.size(); ++i) writer.write(store.id(i), store.row(i));
  writer.close();
}

// ---------------------------------------------------------------------------
// Reader

VecStoreReader::VecStoreReader(const std::filesystem::path& path) : path_(path) {
  in_.open(path_, std::ios::binary);
  if (!in_) throw IoError("cannot open vecstore " + path_.string());
  std::error_code ec;
  const auto actual = std::filesystem::file_size(path_, ec);
  if (ec) throw IoError("cannot stat " + path_.string() + ": " + ec.message());

  const auto truncated = [&](std::uint64_t expected) {
    return FormatError(path_.string() + ": truncated file: expected " + std::to_string(expected) +
                       " bytes, got " + std::to_string(actual));
  };
  if (actual < kVecStoreFixedHeaderBytes) throw truncated(kVecStoreFixedHeaderBytes);

  char head[kVecStoreFixedHeaderBytes];
  in_.read(head, sizeof head);
  if (!std::equal(kVecStoreMagic.begin(), kVecStoreMagic.end(), head)) {
    throw FormatError(path_.string() + ": bad magic (not a vecstore file)");
  }
  const auto version = load_le<std::uint16_t>(head + 4);
  if (version != kVecStoreVersion) {
    throw FormatError(path_.string() + ": unsupported format version " + std::to_string(version));
  }
  header_.dim = load_le<std::uint32_t>(head + 6);
  header_.layer = load_le<std::int32_t>(head + 10);
  header_.count = load_le<std::uint64_t>(head + 14);
  const auto tag_len = load_le<std::uint16_t>(head + 22);
  if (header_.dim == 0) throw FormatError(path_.string() + ": dim is 0");
  if (actual < kVecStoreFixedHeaderBytes + tag_len) throw truncated(kVecStoreFixedHeaderBytes + tag_len);
  header_.model_tag.resize(tag_len);
  in_.read(header_.model_tag.data(), tag_len);

  const auto expected = header_.file_bytes();
  if (actual < expected) {
    const auto complete = (actual - header_.header_bytes()) / header_.record_bytes();
    throw FormatError(path_.string() + ": truncated file: expected " + std::to_string(expected) +
                      " bytes, got " + std::to_string(actual) + " (record " +
                      std::to_string(complete) + " of " + std::to_string(header_.count) +
                      " starts at offset " +
                      std::to_string(header_.header_bytes() + complete * header_.record_bytes()) +
                      ")");
  }
  if (actual > expected) {
    throw FormatError(path_.string() + ": " + std::to_string(actual - expected) +
                      " trailing bytes after " + std::to_string(header_.count) + " records");
  }
  buffer_.resize(header_.record_bytes());
}

bool VecStoreReader::next(FactVector& out) {
  if (read_ == header_.count) return false;
  in_.read(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  if (!in_) {
    throw FormatError(path_.string() + ": read failed at record " + std::to_string(read_));
  }
  out.fact_id = load_le<std::uint64_t>(buffer_.data());
  out.values.resize(header_.dim);
  for (std::size_t k = 0; k < header_.dim; ++k) {
    out.values[k] = load_le<float>(buffer_.data() + 8 + 4 * k);
  }
  try {
    validate_vector(out.fact_id, out.values);
  } catch (const InvalidArgument& e) {
    throw FormatError(path_.string() + ": record " + std::to_string(read_) + ": " + e.what());
  }
  ++read_;
  return true;
}

VecStore read_vecstore(const std::filesystem::path& path) {
  VecStoreReader reader(path);
  auto header = reader.header();
  std::vector<FactId> ids;
  std::vector<float> values;
  ids.reserve(header.count);
  values.reserve(header.count * header.dim);
  FactVector rec;
  while (reader.next(rec)) {
    ids.push_back(rec.fact_id);
    values.insert(values.end(), rec.values.begin(), rec.values.end());
  }
  try {
    return VecStore(std::move(header), std::move(ids), std::move(values));
  } catch (const InvalidArgument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace clare
