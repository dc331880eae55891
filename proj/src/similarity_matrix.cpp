#include "clare/similarity_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "byte_io.hpp"
#include "clare/error.hpp"

namespace clare {

using detail::load_le;
using detail::store_le;

float to_stored_score(double score) noexcept {
  const float f = static_cast<float>(score);
  return std::clamp(f, std::nextafter(-1.0F, 0.0F), 1.0F);
}

SimilarityMatrix::SimilarityMatrix(std::size_t n, std::vector<float> entries,
                                   std::vector<FactId> fact_ids, std::size_t dim,
                                   std::string source_tag)
    : n_(n), entries_(std::move(entries)), fact_ids_(std::move(fact_ids)), dim_(dim),
      source_tag_(std::move(source_tag)) {
  if (entries_.size() != pair_count(n_)) {
    throw InvalidArgument("similarity matrix of " + std::to_string(n_) + " nodes needs " +
                          std::to_string(pair_count(n_)) + " entries, got " +
                          std::to_string(entries_.size()));
  }
  if (fact_ids_.empty()) {
    fact_ids_.resize(n_);
    std::iota(fact_ids_.begin(), fact_ids_.end(), FactId{0});
  } else if (fact_ids_.size() != n_) {
    throw InvalidArgument("similarity matrix has " + std::to_string(n_) + " nodes but " +
                          std::to_string(fact_ids_.size()) + " fact ids");
  }
  for (const float s : entries_) {
    if (!(s > -1.0F && s <= 1.0F)) {
      throw InvalidArgument("similarity score " + std::to_string(s) + " outside (-1, 1]");
    }
  }
}

float SimilarityMatrix::score(std::size_t i, std::size_t j) const {
  if (i == j || i >= n_ || j >= n_) throw InvalidArgument("invalid matrix pair");
  if (i > j) std::swap(i, j);
  // Rows before i contribute (n-1) + (n-2) + ... + (n-i) entries.
  const std::size_t offset = i * (2 * n_ - i - 1) / 2;
  return entries_[offset + (j - i - 1)];
}

SimilarityMatrix compute_similarity_matrix(const VecStore& store, const EntanglementConfig& cfg) {
  std::vector<float> entries;
  entries.reserve(pair_count(store.size()));
  pairwise_entanglement(store, cfg, [&](std::size_t, std::span<const double> row) {
    for (const double s : row) entries.push_back(to_stored_score(s));
  });
  return SimilarityMatrix(store.size(), std::move(entries), store.ids(), store.dim(),
                          store.header().model_tag);
}

// ---------------------------------------------------------------------------

MatrixWriter::MatrixWriter(const std::filesystem::path& path, std::uint64_t n)
    : path_(path), n_(n) {
  if (n_ > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidArgument("similarity matrix too large for 32-bit node indices");
  }
  out_.open(path_, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot open " + path_.string() + " for writing");
  char head[kMatrixHeaderBytes];
  std::copy(kMatrixMagic.begin(), kMatrixMagic.end(), head);
  store_le<std::uint16_t>(head + 4, kMatrixVersion);
  store_le<std::uint64_t>(head + 6, n_);
  out_.write(head, sizeof head);
  buffer_.reserve(kMatrixEntryBytes * 4096);
}

void MatrixWriter::write(std::uint32_t i, std::uint32_t j, float score) {
  if (written_ == pair_count(n_)) throw InvalidArgument("too many matrix entries");
  if (i != next_i_ || j != next_j_) {
    throw InvalidArgument("matrix entry (" + std::to_string(i) + ", " + std::to_string(j) +
                          ") out of order; expected (" + std::to_string(next_i_) + ", " +
                          std::to_string(next_j_) + ")");
  }
  if (!(score > -1.0F && score <= 1.0F)) {
    throw InvalidArgument("matrix entry (" + std::to_string(i) + ", " + std::to_string(j) +
                          ") score outside (-1, 1]");
  }
  char rec[kMatrixEntryBytes];
  store_le<std::uint32_t>(rec, i);
  store_le<std::uint32_t>(rec + 4, j);
  store_le<float>(rec + 8, score);
  buffer_.insert(buffer_.end(), rec, rec + kMatrixEntryBytes);
  if (buffer_.size() >= kMatrixEntryBytes * 4096) flush();
  ++written_;
  if (++next_j_ == n_) {
    ++next_i_;
    next_j_ = next_i_ + 1;
  }
}

void MatrixWriter::write_row(std::size_t i, std::span<const double> scores) {
  for (std::size_t t = 0; t < scores.size(); ++t) {
    write(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i + 1 + t),
          to_stored_score(scores[t]));
  }
}

void MatrixWriter::flush() {
  out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  buffer_.clear();
}

void MatrixWriter::close() {
  if (written_ != pair_count(n_)) {
    throw InvalidArgument("matrix of " + std::to_string(n_) + " nodes needs " +
                          std::to_string(pair_count(n_)) + " entries, " +
                          std::to_string(written_) + " written");
  }
  flush();
  out_.close();
  if (!out_) throw IoError("short write to " + path_.string());
}

// ---------------------------------------------------------------------------

MatrixReader::MatrixReader(const std::filesystem::path& path) : path_(path) {
  in_.open(path_, std::ios::binary);
  if (!in_) throw IoError("cannot open similarity matrix " + path_.string());
  std::error_code ec;
  const auto actual = std::filesystem::file_size(path_, ec);
  if (ec) throw IoError("cannot stat " + path_.string() + ": " + ec.message());
  if (actual < kMatrixHeaderBytes) {
    throw FormatError(path_.string() + ": truncated file: expected at least " +
                      std::to_string(kMatrixHeaderBytes) + " bytes, got " + std::to_string(actual));
  }
  char head[kMatrixHeaderBytes];
  in_.read(head, sizeof head);
  if (!std::equal(kMatrixMagic.begin(), kMatrixMagic.end(), head)) {
    throw FormatError(path_.string() + ": bad magic (not a similarity matrix file)");
  }
  const auto version = load_le<std::uint16_t>(head + 4);
  if (version != kMatrixVersion) {
    throw FormatError(path_.string() + ": unsupported format version " + std::to_string(version));
  }
  n_ = load_le<std::uint64_t>(head + 6);
  const auto expected = kMatrixHeaderBytes + pair_count(n_) * kMatrixEntryBytes;
  if (actual != expected) {
    throw FormatError(path_.string() + ": " + (actual < expected ? "truncated file" : "trailing bytes") +
                      ": expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(actual));
  }
}

bool MatrixReader::next(std::uint32_t& i, std::uint32_t& j, float& score) {
  if (read_ == pair_count(n_)) return false;
  char rec[kMatrixEntryBytes];
  in_.read(rec, sizeof rec);
  if (!in_) throw FormatError(path_.string() + ": read failed at entry " + std::to_string(read_));
  i = load_le<std::uint32_t>(rec);
  j = load_le<std::uint32_t>(rec + 4);
  score = load_le<float>(rec + 8);
  if (i != expect_i_ || j != expect_j_) {
    throw FormatError(path_.string() + ": entry " + std::to_string(read_) + " is (" +
                      std::to_string(i) + ", " + std::to_string(j) + "), expected (" +
                      std::to_string(expect_i_) + ", " + std::to_string(expect_j_) + ")");
  }
  if (!(score > -1.0F && score <= 1.0F)) {
    throw FormatError(path_.string() + ": entry " + std::to_string(read_) + " score " +
                      std::to_string(score) + " outside (-1, 1]");
  }
  ++read_;
  if (++expect_j_ == n_) {
    ++expect_i_;
    expect_j_ = expect_i_ + 1;
  }
  return true;
}

void write_similarity_matrix(const SimilarityMatrix& matrix, const std::filesystem::path& path) {
  MatrixWriter writer(path, matrix.size());
  matrix.for_each([&](std::size_t i, std::size_t j, float s) {
    writer.write(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), s);
  });
  writer.close();
}

SimilarityMatrix read_similarity_matrix(const std::filesystem::path& path,
                                        std::vector<FactId> fact_ids) {
  MatrixReader reader(path);
  std::vector<float> entries;
  entries.reserve(pair_count(reader.size()));
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  float s = 0;
  while (reader.next(i, j, s)) entries.push_back(s);
  return SimilarityMatrix(reader.size(), std::move(entries), std::move(fact_ids));
}

}  // namespace clare
