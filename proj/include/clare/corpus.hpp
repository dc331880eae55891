#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace clare {

using FactId = std::uint64_t;

/// A (subject, relation, object) fact plus the prompt that queries it.
/// `subject_span` is a half-open byte range into `prompt` that must spell
/// `subject` exactly.
struct FactTriple {
  FactId id = 0;
  std::string subject;
  std::string relation;
  std::string object;
  std::string prompt;
  std::pair<std::size_t, std::size_t> subject_span{0, 0};

  bool operator==(const FactTriple&) const = default;
};

/// Throws InvalidArgument if the triple breaks any of its invariants.
void validate_fact(const FactTriple& fact);

/// Ordered fact collection with an id index.
class Corpus {
 public:
  Corpus() = default;
  /// Validates every fact and rejects duplicate ids.
  explicit Corpus(std::vector<FactTriple> facts);

  [[nodiscard]] std::size_t size() const noexcept { return facts_.size(); }
  [[nodiscard]] bool empty() const noexcept { return facts_.empty(); }
  [[nodiscard]] const std::vector<FactTriple>& facts() const noexcept { return facts_; }
  [[nodiscard]] const FactTriple& operator[](std::size_t i) const { return facts_[i]; }

  [[nodiscard]] bool contains(FactId id) const { return index_.contains(id); }
  /// Throws InvalidArgument for an unknown id.
  [[nodiscard]] const FactTriple& at(FactId id) const;

  auto begin() const noexcept { return facts_.begin(); }
  auto end() const noexcept { return facts_.end(); }

 private:
  std::vector<FactTriple> facts_;
  std::unordered_map<FactId, std::size_t> index_;
};

/// Reads a line-oriented corpus file (one JSON object per line). Missing ids
/// default to the zero-based line index; a missing subject_char_span is
/// located as the first occurrence of the subject in the prompt. Errors name
/// the offending line.
Corpus load_corpus(const std::filesystem::path& path);

/// Writes the same line format `load_corpus` reads, ids and spans explicit.
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Placeholder that stands in for the subject when deriving prompt formats.
inline constexpr std::string_view kSubjectPlaceholder = "{}";

/// The prompt with its subject span replaced by kSubjectPlaceholder.
std::string prompt_format(const FactTriple& fact);

struct CorpusStats {
  std::size_t fact_count = 0;
  std::size_t unique_subjects = 0;
  std::size_t unique_prompt_formats = 0;
  /// (subject, fact count), descending by count, ties by subject.
  std::vector<std::pair<std::string, std::size_t>> subjects_by_fact_count;

  bool operator==(const CorpusStats&) const = default;
};

CorpusStats corpus_stats(const Corpus& corpus);

}  // namespace clare
