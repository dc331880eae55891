#include "clare/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "clare/error.hpp"
#include "json.hpp"

namespace clare {

using json = nlohmann::json;

void validate_fact(const FactTriple& fact) {
  const auto where = [&] { return "fact " + std::to_string(fact.id) + ": "; };
  if (fact.subject.empty()) throw InvalidArgument(where() + "empty subject");
  if (fact.relation.empty()) throw InvalidArgument(where() + "empty relation");
  if (fact.prompt.empty()) throw InvalidArgument(where() + "empty prompt");
  const auto [start, end] = fact.subject_span;
  if (start > end || end > fact.prompt.size()) {
    throw InvalidArgument(where() + "subject_char_span [" + std::to_string(start) + ", " +
                          std::to_string(end) + ") outside prompt of " +
                          std::to_string(fact.prompt.size()) + " bytes");
  }
  if (std::string_view(fact.prompt).substr(start, end - start) != fact.subject) {
    throw InvalidArgument(where() + "subject_char_span [" + std::to_string(start) + ", " +
                          std::to_string(end) + ") spells \"" +
                          fact.prompt.substr(start, end - start) + "\", expected \"" +
                          fact.subject + "\"");
  }
}

Corpus::Corpus(std::vector<FactTriple> facts) : facts_(std::move(facts)) {
  index_.reserve(facts_.size());
  for (std::size_t i = 0; i < facts_.size(); ++i) {
    validate_fact(facts_[i]);
    if (!index_.emplace(facts_[i].id, i).second) {
      throw InvalidArgument("duplicate fact id " + std::to_string(facts_[i].id));
    }
  }
}

const FactTriple& Corpus::at(FactId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw InvalidArgument("unknown fact id " + std::to_string(id));
  return facts_[it->second];
}

namespace {

std::string required_string(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(std::string("missing field \"") + key + "\"");
  if (!it->is_string()) throw FormatError(std::string("field \"") + key + "\" is not a string");
  return it->get<std::string>();
}

FactTriple parse_fact(const json& obj, std::size_t line_index) {
  if (!obj.is_object()) throw FormatError("record is not an object");
  FactTriple fact;
  if (const auto it = obj.find("id"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_unsigned()) throw FormatError("field \"id\" is not an unsigned integer");
    fact.id = it->get<FactId>();
  } else {
    fact.id = line_index;
  }
  fact.subject = required_string(obj, "subject");
  fact.relation = required_string(obj, "relation");
  fact.object = required_string(obj, "object");
  fact.prompt = required_string(obj, "prompt");

  if (const auto it = obj.find("subject_char_span"); it != obj.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_unsigned() ||
        !(*it)[1].is_number_unsigned()) {
      throw FormatError("field \"subject_char_span\" must be [start, end]");
    }
    fact.subject_span = {(*it)[0].get<std::size_t>(), (*it)[1].get<std::size_t>()};
  } else {
    const auto pos = fact.prompt.find(fact.subject);
    if (fact.subject.empty() || pos == std::string::npos) {
      throw FormatError("subject \"" + fact.subject + "\" does not occur in prompt");
    }
    fact.subject_span = {pos, pos + fact.subject.size()};
  }
  return fact;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file " + path.string());

  std::vector<FactTriple> facts;
  std::map<FactId, std::size_t> first_line;
  std::string line;
  for (std::size_t line_index = 0; std::getline(in, line); ++line_index) {
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    const auto line_no = line_index + 1;
    const auto fail = [&](const std::string& what) -> FormatError {
      return FormatError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };
    FactTriple fact;
    try {
      fact = parse_fact(json::parse(line), line_index);
      validate_fact(fact);
    } catch (const json::exception& e) {
      throw fail(std::string("malformed record: ") + e.what());
    } catch (const Error& e) {
      throw fail(e.what());
    }
    if (const auto [it, fresh] = first_line.emplace(fact.id, line_no); !fresh) {
      throw fail("duplicate fact id " + std::to_string(fact.id) + " (first seen on line " +
                 std::to_string(it->second) + ")");
    }
    facts.push_back(std::move(fact));
  }
  return Corpus(std::move(facts));
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& f : corpus) {
    json obj = {{"id", f.id},
                {"subject", f.subject},
                {"relation", f.relation},
                {"object", f.object},
                {"prompt", f.prompt},
                {"subject_char_span", {f.subject_span.first, f.subject_span.second}}};
    out << obj.dump() << '\n';
  }
  if (!out) throw IoError("short write to " + path.string());
}

std::string prompt_format(const FactTriple& fact) {
  const auto [start, end] = fact.subject_span;
  std::string out;
  out.reserve(fact.prompt.size() - (end - start) + kSubjectPlaceholder.size());
  out.append(fact.prompt, 0, start);
  out.append(kSubjectPlaceholder);
  out.append(fact.prompt, end);
  return out;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  std::map<std::string, std::size_t> per_subject;
  std::set<std::string> formats;
  for (const auto& f : corpus) {
    ++per_subject[f.subject];
    formats.insert(prompt_format(f));
  }

  CorpusStats stats;
  stats.fact_count = corpus.size();
  stats.unique_subjects = per_subject.size();
  stats.unique_prompt_formats = formats.size();
  stats.subjects_by_fact_count.assign(per_subject.begin(), per_subject.end());
  std::stable_sort(stats.subjects_by_fact_count.begin(), stats.subjects_by_fact_count.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return stats;
}

}  // namespace clare
