#include "clare/ripple.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include "clare/error.hpp"
#include "json.hpp"
#include "random.hpp"

namespace clare {

using json = nlohmann::json;

void validate_ripple(const RippleRecord& r) {
  const auto where = [&] {
    return "ripple (" + std::to_string(r.edit_fact_id) + ", " + std::to_string(r.control_fact_id) +
           "): ";
  };
  if (r.edit_fact_id == r.control_fact_id) throw InvalidArgument(where() + "edit fact equals control fact");
  if (!std::isfinite(r.l2_shift) || r.l2_shift < 0.0) {
    throw InvalidArgument(where() + "l2_shift must be finite and >= 0");
  }
  if (!std::isfinite(r.dlogp) || r.dlogp < 0.0) {
    throw InvalidArgument(where() + "dlogp must be finite and >= 0");
  }
}

namespace {

template <typename T>
double l2_impl(std::span<const T> before, std::span<const T> after) {
  if (before.size() != after.size()) {
    throw InvalidArgument("l2_logit_shift: length mismatch " + std::to_string(before.size()) +
                          " vs " + std::to_string(after.size()));
  }
  if (before.empty()) throw InvalidArgument("l2_logit_shift: empty logit vectors");
  double sq = 0.0;
  for (std::size_t k = 0; k < before.size(); ++k) {
    if (!std::isfinite(before[k]) || !std::isfinite(after[k])) {
      throw InvalidArgument("l2_logit_shift: non-finite logit at index " + std::to_string(k));
    }
    const double diff = static_cast<double>(after[k]) - static_cast<double>(before[k]);
    sq += diff * diff;
  }
  return std::sqrt(sq);
}

}  // namespace

double l2_logit_shift(std::span<const double> logits_before, std::span<const double> logits_after) {
  return l2_impl(logits_before, logits_after);
}

double l2_logit_shift(std::span<const float> logits_before, std::span<const float> logits_after) {
  return l2_impl(logits_before, logits_after);
}

double log_prob_shift(double logp_before, double logp_after) {
  if (!std::isfinite(logp_before) || !std::isfinite(logp_after)) {
    throw InvalidArgument("log_prob_shift: non-finite log-probability");
  }
  if (logp_before > 0.0 || logp_after > 0.0) {
    throw InvalidArgument("log_prob_shift: log-probabilities must be <= 0");
  }
  return std::abs(logp_after - logp_before);
}

std::vector<RippleRecord> load_ripples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ripple file " + path.string());
  std::vector<RippleRecord> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    try {
      const auto obj = json::parse(line);
      RippleRecord r;
      for (const char* key : {"edit_fact_id", "control_fact_id"}) {
        if (!obj.at(key).is_number_unsigned()) {
          throw FormatError(std::string("field \"") + key + "\" is not an unsigned integer");
        }
      }
      r.edit_fact_id = obj.at("edit_fact_id").get<FactId>();
      r.control_fact_id = obj.at("control_fact_id").get<FactId>();
      r.l2_shift = obj.at("l2_shift").get<double>();
      r.dlogp = obj.at("dlogp").get<double>();
      r.technique_tag = obj.value("technique_tag", "");
      r.model_tag = obj.value("model_tag", "");
      validate_ripple(r);
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": malformed ripple record: " + e.what());
    } catch (const Error& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_ripples(std::span<const RippleRecord> ripples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& r : ripples) {
    validate_ripple(r);
    json obj = {{"edit_fact_id", r.edit_fact_id}, {"control_fact_id", r.control_fact_id},
                {"l2_shift", r.l2_shift},         {"dlogp", r.dlogp},
                {"technique_tag", r.technique_tag}, {"model_tag", r.model_tag}};
    out << obj.dump() << '\n';
  }
  if (!out) throw IoError("short write to " + path.string());
}

std::vector<EditControlPair> sample_edit_control_pairs(std::span<const FactId> ids,
                                                       std::size_t count, std::uint64_t seed) {
  const std::size_t n = ids.size();
  const std::size_t total = n < 2 ? 0 : n * (n - 1);
  if (count > total) {
    throw InvalidArgument("cannot sample " + std::to_string(count) + " pairs from " +
                          std::to_string(n) + " facts");
  }
  std::mt19937_64 rng(seed);
  std::vector<EditControlPair> out;
  out.reserve(count);
  if (total <= 4 * count) {
    std::vector<EditControlPair> all;
    all.reserve(total);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (a != b) all.push_back({ids[a], ids[b]});
    detail::shuffle(std::span(all), rng);
    all.resize(count);
    return all;
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  while (out.size() < count) {
    const auto a = detail::uniform_below(rng, n);
    const auto b = detail::uniform_below(rng, n);
    if (a == b || !seen.emplace(a, b).second) continue;
    out.push_back({ids[a], ids[b]});
  }
  return out;
}

std::vector<RippleRecord> stratified_sample(std::span<const RippleRecord> candidates,
                                            std::size_t count, std::size_t strata,
                                            std::uint64_t seed) {
  if (strata < 1) throw InvalidArgument("stratified_sample: strata must be >= 1");
  if (count > candidates.size()) {
    throw InvalidArgument("cannot sample " + std::to_string(count) + " of " +
                          std::to_string(candidates.size()) + " ripple records");
  }
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].l2_shift < candidates[b].l2_shift;
  });

  std::mt19937_64 rng(seed);
  const std::size_t bins = std::min(strata, std::max<std::size_t>(order.size(), 1));
  std::vector<std::vector<std::size_t>> binned(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const auto lo = b * order.size() / bins;
    const auto hi = (b + 1) * order.size() / bins;
    binned[b].assign(order.begin() + static_cast<std::ptrdiff_t>(lo),
                     order.begin() + static_cast<std::ptrdiff_t>(hi));
    detail::shuffle(std::span(binned[b]), rng);
  }

  std::vector<RippleRecord> out;
  out.reserve(count);
  for (std::size_t round = 0; out.size() < count; ++round) {
    for (std::size_t b = 0; b < bins && out.size() < count; ++b) {
      if (round < binned[b].size()) out.push_back(candidates[binned[b][round]]);
    }
  }
  return out;
}

}  // namespace clare
