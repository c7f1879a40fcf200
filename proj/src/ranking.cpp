#include "cloze/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "cloze/error.hpp"
#include "cloze/kernels.hpp"

namespace cloze {

std::vector<std::string> RankingTable::candidates() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.candidate);
  return out;
}

std::vector<double> RankingTable::ranks_for(std::span<const std::string> order) const {
  std::map<std::string_view, double> by_name;
  for (const auto& e : entries) by_name.emplace(e.candidate, e.rank);
  std::vector<double> out;
  out.reserve(order.size());
  for (const auto& c : order) {
    auto it = by_name.find(c);
    if (it == by_name.end()) {
      throw Error("ranking '" + ranker_id + "' for gap " + std::to_string(gap_id) +
                  " has no entry for '" + c + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

std::vector<double> midranks(std::span<const double> scores, bool descending) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    // Positions i+1 .. j (1-based) share their mean.
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = mid;
    i = j;
  }
  return ranks;
}

void validate_ranking(const RankingTable& table) {
  const std::string who = "ranking '" + table.ranker_id + "' for gap " + std::to_string(table.gap_id);
  std::set<std::string_view> seen;
  for (const auto& e : table.entries) {
    if (e.candidate.empty()) throw Error(who + ": empty candidate");
    if (!seen.insert(e.candidate).second) throw Error(who + ": duplicate candidate '" + e.candidate + "'");
  }
  std::vector<double> r;
  for (const auto& e : table.entries) r.push_back(e.rank);
  std::sort(r.begin(), r.end());
  constexpr double kTol = 1e-9;
  std::size_t i = 0;
  while (i < r.size()) {
    std::size_t j = i + 1;
    while (j < r.size() && std::abs(r[j] - r[i]) <= kTol) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    if (std::abs(r[i] - mid) > kTol) {
      throw Error(who + ": ranks are not a valid midrank assignment (found " + std::to_string(r[i]) +
                  " where " + std::to_string(mid) + " was expected)");
    }
    i = j;
  }
}

std::vector<std::string> collect_candidates(const ClozeTest& test,
                                            const std::vector<ResponseSheet>& sheets, int gap_id,
                                            const NormalizeOptions& norm) {
  test.gap(gap_id);
  std::map<std::string, std::size_t> freq;
  for (const auto& s : sheets) {
    std::string a = normalize_answer(s.answer(gap_id), norm);
    if (!a.empty()) ++freq[std::move(a)];
  }
  std::vector<std::pair<std::string, std::size_t>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto& [w, _] : items) out.push_back(std::move(w));
  return out;
}

std::vector<int> filter_gaps(const ClozeTest& test, const std::vector<ResponseSheet>& sheets,
                             std::size_t min_alternatives, const NormalizeOptions& norm) {
  std::vector<int> out;
  for (const auto& g : test.gaps) {
    if (collect_candidates(test, sheets, g.gap_id, norm).size() > min_alternatives) {
      out.push_back(g.gap_id);
    }
  }
  return out;
}

namespace {

RankingTable table_from_scores(int gap_id, std::string ranker, std::span<const std::string> candidates,
                               std::span<const double> scores, bool descending) {
  RankingTable t;
  t.gap_id = gap_id;
  t.ranker_id = std::move(ranker);
  const auto ranks = midranks(scores, descending);
  for (std::size_t i = 0; i < candidates.size(); ++i) t.entries.push_back({candidates[i], ranks[i]});
  std::sort(t.entries.begin(), t.entries.end(), [](const RankEntry& a, const RankEntry& b) {
    return a.rank != b.rank ? a.rank < b.rank : a.candidate < b.candidate;
  });
  return t;
}

}  // namespace

RankingTable rank_by_similarity(const Gap& gap, std::span<const std::string> candidates,
                                const EmbeddingModel& model, kernels::Exec exec) {
  if (candidates.empty()) {
    throw Error("gap " + std::to_string(gap.gap_id) + " has no candidates to rank");
  }
  constexpr double kOov = -std::numeric_limits<double>::infinity();
  std::vector<double> scores(candidates.size(), kOov);

  const auto expected_row = gap.expected.find(' ') == std::string::npos
                                ? model.index_of(gap.expected)
                                : std::nullopt;
  const bool expected_known =
      expected_row || cosine_similarity(model, gap.expected, gap.expected).ok();
  if (!expected_known) {
    std::fill(scores.begin(), scores.end(), 0.0);
    RankingTable t = table_from_scores(gap.gap_id, model.name(), candidates, scores, true);
    t.degenerate = true;
    return t;
  }

  // Single-token candidates against a single-token key go through the batch
  // kernel; phrases fall back to composed vectors.
  std::vector<kernels::RowPair> pairs;
  std::vector<std::size_t> pair_slot;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (expected_row && c.find(' ') == std::string::npos) {
      if (auto row = model.index_of(c)) {
        if (*row == *expected_row) {
          scores[i] = 1.0;
        } else {
          pairs.push_back({*row, *expected_row});
          pair_slot.push_back(i);
        }
      }
      continue;
    }
    if (const Cosine cs = cosine_similarity(model, c, gap.expected); cs.ok()) scores[i] = cs.value;
  }
  std::vector<double> dots(pairs.size());
  kernels::batch_dot(model.matrix(), model.dimension(), pairs, dots, exec);
  for (std::size_t k = 0; k < pairs.size(); ++k) scores[pair_slot[k]] = std::clamp(dots[k], -1.0, 1.0);

  return table_from_scores(gap.gap_id, model.name(), candidates, scores, true);
}

RankingTable aggregate_judges(std::span<const RankingTable> tables) {
  if (tables.empty()) throw Error("aggregate_judges needs at least one judge table");
  const int gap_id = tables.front().gap_id;
  std::vector<std::string> names = tables.front().candidates();
  std::sort(names.begin(), names.end());
  for (const auto& t : tables) {
    std::vector<std::string> other = t.candidates();
    std::sort(other.begin(), other.end());
    if (other != names || t.gap_id != gap_id) {
      throw Error("judge '" + t.ranker_id + "' ranked a different candidate set for gap " +
                  std::to_string(t.gap_id) + " than judge '" + tables.front().ranker_id + "'");
    }
  }
  std::vector<double> mean(names.size(), 0.0);
  for (const auto& t : tables) {
    const auto r = t.ranks_for(names);
    for (std::size_t i = 0; i < r.size(); ++i) mean[i] += r[i];
  }
  for (double& m : mean) m /= static_cast<double>(tables.size());
  return table_from_scores(gap_id, "consensus", names, mean, false);
}

RankingTable restrict_to(const RankingTable& table, std::span<const std::string> keep) {
  std::vector<double> ranks = table.ranks_for(keep);
  RankingTable t = table_from_scores(table.gap_id, table.ranker_id, keep, ranks, false);
  t.degenerate = table.degenerate;
  return t;
}

RankingTable drop_top_ranked(const RankingTable& consensus) {
  if (consensus.entries.size() < 2) {
    throw Error("gap " + std::to_string(consensus.gap_id) +
                ": cannot drop the top-ranked candidate from fewer than 2 entries");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : consensus.entries) best = std::min(best, e.rank);
  std::vector<std::string> keep;
  for (const auto& e : consensus.entries) {
    if (e.rank != best) keep.push_back(e.candidate);
  }
  return restrict_to(consensus, keep);
}

std::optional<double> spearman(const RankingTable& x, const RankingTable& y) {
  std::vector<std::string> names = x.candidates();
  std::sort(names.begin(), names.end());
  std::vector<std::string> other = y.candidates();
  std::sort(other.begin(), other.end());
  if (names != other) {
    throw Error("spearman: rankings '" + x.ranker_id + "' and '" + y.ranker_id +
                "' cover different candidates");
  }
  if (names.size() < 2) throw Error("spearman needs at least two candidates");
  const auto rx = x.ranks_for(names);
  const auto ry = y.ranks_for(names);
  const double r = kernels::pearson(rx, ry);
  if (std::isnan(r)) return std::nullopt;
  return r;
}

nlohmann::json ranking_to_json(const RankingTable& t) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : t.entries) entries.push_back({{"candidate", e.candidate}, {"rank", e.rank}});
  nlohmann::json j = {{"gap_id", t.gap_id}, {"ranker_id", t.ranker_id}, {"entries", entries}};
  if (t.degenerate) j["degenerate"] = true;
  return j;
}

RankingTable ranking_from_json(const nlohmann::json& j) {
  RankingTable t;
  try {
    t.gap_id = j.at("gap_id").get<int>();
    t.ranker_id = j.at("ranker_id").get<std::string>();
    for (const auto& e : j.at("entries")) {
      t.entries.push_back({e.at("candidate").get<std::string>(), e.at("rank").get<double>()});
    }
    t.degenerate = j.value("degenerate", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("ranking table schema error: ") + e.what());
  }
  validate_ranking(t);
  return t;
}

}  // namespace cloze
