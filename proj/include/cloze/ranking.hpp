#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cloze/cloze_core.hpp"
#include "cloze/embedding_store.hpp"
#include "cloze/text.hpp"
#include "json.hpp"

namespace cloze {

struct RankEntry {
  std::string candidate;
  double rank = 1.0;  // 1 = most appropriate; ties share the midrank
};

struct RankingTable {
  int gap_id = 0;
  std::string ranker_id;
  std::vector<RankEntry> entries;
  bool degenerate = false;  // every candidate tied because the expected word is OOV

  std::vector<std::string> candidates() const;
  /// Rank of each candidate in `order`; throws if one is missing.
  std::vector<double> ranks_for(std::span<const std::string> order) const;
};

/// Midranks of `scores`, where larger scores rank first when `descending`.
/// Tied scores share the mean of the positions they occupy.
std::vector<double> midranks(std::span<const double> scores, bool descending);

/// Checks candidate uniqueness and that the ranks form a midrank assignment
/// of some weak ordering. Throws cloze::Error with the reason.
void validate_ranking(const RankingTable& table);

/// Distinct normalized non-blank answers to a gap, most frequent first, ties
/// broken lexicographically.
std::vector<std::string> collect_candidates(const ClozeTest& test,
                                            const std::vector<ResponseSheet>& sheets, int gap_id,
                                            const NormalizeOptions& norm = {});

inline constexpr std::size_t kDefaultMinAlternatives = 10;

/// Gaps with strictly more than `min_alternatives` distinct candidates.
std::vector<int> filter_gaps(const ClozeTest& test, const std::vector<ResponseSheet>& sheets,
                             std::size_t min_alternatives = kDefaultMinAlternatives,
                             const NormalizeOptions& norm = {});

/// Ranks candidates by descending signed cosine to the gap's expected word.
/// OOV candidates tie below every in-vocabulary one.
RankingTable rank_by_similarity(const Gap& gap, std::span<const std::string> candidates,
                                const EmbeddingModel& model,
                                kernels::Exec exec = kernels::Exec::serial);

/// Mean rank per candidate across judges, re-ranked with midranks.
RankingTable aggregate_judges(std::span<const RankingTable> tables);

/// Removes every candidate tied at the best consensus rank and re-ranks the rest.
RankingTable drop_top_ranked(const RankingTable& consensus);

/// Keeps only `keep` candidates and recomputes midranks preserving the
/// table's relative order.
RankingTable restrict_to(const RankingTable& table, std::span<const std::string> keep);

/// Pearson correlation of the two rank vectors, aligned by candidate. Returns
/// nullopt when either ranking is constant. Throws on mismatched candidate
/// sets or fewer than two candidates.
std::optional<double> spearman(const RankingTable& x, const RankingTable& y);

nlohmann::json ranking_to_json(const RankingTable& t);
RankingTable ranking_from_json(const nlohmann::json& j);

}  // namespace cloze
