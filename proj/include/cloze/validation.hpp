#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cloze/cloze_core.hpp"
#include "cloze/embedding_store.hpp"
#include "cloze/judge_session.hpp"
#include "cloze/kernels.hpp"
#include "cloze/ranking.hpp"
#include "cloze/stats.hpp"
#include "cloze/text.hpp"
#include "json.hpp"

namespace cloze {

struct ModelSource {
  std::string name;
  std::string path;  // informational, recorded in provenance
  const EmbeddingModel* model = nullptr;
};

struct ValidationConfig {
  std::size_t min_alternatives = kDefaultMinAlternatives;
  NormalizeOptions normalize;
  kernels::Exec exec = kernels::Exec::parallel;
  nlohmann::json config_snapshot = nlohmann::json::object();
  bool timestamp = true;  // write provenance.generated_at
};

/// k x k correlation matrix; NaN marks an undefined coefficient.
struct CorrelationMatrix {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::vector<double> values;  // row-major

  double at(std::size_t r, std::size_t c) const { return values[r * cols.size() + c]; }
  std::optional<double> get(const std::string& r, const std::string& c) const;
};

struct GapValidation {
  int gap_id = 0;
  std::vector<std::string> candidates;  // after collect_candidates
  std::vector<std::string> dropped;     // tied-first consensus candidates
  std::vector<std::string> judges;      // judges who ranked this gap
  std::map<std::string, RankingTable> tables;  // models + consensus, restricted to survivors
  CorrelationMatrix spearman;
};

struct StatsReport {
  std::string test_id;
  std::vector<std::string> rankers;  // model names then "consensus"
  CorrelationMatrix spearman;        // concatenated per-gap rank vectors
  CorrelationMatrix judge_spearman;  // each judge against every ranker
  std::vector<stats::AnovaTable> anova;
  std::vector<int> gap_selection;
  std::vector<int> skipped_gaps;  // selected but never ranked by a judge
  std::vector<GapValidation> gaps;
  nlohmann::json provenance;
};

/// filter_gaps -> collect_candidates -> model rankings -> judge consensus ->
/// drop top-ranked -> Spearman matrices and ART ANOVA over rankers.
StatsReport run_validation(const ClozeTest& test, const std::vector<ResponseSheet>& sheets,
                           const std::vector<JudgeSession>& sessions,
                           const std::vector<ModelSource>& models,
                           const ValidationConfig& config = {});

nlohmann::json stats_report_to_json(const StatsReport& r);
/// "ranker_a,ranker_b,rho" rows for the aggregated matrix plus per-gap rows
/// with a gap_id column ("all" for the aggregate).
std::string spearman_to_csv(const StatsReport& r);
std::string anova_to_csv(const std::vector<stats::AnovaTable>& tables);

}  // namespace cloze
