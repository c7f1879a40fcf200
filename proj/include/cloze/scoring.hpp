#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cloze/cloze_core.hpp"
#include "cloze/embedding_store.hpp"
#include "cloze/kernels.hpp"
#include "cloze/text.hpp"
#include "json.hpp"

namespace cloze {

enum class ScoreMethod { exact, acceptable, similarity, clozentropy };

std::string_view to_string(ScoreMethod m);
ScoreMethod parse_score_method(std::string_view s);

namespace flag {
inline constexpr std::uint8_t blank = 1;
inline constexpr std::uint8_t oov = 2;
inline constexpr std::uint8_t multiword = 4;
inline constexpr std::uint8_t empty_pool = 8;
}  // namespace flag

/// "blank|oov" style rendering of a flag set; empty when no flag is set.
std::string flags_to_string(std::uint8_t flags);

struct GapScore {
  int gap_id = 0;
  double score = 0.0;            // in [0, 1]
  std::optional<double> cosine;  // signed cosine, similarity-based methods only
  std::uint8_t flags = 0;
};

struct StudentScore {
  std::string student_id;
  std::vector<GapScore> gaps;  // one entry per test gap, in gap order
  double total = 0.0;
  double proportion = 0.0;
};

struct ScoreReport {
  std::string test_id;
  ScoreMethod method = ScoreMethod::exact;
  std::optional<double> threshold;
  std::string model;
  std::vector<StudentScore> students;
};

struct ScoringOptions {
  NormalizeOptions normalize;
  // Clozentropy: count the scored sheet in its own criterion group.
  bool include_self = false;
  kernels::Exec exec = kernels::Exec::parallel;
};

inline constexpr double kDefaultAcceptableThreshold = 0.5;

/// 1 iff the normalized answer equals the expected word.
ScoreReport score_exact(const ClozeTest& test, const std::vector<ResponseSheet>& sheets,
                        const ScoringOptions& opts = {});

/// max(0, cosine(answer, expected)); exact string matches always score 1.
ScoreReport score_similarity(const ClozeTest& test, const std::vector<ResponseSheet>& sheets,
                             const EmbeddingModel& model, const ScoringOptions& opts = {});

/// 1 iff exact match or similarity score >= threshold.
ScoreReport score_acceptable(const ClozeTest& test, const std::vector<ResponseSheet>& sheets,
                             const EmbeddingModel& model,
                             double threshold = kDefaultAcceptableThreshold,
                             const ScoringOptions& opts = {});

/// Relative frequency of the sheet's answer among the criterion group's
/// non-blank answers for the same gap. The group excludes the scored sheet
/// unless opts.include_self is set.
ScoreReport score_clozentropy(const ClozeTest& test, const std::vector<ResponseSheet>& all_sheets,
                              const ResponseSheet& sheet, const ScoringOptions& opts = {});

/// score_clozentropy for every sheet of the group.
ScoreReport score_clozentropy(const ClozeTest& test, const std::vector<ResponseSheet>& all_sheets,
                              const ScoringOptions& opts = {});

nlohmann::json report_to_json(const ScoreReport& report);
/// Flat "student_id,gap_id,method,score,flags" table with a header row.
std::string report_to_csv(const ScoreReport& report);

/// Shortest decimal string that round-trips to the same double.
std::string format_real(double v);

}  // namespace cloze
