#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cloze {

inline constexpr std::string_view kBlankMarker = "_____";

struct Gap {
  int gap_id = 0;          // 1-based ordinal
  std::size_t position = 0;  // 1-based word index into ClozeTest::tokens
  std::string expected;    // normalized source word
};

struct ClozeTest {
  std::string id;
  std::string title;
  std::vector<std::string> tokens;
  std::size_t lead_len = 16;
  std::size_t interval = 5;
  std::vector<Gap> gaps;

  const Gap& gap(int gap_id) const;
  bool has_gap(int gap_id) const;
  std::string text() const;
};

/// Deletes every `interval`-th word after an intact lead-in: gaps sit at
/// 1-based positions lead_len + 1 + k * interval.
ClozeTest generate_cloze(std::string_view text, std::size_t lead_len = 16,
                         std::size_t interval = 5, std::string id = "cloze",
                         std::string title = {});

/// Number of gaps generate_cloze produces for a passage of `token_count` words.
std::size_t gap_count(std::size_t token_count, std::size_t lead_len, std::size_t interval);

struct RenderOptions {
  std::string blank = std::string(kBlankMarker);
  bool include_title = true;
};

/// Passage with each gap word replaced by the blank marker. Punctuation glued
/// to a gapped word stays visible around the blank.
std::string render_cloze(const ClozeTest& test, const RenderOptions& opts = {});

/// Same layout as render_cloze, with gaps filled from `fills` (gap_id ->
/// text); gaps without a fill are blanked.
std::string fill_cloze(const ClozeTest& test, const std::map<int, std::string>& fills,
                       const RenderOptions& opts = {});

/// The sentence holding a gap, with that gap blanked and any sibling gaps in
/// the same sentence restored to their source words.
std::string extract_context(const ClozeTest& test, int gap_id,
                            std::string_view blank = kBlankMarker);

/// 1-based position of the first word of the sentence containing `position`.
std::size_t sentence_start(const ClozeTest& test, std::size_t position);

struct ResponseSheet {
  std::string student_id;
  std::map<int, std::string> answers;  // raw text; missing gap_id means blank

  const std::string& answer(int gap_id) const;
};

nlohmann::json test_to_json(const ClozeTest& test);
ClozeTest test_from_json(const nlohmann::json& j);
ClozeTest parse_test_file(const std::filesystem::path& path);
void write_test_file(const ClozeTest& test, const std::filesystem::path& path);

/// Reads "student_id,gap_id,answer" rows. Sheets come back in order of first
/// appearance of each student.
std::vector<ResponseSheet> parse_responses(const std::filesystem::path& path,
                                           const ClozeTest& test);
std::vector<ResponseSheet> parse_responses_csv(std::string_view csv, const ClozeTest& test);
std::string responses_to_csv(const std::vector<ResponseSheet>& sheets);

}  // namespace cloze
