#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cloze/ranking.hpp"
#include "json.hpp"

namespace cloze {

struct JudgeSubmission {
  RankingTable table;  // ranker_id is the judge id
  std::string submitted_at;
};

/// Everything one judge submitted for one test. Persisted as one JSON file.
struct JudgeSession {
  std::string session_id;
  std::string judge_id;
  std::string test_id;
  std::string created_at;
  std::string updated_at;
  std::string status = "in_progress";  // or "complete"
  std::vector<JudgeSubmission> rankings;

  const JudgeSubmission* find(int gap_id) const;
};

/// Strict ranking from an ordered list, position 1 = most appropriate.
RankingTable ranking_from_order(int gap_id, const std::string& judge_id,
                                std::span<const std::string> ordered);

nlohmann::json session_to_json(const JudgeSession& s);
/// Validates one submission per gap and RankingTable invariants.
JudgeSession session_from_json(const nlohmann::json& j);

JudgeSession read_session(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames it over `path`.
void write_session_atomic(const JudgeSession& s, const std::filesystem::path& path);

/// All *.json session files in `dir`, in filename order. Each judge id may
/// appear in one file only.
std::vector<JudgeSession> load_judge_sessions(const std::filesystem::path& dir);

std::string session_filename(const std::string& judge_id);
bool valid_judge_id(std::string_view id);

/// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

}  // namespace cloze
