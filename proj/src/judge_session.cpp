#include "cloze/judge_session.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cloze/error.hpp"

namespace cloze {

const JudgeSubmission* JudgeSession::find(int gap_id) const {
  for (const auto& r : rankings) {
    if (r.table.gap_id == gap_id) return &r;
  }
  return nullptr;
}

RankingTable ranking_from_order(int gap_id, const std::string& judge_id,
                                std::span<const std::string> ordered) {
  RankingTable t;
  t.gap_id = gap_id;
  t.ranker_id = judge_id;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    t.entries.push_back({ordered[i], static_cast<double>(i + 1)});
  }
  validate_ranking(t);
  return t;
}

nlohmann::json session_to_json(const JudgeSession& s) {
  nlohmann::json rankings = nlohmann::json::array();
  for (const auto& r : s.rankings) {
    nlohmann::json j = ranking_to_json(r.table);
    j["submitted_at"] = r.submitted_at;
    rankings.push_back(std::move(j));
  }
  return {{"session_id", s.session_id}, {"judge_id", s.judge_id},   {"test_id", s.test_id},
          {"created_at", s.created_at}, {"updated_at", s.updated_at}, {"status", s.status},
          {"rankings", rankings}};
}

JudgeSession session_from_json(const nlohmann::json& j) {
  JudgeSession s;
  try {
    s.judge_id = j.at("judge_id").get<std::string>();
    s.session_id = j.value("session_id", s.judge_id);
    s.test_id = j.value("test_id", std::string());
    s.created_at = j.value("created_at", std::string());
    s.updated_at = j.value("updated_at", std::string());
    s.status = j.value("status", std::string("in_progress"));
    for (const auto& r : j.at("rankings")) {
      JudgeSubmission sub;
      nlohmann::json table = r;
      if (!table.contains("ranker_id")) table["ranker_id"] = s.judge_id;
      sub.table = ranking_from_json(table);
      sub.submitted_at = r.value("submitted_at", std::string());
      s.rankings.push_back(std::move(sub));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("judge session schema error: ") + e.what());
  }
  if (s.judge_id.empty()) throw Error("judge session has an empty judge_id");
  std::set<int> gaps;
  for (const auto& r : s.rankings) {
    if (r.table.ranker_id != s.judge_id) {
      throw Error("judge session '" + s.judge_id + "' holds a ranking by '" + r.table.ranker_id + "'");
    }
    if (!gaps.insert(r.table.gap_id).second) {
      throw Error("judge session '" + s.judge_id + "' has two submissions for gap " +
                  std::to_string(r.table.gap_id));
    }
  }
  return s;
}

JudgeSession read_session(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read judge session '" + path.string() + "'");
  try {
    return session_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(path.string() + ": malformed JSON: " + e.what());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_session_atomic(const JudgeSession& s, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << session_to_json(s).dump(2) << '\n';
    out.flush();
    if (!out) throw Error("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot move session file into place: " + ec.message());
}

std::vector<JudgeSession> load_judge_sessions(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw Error("judge session directory '" + dir.string() + "' does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<JudgeSession> out;
  std::map<std::string, std::string> seen;
  for (const auto& f : files) {
    JudgeSession s = read_session(f);
    if (auto [it, ok] = seen.emplace(s.judge_id, f.filename().string()); !ok) {
      throw Error("judge '" + s.judge_id + "' appears in both " + it->second + " and " +
                  f.filename().string());
    }
    out.push_back(std::move(s));
  }
  return out;
}

bool valid_judge_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
           c == '_' || c == '.';
  }) && id.front() != '.';
}

std::string session_filename(const std::string& judge_id) { return "judge_" + judge_id + ".json"; }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace cloze
