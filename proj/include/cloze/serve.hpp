#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "cloze/cloze_core.hpp"
#include "cloze/judge_session.hpp"
#include "cloze/text.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace cloze {

struct JudgeTask {
  int gap_id = 0;
  std::string context;
  std::vector<std::string> candidates;
};

/// Transport-independent core of the judge-ranking service: builds the task
/// list once, validates submissions and persists one session file per judge.
class JudgeService {
 public:
  struct Reply {
    int status = 200;
    nlohmann::json body;
  };

  JudgeService(ClozeTest test, const std::vector<ResponseSheet>& sheets,
               std::filesystem::path data_dir, std::size_t min_alternatives,
               const NormalizeOptions& norm = {});

  const std::vector<JudgeTask>& tasks() const { return tasks_; }
  const std::filesystem::path& data_dir() const { return data_dir_; }

  Reply get_tasks(const std::string& judge_id) const;
  /// Body: {judge_id, gap_id, ordered_candidates}; position 1 = most appropriate.
  Reply submit(std::string_view body);

 private:
  const JudgeTask* find_task(int gap_id) const;

  ClozeTest test_;
  std::vector<JudgeTask> tasks_;
  std::filesystem::path data_dir_;
  mutable std::mutex write_mutex_;
};

/// HTTP front end: GET /api/health, GET /api/tasks?judge=ID, POST /api/rankings,
/// and the judge UI bundle from `ui_dir` when it exists.
class JudgeServer {
 public:
  JudgeServer(JudgeService& service, std::filesystem::path ui_dir = {});
  ~JudgeServer();
  JudgeServer(const JudgeServer&) = delete;
  JudgeServer& operator=(const JudgeServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port, throws on failure.
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  void listen();
  /// Blocks until listen() is accepting; stop() before that point is a no-op.
  void wait_until_ready() const;
  void stop();

 private:
  JudgeService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace cloze
