#include "cloze/serve.hpp"

#include <httplib.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "cloze/error.hpp"
#include "cloze/ranking.hpp"

namespace cloze {

namespace {

JudgeService::Reply bad_request(std::string message, nlohmann::json extra = nlohmann::json::object()) {
  extra["error"] = std::move(message);
  return {400, std::move(extra)};
}

constexpr const char* kFallbackPage = R"(<!doctype html>
<html lang="pt-BR"><head><meta charset="utf-8"><title>Cloze judge service</title></head>
<body><h1>Cloze judge service</h1>
<p>The judge interface bundle is not installed. Start the server with
<code>--ui-dir</code> pointing at the built bundle, or use the JSON API:</p>
<ul><li>GET /api/tasks?judge=ID</li><li>POST /api/rankings</li><li>GET /api/health</li></ul>
</body></html>
)";

}  // namespace

JudgeService::JudgeService(ClozeTest test, const std::vector<ResponseSheet>& sheets,
                           std::filesystem::path data_dir, std::size_t min_alternatives,
                           const NormalizeOptions& norm)
    : test_(std::move(test)), data_dir_(std::move(data_dir)) {
  for (int gap_id : filter_gaps(test_, sheets, min_alternatives, norm)) {
    tasks_.push_back({gap_id, extract_context(test_, gap_id), collect_candidates(test_, sheets, gap_id, norm)});
  }

  std::error_code ec;
  std::filesystem::create_directories(data_dir_, ec);
  if (ec) throw Error("cannot create data directory '" + data_dir_.string() + "': " + ec.message());
  const auto probe = data_dir_ / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out || !(out << "ok")) throw Error("data directory '" + data_dir_.string() + "' is not writable");
  }
  std::filesystem::remove(probe, ec);
}

const JudgeTask* JudgeService::find_task(int gap_id) const {
  for (const auto& t : tasks_) {
    if (t.gap_id == gap_id) return &t;
  }
  return nullptr;
}

JudgeService::Reply JudgeService::get_tasks(const std::string& judge_id) const {
  std::set<int> submitted;
  if (!judge_id.empty()) {
    if (!valid_judge_id(judge_id)) return bad_request("invalid judge id '" + judge_id + "'");
    const auto path = data_dir_ / session_filename(judge_id);
    std::lock_guard lock(write_mutex_);
    if (std::filesystem::exists(path)) {
      try {
        for (const auto& r : read_session(path).rankings) submitted.insert(r.table.gap_id);
      } catch (const Error& e) {
        return {500, {{"error", e.what()}}};
      }
    }
  }
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : tasks_) {
    out.push_back({{"gap_id", t.gap_id},
                   {"context", t.context},
                   {"candidates", t.candidates},
                   {"submitted", submitted.count(t.gap_id) > 0}});
  }
  return {200, out};
}

JudgeService::Reply JudgeService::submit(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    return bad_request(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) return bad_request("body must be a JSON object");
  if (!j.contains("judge_id") || !j["judge_id"].is_string()) return bad_request("judge_id must be a string");
  if (!j.contains("gap_id") || !j["gap_id"].is_number_integer()) return bad_request("gap_id must be an integer");
  if (!j.contains("ordered_candidates") || !j["ordered_candidates"].is_array()) {
    return bad_request("ordered_candidates must be an array of strings");
  }
  const auto judge_id = j["judge_id"].get<std::string>();
  const int gap_id = j["gap_id"].get<int>();
  if (!valid_judge_id(judge_id)) {
    return bad_request("invalid judge_id '" + judge_id + "' (letters, digits, '-', '_', '.'; max 64)");
  }
  const JudgeTask* task = find_task(gap_id);
  if (!task) return bad_request("gap " + std::to_string(gap_id) + " is not a judging task");

  std::vector<std::string> ordered;
  for (const auto& c : j["ordered_candidates"]) {
    if (!c.is_string()) return bad_request("ordered_candidates must be an array of strings");
    ordered.push_back(c.get<std::string>());
  }

  std::set<std::string> served(task->candidates.begin(), task->candidates.end());
  std::set<std::string> seen;
  nlohmann::json duplicates = nlohmann::json::array();
  nlohmann::json unknown = nlohmann::json::array();
  for (const auto& c : ordered) {
    if (!seen.insert(c).second) duplicates.push_back(c);
    if (!served.count(c)) unknown.push_back(c);
  }
  nlohmann::json missing = nlohmann::json::array();
  for (const auto& c : task->candidates) {
    if (!seen.count(c)) missing.push_back(c);
  }
  if (!missing.empty() || !unknown.empty() || !duplicates.empty()) {
    std::string msg = "ordered_candidates must be a permutation of the served candidates";
    auto list = [](const nlohmann::json& a) {
      std::string s;
      for (const auto& x : a) s += (s.empty() ? "'" : ", '") + x.get<std::string>() + "'";
      return s;
    };
    if (!missing.empty()) msg += "; missing " + list(missing);
    if (!unknown.empty()) msg += "; unknown " + list(unknown);
    if (!duplicates.empty()) msg += "; duplicate " + list(duplicates);
    return bad_request(msg, {{"missing", missing}, {"unknown", unknown}, {"duplicate", duplicates}});
  }

  const std::string now = utc_timestamp();
  const auto path = data_dir_ / session_filename(judge_id);
  std::lock_guard lock(write_mutex_);
  try {
    JudgeSession session;
    if (std::filesystem::exists(path)) {
      session = read_session(path);
      if (!session.test_id.empty() && session.test_id != test_.id) {
        return {409, {{"error", "session file belongs to test '" + session.test_id + "'"}}};
      }
    } else {
      session.session_id = test_.id + ":" + judge_id;
      session.judge_id = judge_id;
      session.created_at = now;
    }
    session.test_id = test_.id;
    session.updated_at = now;

    JudgeSubmission sub{ranking_from_order(gap_id, judge_id, ordered), now};
    auto it = std::find_if(session.rankings.begin(), session.rankings.end(),
                           [&](const auto& r) { return r.table.gap_id == gap_id; });
    const bool resubmission = it != session.rankings.end();
    if (resubmission) {
      *it = std::move(sub);
    } else {
      session.rankings.push_back(std::move(sub));
    }
    std::sort(session.rankings.begin(), session.rankings.end(),
              [](const auto& a, const auto& b) { return a.table.gap_id < b.table.gap_id; });
    std::size_t done = 0;
    for (const auto& t : tasks_) done += session.find(t.gap_id) ? 1 : 0;
    session.status = done == tasks_.size() ? "complete" : "in_progress";
    write_session_atomic(session, path);
    return {200,
            {{"status", "ok"},
             {"judge_id", judge_id},
             {"gap_id", gap_id},
             {"file", path.filename().string()},
             {"resubmission", resubmission},
             {"submitted", done},
             {"total", tasks_.size()}}};
  } catch (const Error& e) {
    return {500, {{"error", e.what()}}};
  }
}

JudgeServer::JudgeServer(JudgeService& service, std::filesystem::path ui_dir)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  // httplib defaults to SO_REUSEPORT, which lets a second server share a busy port.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
  });
  auto send = [](httplib::Response& res, const JudgeService::Reply& reply) {
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json; charset=utf-8");
  };

  server_->Get("/api/health", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, {200, {{"status", "ok"}, {"tasks", service_.tasks().size()}}});
  });
  server_->Get("/api/tasks", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.get_tasks(req.get_param_value("judge")));
  });
  server_->Post("/api/rankings", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.submit(req.body));
  });

  std::error_code ec;
  if (!ui_dir.empty() && std::filesystem::is_directory(ui_dir, ec)) {
    server_->set_mount_point("/", ui_dir.string());
  } else {
    server_->Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kFallbackPage, "text/html; charset=utf-8");
    });
  }
}

JudgeServer::~JudgeServer() { stop(); }

int JudgeServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound <= 0) throw Error("cannot bind to " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error("cannot bind to " + host + ":" + std::to_string(port) + " (port in use?)");
  }
  return port;
}

void JudgeServer::listen() { server_->listen_after_bind(); }

void JudgeServer::wait_until_ready() const { server_->wait_until_ready(); }

void JudgeServer::stop() {
  if (server_) server_->stop();
}

}  // namespace cloze
