#pragma once

// Session service: configuration, JSON wire format, a journaled session store
// and the HTTP routes.
//
// Routes:
//   POST /api/sessions                  -> 201 {session_id, status, transcript}
//   POST /api/sessions/{id}/messages    -> 200 turn response   body: {"text": "..."}
//   GET  /api/sessions/{id}             -> 200 session snapshot
//   GET  /api/health                    -> 200 {"status": "ok", ...}
// Errors: {"error": {"code": ..., "message": ...}} with 400/404/409/500.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "beliefdm/dialog.hpp"

namespace httplib {
class Server;
}

namespace beliefdm::service {

using json = nlohmann::json;

/// Paths are resolved relative to the config file's directory.
struct AppConfig {
  std::filesystem::path model;
  std::filesystem::path corpus;
  std::filesystem::path stopwords;
  std::filesystem::path entities;
  std::filesystem::path lexicon;
  std::filesystem::path assertion_rules;
  std::filesystem::path rules;
  std::filesystem::path ontology;
  std::filesystem::path fsm;
  std::filesystem::path policy;
  std::filesystem::path journal;
  int port = 8080;
  /// "lstm" loads `model`; "fixed:<label>" answers every turn with that label.
  std::string classifier = "lstm";
  std::optional<std::uint64_t> seed;

  static AppConfig load(const std::filesystem::path& path);
  static AppConfig from_json(const json& j, const std::filesystem::path& base_dir);
};

/// Loads every referenced file; throws on the first one that fails.
dialog::EngineAssets load_assets(const AppConfig& cfg);
text::TextPipeline load_pipeline(const AppConfig& cfg);

json reply_to_json(const dialog::AdvisorReply& reply);
dialog::AdvisorReply reply_from_json(const json& j);
json session_to_json(const dialog::DialogSession& s);
dialog::DialogSession session_from_json(const json& j);

/// Turn response: the reply plus its session id.
json turn_response(const std::string& session_id, const dialog::AdvisorReply& reply);

class ServiceError : public Error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : Error(message), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

std::string now_timestamp();

/// Sessions in memory, mirrored to an append-only journal of full session
/// snapshots (one JSON object per line). Replaying the journal keeps the last
/// snapshot of each session. Turns on one session are serialized; a second
/// concurrent turn gets a 409 `busy` error instead of waiting.
class SessionStore {
 public:
  /// Empty journal path disables persistence.
  SessionStore(std::shared_ptr<const dialog::DialogEngine> engine,
               std::filesystem::path journal, std::optional<std::uint64_t> seed = std::nullopt);
  ~SessionStore();

  std::string create_session();
  dialog::AdvisorReply post_message(const std::string& id, const std::string& text);
  dialog::DialogSession get_session(const std::string& id) const;
  std::vector<std::string> session_ids() const;
  std::size_t replayed_records() const { return replayed_; }
  /// Lines of the journal that could not be parsed (e.g. a torn final write).
  std::size_t skipped_records() const { return skipped_; }

 private:
  struct Entry {
    std::mutex turn;
    mutable std::mutex state;
    dialog::DialogSession session;
  };

  std::shared_ptr<Entry> find(const std::string& id) const;
  void append_journal(const dialog::DialogSession& s);
  void replay();
  std::string fresh_id();

  std::shared_ptr<const dialog::DialogEngine> engine_;
  std::filesystem::path journal_path_;
  std::ofstream journal_;
  std::mutex journal_mutex_;
  mutable std::mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::mutex id_mutex_;
  std::uint64_t id_state_;
  std::size_t replayed_ = 0;
  std::size_t skipped_ = 0;
};

struct HttpResult {
  int status = 200;
  json body;
};

/// Route dispatch without a socket; the HTTP server and tests share it.
class Api {
 public:
  explicit Api(SessionStore& store) : store_(store) {}
  HttpResult handle(const std::string& method, const std::string& path, const std::string& body);

  /// Registers the routes (plus permissive CORS) on an httplib server.
  void install(httplib::Server& server);

 private:
  SessionStore& store_;
};

}  // namespace beliefdm::service
