#include "beliefdm/service.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <random>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "beliefdm/errors.hpp"
#include "beliefdm/io_util.hpp"
#include "beliefdm/kernels.hpp"

namespace beliefdm::service {

// ---------------------------------------------------------------------------
// Configuration

AppConfig AppConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  AppConfig cfg;
  auto path = [&](const char* key, std::filesystem::path& out, bool required) {
    if (!j.contains(key)) {
      if (required) throw ConfigError(std::string("config is missing '") + key + "'");
      return;
    }
    if (!j.at(key).is_string()) throw ConfigError(std::string("config '") + key + "' must be a string");
    std::filesystem::path p = j.at(key).get<std::string>();
    out = p.is_absolute() ? p : base_dir / p;
  };
  path("model", cfg.model, false);
  path("corpus", cfg.corpus, false);
  path("stopwords", cfg.stopwords, true);
  path("entities", cfg.entities, true);
  path("lexicon", cfg.lexicon, true);
  path("assertion_rules", cfg.assertion_rules, true);
  path("rules", cfg.rules, true);
  path("ontology", cfg.ontology, true);
  path("fsm", cfg.fsm, true);
  path("policy", cfg.policy, true);
  path("journal", cfg.journal, false);
  try {
    if (j.contains("port")) cfg.port = j.at("port").get<int>();
    if (j.contains("classifier")) cfg.classifier = j.at("classifier").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (cfg.classifier == "lstm" && cfg.model.empty())
    throw ConfigError("config uses the lstm classifier but names no model");
  return cfg;
}

AppConfig AppConfig::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(util::read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

text::TextPipeline load_pipeline(const AppConfig& cfg) {
  return text::TextPipeline{text::load_stopwords(cfg.stopwords), text::EntityLexicon::load(cfg.entities)};
}

dialog::EngineAssets load_assets(const AppConfig& cfg) {
  dialog::EngineAssets a;
  auto pipeline = load_pipeline(cfg);
  a.entities = pipeline.entities;
  if (cfg.classifier == "lstm") {
    a.predictor = std::make_shared<dialog::LstmBeliefPredictor>(classifier::load_model(cfg.model),
                                                                std::move(pipeline));
  } else if (cfg.classifier.starts_with("fixed:")) {
    a.predictor = std::make_shared<dialog::FixedBeliefPredictor>(default_belief_labels(),
                                                                 cfg.classifier.substr(6));
  } else {
    throw ConfigError("unknown classifier '" + cfg.classifier + "'");
  }
  a.assertion_rules = extraction::FactAssertionRules::load(cfg.assertion_rules);
  a.lexicon = extraction::SynonymLexicon::load(cfg.lexicon);
  a.rules = logic::load_rules(cfg.rules.string());
  a.graph = kb::KnowledgeGraph::load(cfg.ontology);
  a.fsm = std::make_shared<const dialog::Fsm>(dialog::Fsm::load(cfg.fsm));
  a.policy = dialog::PolicyConfig::load(cfg.policy);
  return a;
}

// ---------------------------------------------------------------------------
// Wire format

json reply_to_json(const dialog::AdvisorReply& r) {
  json j;
  j["reply"] = r.text;
  j["belief"] = {{"label", r.belief_label}, {"labels", r.labels}, {"probs", r.belief.probs}};
  j["fired_rules"] = r.fired_rules;
  j["skipped_states"] = r.skipped_states;
  j["ask_states"] = r.ask_states;
  j["asked_state"] = r.asked_state ? json(*r.asked_state) : json(nullptr);
  j["slots"] = r.slots;
  j["recommended_course"] = r.recommended_course ? json(*r.recommended_course) : json(nullptr);
  j["status"] = r.status;
  j["warnings"] = r.warnings;
  return j;
}

dialog::AdvisorReply reply_from_json(const json& j) {
  dialog::AdvisorReply r;
  r.text = j.at("reply").get<std::string>();
  r.belief_label = j.at("belief").at("label").get<std::string>();
  r.labels = j.at("belief").at("labels").get<std::vector<std::string>>();
  r.belief.probs = j.at("belief").at("probs").get<std::vector<double>>();
  r.fired_rules = j.at("fired_rules").get<std::vector<std::string>>();
  r.skipped_states = j.at("skipped_states").get<std::vector<std::string>>();
  r.ask_states = j.at("ask_states").get<std::vector<std::string>>();
  if (!j.at("asked_state").is_null()) r.asked_state = j.at("asked_state").get<std::string>();
  r.slots = j.at("slots").get<std::map<std::string, std::string>>();
  if (!j.at("recommended_course").is_null())
    r.recommended_course = j.at("recommended_course").get<std::string>();
  r.status = j.at("status").get<std::string>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

json turn_response(const std::string& session_id, const dialog::AdvisorReply& reply) {
  json j = reply_to_json(reply);
  j["session_id"] = session_id;
  return j;
}

json session_to_json(const dialog::DialogSession& s) {
  json j;
  j["id"] = s.id;
  j["status"] = std::string(dialog::to_string(s.status));
  j["weights"] = s.weights;
  j["slots"] = s.slots;
  j["belief_history"] = json::array();
  for (const auto& b : s.belief_history)
    j["belief_history"].push_back({{"turn", b.turn}, {"label", b.label}, {"probs", b.dist.probs}});
  j["facts"] = json::array();
  for (const auto& f : s.facts) j["facts"].push_back(f.to_string());
  j["constraints"] = json::array();
  for (const auto& [attr, value] : s.constraints) j["constraints"].push_back({attr, value});
  j["pending_state"] = s.pending_state ? json(*s.pending_state) : json(nullptr);
  j["transcript"] = json::array();
  for (const auto& m : s.transcript) {
    json msg{{"speaker", m.speaker == text::Speaker::user ? "user" : "advisor"},
             {"text", m.text},
             {"timestamp", m.timestamp}};
    if (m.payload) msg["payload"] = reply_to_json(*m.payload);
    j["transcript"].push_back(std::move(msg));
  }
  return j;
}

dialog::DialogSession session_from_json(const json& j) {
  dialog::DialogSession s;
  s.id = j.at("id").get<std::string>();
  const auto status = j.at("status").get<std::string>();
  if (status != "active" && status != "completed") throw FormatError("unknown session status " + status);
  s.status = status == "active" ? dialog::SessionStatus::active : dialog::SessionStatus::completed;
  s.weights = j.at("weights").get<std::map<std::string, double>>();
  s.slots = j.at("slots").get<std::map<std::string, std::string>>();
  for (const auto& b : j.at("belief_history"))
    s.belief_history.push_back({b.at("turn").get<std::size_t>(), b.at("label").get<std::string>(),
                                BeliefDistribution{b.at("probs").get<std::vector<double>>()}});
  for (const auto& f : j.at("facts"))
    s.facts.insert(logic::Fact::from_literal(logic::parse_literal(f.get<std::string>())));
  for (const auto& c : j.at("constraints"))
    s.constraints.emplace(c.at(0).get<std::string>(), c.at(1).get<std::string>());
  if (!j.at("pending_state").is_null()) s.pending_state = j.at("pending_state").get<std::string>();
  for (const auto& m : j.at("transcript")) {
    dialog::Message msg;
    msg.speaker = m.at("speaker").get<std::string>() == "user" ? text::Speaker::user : text::Speaker::advisor;
    msg.text = m.at("text").get<std::string>();
    msg.timestamp = m.at("timestamp").get<std::string>();
    if (m.contains("payload")) msg.payload = reply_from_json(m.at("payload"));
    s.transcript.push_back(std::move(msg));
  }
  return s;
}

std::string now_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm utc{};
  gmtime_r(&secs, &utc);
  std::ostringstream out;
  out << std::put_time(&utc, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
  return out.str();
}

// ---------------------------------------------------------------------------
// SessionStore

SessionStore::SessionStore(std::shared_ptr<const dialog::DialogEngine> engine,
                           std::filesystem::path journal, std::optional<std::uint64_t> seed)
    : engine_(std::move(engine)), journal_path_(std::move(journal)) {
  id_state_ = seed ? *seed : (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();
  if (journal_path_.empty()) return;
  replay();
  journal_.open(journal_path_, std::ios::app | std::ios::binary);
  if (!journal_) throw Error("cannot open journal " + journal_path_.string());
}

SessionStore::~SessionStore() = default;

void SessionStore::replay() {
  std::ifstream in(journal_path_, std::ios::binary);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (util::trim(line).empty()) continue;
    try {
      const auto rec = json::parse(line);
      auto session = session_from_json(rec.at("snapshot"));
      auto entry = std::make_shared<Entry>();
      entry->session = std::move(session);
      sessions_[entry->session.id] = std::move(entry);
      ++replayed_;
    } catch (const std::exception&) {
      ++skipped_;  // torn write from a crash
    }
  }
  // A torn final record leaves no newline; start the next record on a fresh line.
  if (skipped_ > 0) {
    std::ofstream fix(journal_path_, std::ios::app | std::ios::binary);
    fix << '\n';
  }
}

void SessionStore::append_journal(const dialog::DialogSession& s) {
  if (journal_path_.empty()) return;
  const json rec{{"kind", "session"}, {"snapshot", session_to_json(s)}};
  std::lock_guard lock(journal_mutex_);
  journal_ << rec.dump() << '\n';
  journal_.flush();
  if (!journal_) throw ServiceError(500, "store_unavailable", "journal write failed");
}

std::string SessionStore::fresh_id() {
  std::lock_guard lock(id_mutex_);
  while (true) {
    // splitmix64
    std::uint64_t z = (id_state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << z;
    std::lock_guard map_lock(map_mutex_);
    if (!sessions_.contains(out.str())) return out.str();
  }
}

std::string SessionStore::create_session() {
  const auto id = fresh_id();
  auto entry = std::make_shared<Entry>();
  entry->session = engine_->new_session(id, now_timestamp());
  append_journal(entry->session);
  std::lock_guard lock(map_mutex_);
  sessions_[id] = std::move(entry);
  return id;
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& id) const {
  std::lock_guard lock(map_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "not_found", "no session '" + id + "'");
  return it->second;
}

dialog::AdvisorReply SessionStore::post_message(const std::string& id, const std::string& text) {
  if (util::trim(text).empty()) throw ServiceError(400, "validation", "message text is empty");
  auto entry = find(id);
  std::unique_lock turn(entry->turn, std::try_to_lock);
  if (!turn.owns_lock())
    throw ServiceError(409, "busy", "another message for session '" + id + "' is in progress");

  dialog::DialogSession work;
  {
    std::lock_guard state(entry->state);
    work = entry->session;
  }
  if (work.status != dialog::SessionStatus::active)
    throw ServiceError(409, "conflict", "session '" + id + "' is completed");

  dialog::AdvisorReply reply;
  try {
    reply = engine_->process_turn(work, text, now_timestamp());
  } catch (const ServiceError&) {
    throw;
  } catch (const std::exception& e) {
    throw ServiceError(500, "turn_failed", e.what());
  }
  append_journal(work);
  std::lock_guard state(entry->state);
  entry->session = std::move(work);
  return reply;
}

dialog::DialogSession SessionStore::get_session(const std::string& id) const {
  auto entry = find(id);
  std::lock_guard state(entry->state);
  return entry->session;
}

std::vector<std::string> SessionStore::session_ids() const {
  std::lock_guard lock(map_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, e] : sessions_) ids.push_back(id);
  return ids;
}

// ---------------------------------------------------------------------------
// Api

namespace {

json error_body(const std::string& code, const std::string& message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

}  // namespace

HttpResult Api::handle(const std::string& method, const std::string& path, const std::string& body) {
  static const std::regex messages_re(R"(^/api/sessions/([A-Za-z0-9_-]+)/messages$)");
  static const std::regex session_re(R"(^/api/sessions/([A-Za-z0-9_-]+)$)");
  std::smatch m;
  try {
    if (path == "/api/health") {
      if (method != "GET") return {405, error_body("method_not_allowed", "use GET")};
      return {200, {{"status", "ok"},
                    {"kernels", std::string(kernels::backend_name(kernels::active_backend()))},
                    {"sessions", store_.session_ids().size()}}};
    }
    if (path == "/api/sessions") {
      if (method != "POST") return {405, error_body("method_not_allowed", "use POST")};
      const auto id = store_.create_session();
      const auto snap = session_to_json(store_.get_session(id));
      return {201, {{"session_id", id}, {"status", snap["status"]}, {"transcript", snap["transcript"]}}};
    }
    if (std::regex_match(path, m, messages_re)) {
      if (method != "POST") return {405, error_body("method_not_allowed", "use POST")};
      json req;
      try {
        req = json::parse(body);
      } catch (const json::parse_error&) {
        return {400, error_body("validation", "body must be a JSON object with a 'text' field")};
      }
      if (!req.is_object() || !req.contains("text") || !req["text"].is_string())
        return {400, error_body("validation", "body must be a JSON object with a 'text' field")};
      const std::string id = m[1];
      const auto reply = store_.post_message(id, req["text"].get<std::string>());
      return {200, turn_response(id, reply)};
    }
    if (std::regex_match(path, m, session_re)) {
      if (method != "GET") return {405, error_body("method_not_allowed", "use GET")};
      return {200, session_to_json(store_.get_session(m[1]))};
    }
    return {404, error_body("not_found", "no route " + method + " " + path)};
  } catch (const ServiceError& e) {
    return {e.status(), error_body(e.code(), e.what())};
  } catch (const std::exception& e) {
    return {500, error_body("internal", e.what())};
  }
}

void Api::install(httplib::Server& server) {
  auto respond = [this](const httplib::Request& req, httplib::Response& res) {
    const auto result = handle(req.method, req.path, req.body);
    res.status = result.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(result.body.dump(), "application/json");
  };
  server.Get(R"(/api/.*)", respond);
  server.Post(R"(/api/.*)", respond);
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

}  // namespace beliefdm::service
