#include <doctest.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <future>
#include <thread>

#include <httplib.h>

#include "beliefdm/errors.hpp"
#include "beliefdm/service.hpp"
#include "support.hpp"

namespace bd = beliefdm;
namespace svc = beliefdm::service;
using json = nlohmann::json;

namespace {

json post_json(svc::Api& api, const std::string& path, const json& body) {
  const auto r = api.handle("POST", path, body.dump());
  json out = r.body;
  out["_status"] = r.status;
  return out;
}

// Holds every prediction until released, so a turn can be kept in flight.
class GatePredictor : public bd::dialog::BeliefPredictor {
 public:
  const std::vector<std::string>& labels() const override { return labels_; }
  bd::BeliefDistribution predict(std::string_view) const override {
    entered.store(true);
    while (!open.load()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
    return {{1.0, 0.0, 0.0}};
  }
  mutable std::atomic<bool> entered{false};
  std::atomic<bool> open{false};

 private:
  std::vector<std::string> labels_ = bd::default_belief_labels();
};

}  // namespace

TEST_SUITE("service") {

TEST_CASE("config resolves paths relative to its file") {
  const auto cfg = svc::AppConfig::load(testing::data_path("config.json"));
  CHECK(cfg.fsm == testing::data_path("advisor.fsm"));
  CHECK(cfg.port == 8080);
  CHECK_THROWS_AS(svc::AppConfig::from_json(json{{"fsm", "x"}}, "/"), bd::ConfigError);
  auto j = json::parse(R"({"stopwords":"a","entities":"b","lexicon":"c","assertion_rules":"d",
                           "rules":"e","ontology":"f","fsm":"g","policy":"h","classifier":"fixed:curious"})");
  CHECK(svc::AppConfig::from_json(j, "/base").rules == "/base/e");
  j["port"] = "eighty";
  CHECK_THROWS_AS(svc::AppConfig::from_json(j, "/base"), bd::ConfigError);
  auto bad = testing::bundled_config();
  bad.rules = "/nonexistent.rules";
  CHECK_THROWS(svc::load_assets(bad));
}

TEST_CASE("session JSON round trip") {
  const auto engine = testing::bundled_engine();
  auto s = engine->new_session("abc", "t0");
  engine->process_turn(s, testing::advising_script()[0], "t1");
  CHECK(svc::session_from_json(json::parse(svc::session_to_json(s).dump())) == s);
}

TEST_CASE("routes, errors and the advising script over the API") {
  svc::SessionStore store(testing::bundled_engine(), {}, 1);
  svc::Api api(store);

  CHECK(api.handle("GET", "/api/health", "").body["status"] == "ok");
  const auto created = post_json(api, "/api/sessions", json::object());
  CHECK(created["_status"] == 201);
  const std::string id = created["session_id"];
  CHECK(created["transcript"][0]["text"].get<std::string>().starts_with("Hi! I am your advisor."));
  CHECK(post_json(api, "/api/sessions", json::object())["session_id"] != id);

  CHECK(api.handle("GET", "/api/sessions/nope", "").status == 404);
  CHECK(api.handle("GET", "/api/sessions/nope", "").body["error"]["code"] == "not_found");
  CHECK(post_json(api, "/api/sessions/nope/messages", {{"text", "hi"}})["_status"] == 404);
  CHECK(post_json(api, "/api/sessions/" + id + "/messages", {{"text", "  "}})["_status"] == 400);
  CHECK(api.handle("POST", "/api/sessions/" + id + "/messages", "not json").status == 400);
  CHECK(api.handle("DELETE", "/api/sessions/" + id, "").status == 405);
  CHECK(api.handle("GET", "/elsewhere", "").status == 404);

  json last;
  const auto& script = testing::advising_script();
  for (std::size_t i = 0; i < script.size(); ++i) {
    last = post_json(api, "/api/sessions/" + id + "/messages", {{"text", script[i]}});
    REQUIRE(last["_status"] == 200);
    if (i == 0) {
      const auto skipped = last["skipped_states"].get<std::vector<std::string>>();
      CHECK(std::count(skipped.begin(), skipped.end(), "ask_interest") == 1);
      CHECK(std::count(skipped.begin(), skipped.end(), "ask_semester") == 1);
    }
  }
  CHECK(last["status"] == "completed");
  CHECK(last["recommended_course"] == "stats250");
  CHECK(last["reply"].get<std::string>().find("STATS250") != std::string::npos);
  for (const char* field : {"session_id", "reply", "belief", "fired_rules", "skipped_states", "ask_states",
                            "asked_state", "slots", "status", "warnings"})
    CHECK(last.contains(field));

  const auto snap = api.handle("GET", "/api/sessions/" + id, "").body;
  CHECK(snap["transcript"].size() == 1 + 2 * script.size());
  CHECK(snap["slots"] == last["slots"]);
  for (const auto& [state, w] : snap["weights"].items()) {
    CHECK(w.get<double>() >= 0.0);
    CHECK(w.get<double>() <= 1.0);
  }
  const auto done = post_json(api, "/api/sessions/" + id + "/messages", {{"text", "thanks"}});
  CHECK(done["_status"] == 409);
  CHECK(api.handle("GET", "/api/sessions/" + id, "").body == snap);
}

TEST_CASE("journal replay restores sessions") {
  const auto dir = testing::temp_dir("journal");
  const auto journal = dir / "sessions.journal";
  std::vector<bd::dialog::DialogSession> before;
  {
    svc::SessionStore store(testing::bundled_engine(), journal, 3);
    const auto a = store.create_session();
    const auto b = store.create_session();
    store.post_message(a, testing::advising_script()[0]);
    store.post_message(b, "hmm");
    store.post_message(a, testing::advising_script()[1]);
    before = {store.get_session(a), store.get_session(b)};
  }
  svc::SessionStore restored(testing::bundled_engine(), journal, 4);
  CHECK(restored.replayed_records() == 5);
  CHECK(restored.session_ids().size() == 2);
  for (const auto& s : before) CHECK(restored.get_session(s.id) == s);

  // A torn final record is skipped and later appends still parse.
  {
    std::ofstream out(journal, std::ios::app);
    out << "{\"kind\": \"session\", \"snap";
  }
  {
    svc::SessionStore torn(testing::bundled_engine(), journal, 5);
    CHECK(torn.skipped_records() == 1);
    torn.post_message(before[1].id, "I prefer morning classes");
  }
  svc::SessionStore again(testing::bundled_engine(), journal, 6);
  CHECK(again.skipped_records() == 1);
  CHECK(again.get_session(before[1].id).slots.at("timing") == "morning");
}

TEST_CASE("a second concurrent turn on one session is refused") {
  auto assets = svc::load_assets(testing::bundled_config());
  auto gate = std::make_shared<GatePredictor>();
  assets.predictor = gate;
  svc::SessionStore store(std::make_shared<const bd::dialog::DialogEngine>(std::move(assets)), {}, 7);
  const auto id = store.create_session();
  const auto other = store.create_session();

  auto first = std::async(std::launch::async, [&] { return store.post_message(id, "hmm"); });
  while (!gate->entered.load()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  try {
    store.post_message(id, "again");
    FAIL("expected busy");
  } catch (const svc::ServiceError& e) {
    CHECK(e.status() == 409);
    CHECK(e.code() == "busy");
  }
  gate->open.store(true);
  first.get();
  CHECK(store.get_session(id).transcript.size() == 3);
  store.post_message(other, "hmm");  // other sessions were never blocked
  CHECK(store.get_session(other).transcript.size() == 3);
}

TEST_CASE("the HTTP server exposes the same routes") {
  svc::SessionStore store(testing::bundled_engine(), {}, 8);
  svc::Api api(store);
  httplib::Server server;
  api.install(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/api/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");
  auto created = client.Post("/api/sessions", "{}", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const auto id = json::parse(created->body)["session_id"].get<std::string>();
  auto turn = client.Post("/api/sessions/" + id + "/messages", json{{"text", testing::advising_script()[0]}}.dump(),
                          "application/json");
  REQUIRE(turn);
  CHECK(turn->status == 200);
  CHECK(json::parse(turn->body)["asked_state"] == "ask_workload");
  auto missing = client.Get("/api/sessions/zzz");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  auto preflight = client.Options("/api/sessions");
  REQUIRE(preflight);
  CHECK(preflight->status == 204);

  server.stop();
  t.join();
}

}  // TEST_SUITE
