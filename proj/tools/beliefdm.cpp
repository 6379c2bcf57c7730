// Command-line front end: train, eval, infer, extract, reason, chat, serve.
//
// Exit codes: 0 success, 1 usage, 2 configuration, 3 runtime.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "beliefdm/classifier.hpp"
#include "beliefdm/dialog.hpp"
#include "beliefdm/errors.hpp"
#include "beliefdm/extraction.hpp"
#include "beliefdm/kernels.hpp"
#include "beliefdm/logic.hpp"
#include "beliefdm/naive_bayes.hpp"
#include "beliefdm/service.hpp"

namespace bd = beliefdm;
using json = nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct ConfigFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runs `load`, reporting any failure as a configuration problem.
template <typename F>
auto configure(F&& load) {
  try {
    return load();
  } catch (const std::exception& e) {
    throw ConfigFailure(e.what());
  }
}

bd::service::AppConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  if (path.empty()) throw ConfigFailure("--config is required");
  auto cfg = configure([&] { return bd::service::AppConfig::load(path); });
  if (seed) cfg.seed = seed;
  return cfg;
}

json belief_json(const std::vector<std::string>& labels, const bd::BeliefDistribution& d) {
  return {{"label", labels[d.argmax()]}, {"labels", labels}, {"probs", d.probs}};
}

json evaluation_json(const bd::classifier::Evaluation& e) {
  return {{"accuracy", e.accuracy}, {"total", e.total}, {"confusion", e.confusion}};
}

std::vector<bd::naive_bayes::Document> nb_documents(
    const std::vector<bd::classifier::LabeledUtterance>& corpus, const std::vector<std::string>& labels,
    const bd::text::TextPipeline& pipeline) {
  std::vector<bd::naive_bayes::Document> docs;
  for (const auto& ex : corpus) {
    const auto it = std::find(labels.begin(), labels.end(), ex.label);
    if (it == labels.end()) throw bd::InputError("unknown label '" + ex.label + "'");
    docs.push_back({pipeline(ex.text), static_cast<std::size_t>(it - labels.begin())});
  }
  return docs;
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
  std::string corpus;
  std::string out;
  std::string report;
  std::optional<std::size_t> epochs;
};

int run_train(const bd::service::AppConfig& app, const TrainArgs& args) {
  const auto corpus_path = args.corpus.empty() ? app.corpus.string() : args.corpus;
  const auto out_path = args.out.empty() ? app.model.string() : args.out;
  if (corpus_path.empty()) throw ConfigFailure("no corpus given (--corpus or config 'corpus')");
  if (out_path.empty()) throw ConfigFailure("no output path given (--out or config 'model')");
  const auto corpus = configure([&] { return bd::classifier::load_corpus(corpus_path); });
  const auto pipeline = configure([&] { return bd::service::load_pipeline(app); });

  bd::classifier::TrainConfig cfg;
  if (app.seed) cfg.rng_seed = *app.seed;
  if (args.epochs) cfg.epochs = *args.epochs;
  const auto result = bd::classifier::train(corpus, cfg, pipeline);
  for (const auto& e : result.report.epochs)
    std::printf("epoch %2zu  loss %.6f  train_acc %.4f\n", e.epoch, e.train_loss, e.train_accuracy);
  if (result.report.test)
    std::printf("held-out accuracy %.4f (%zu examples)\n", result.report.test->accuracy,
                result.report.test->total);
  for (const auto& w : result.report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  bd::classifier::save_model(result.model, out_path);
  std::printf("model written to %s\n", out_path.c_str());

  if (!args.report.empty()) {
    json j;
    j["train_size"] = result.report.train_size;
    j["test_size"] = result.report.test_size;
    j["epochs"] = json::array();
    for (const auto& e : result.report.epochs)
      j["epochs"].push_back({{"epoch", e.epoch}, {"loss", e.train_loss}, {"accuracy", e.train_accuracy}});
    j["test"] = result.report.test ? evaluation_json(*result.report.test) : json(nullptr);
    std::ofstream(args.report) << j.dump(2) << '\n';
  }
  return 0;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::string corpus;
  std::string baseline_train;
};

int run_eval(const bd::service::AppConfig& app, const EvalArgs& args) {
  const auto model_path = args.model.empty() ? app.model.string() : args.model;
  const auto corpus_path = args.corpus.empty() ? app.corpus.string() : args.corpus;
  const auto model = configure([&] { return bd::classifier::load_model(model_path); });
  const auto corpus = configure([&] { return bd::classifier::load_corpus(corpus_path); });
  const auto pipeline = configure([&] { return bd::service::load_pipeline(app); });

  json out;
  out["lstm"] = evaluation_json(bd::classifier::evaluate(model, corpus, pipeline));
  if (!args.baseline_train.empty()) {
    const auto train_corpus = configure([&] { return bd::classifier::load_corpus(args.baseline_train); });
    const auto nb = bd::naive_bayes::train(nb_documents(train_corpus, model.labels, pipeline), model.labels);
    std::size_t correct = 0;
    const auto docs = nb_documents(corpus, model.labels, pipeline);
    for (const auto& d : docs) correct += bd::naive_bayes::predict(nb, d.tokens).argmax() == d.label;
    out["naive_bayes"] = {{"accuracy", docs.empty() ? 0.0 : double(correct) / double(docs.size())},
                          {"total", docs.size()}};
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

// --- infer / extract / reason --------------------------------------------------

int run_infer(const bd::service::AppConfig& app, const std::string& model_arg, const std::string& text) {
  const auto model = configure([&] {
    return bd::classifier::load_model(model_arg.empty() ? app.model : std::filesystem::path(model_arg));
  });
  const auto pipeline = configure([&] { return bd::service::load_pipeline(app); });
  std::cout << belief_json(model.labels, model.predict(pipeline(text))).dump(2) << '\n';
  return 0;
}

int run_extract(const bd::service::AppConfig& app, const std::string& text) {
  const auto entities = configure([&] { return bd::text::EntityLexicon::load(app.entities); });
  const auto rules = configure([&] { return bd::extraction::FactAssertionRules::load(app.assertion_rules); });
  const auto lexicon = configure([&] { return bd::extraction::SynonymLexicon::load(app.lexicon); });
  auto grammar = bd::extraction::ExtractionGrammar::defaults();
  const auto verbs = rules.verbs();
  grammar.verbs.insert(verbs.begin(), verbs.end());

  const auto triples = bd::extraction::extract_triples({text, bd::text::Speaker::user, 0}, grammar);
  json out{{"triples", json::array()}, {"facts", json::array()}};
  for (const auto& t : triples)
    out["triples"].push_back({{"subject", t.subject_text}, {"verb", t.verb_text}, {"object", t.object_text},
                              {"sentence", t.source_sentence}});
  for (const auto& f : bd::extraction::assert_facts(triples, rules, lexicon, entities))
    out["facts"].push_back(f.to_string());
  std::cout << out.dump(2) << '\n';
  return 0;
}

struct ReasonArgs {
  std::string rules;
  std::string facts;
  std::size_t max_facts = bd::logic::InferenceLimits{}.max_facts;
  std::size_t max_iterations = bd::logic::InferenceLimits{}.max_iterations;
};

json inference_json(const bd::logic::InferenceResult& r) {
  json out{{"derived", json::array()}, {"trace", json::array()}, {"iterations", r.iterations}};
  for (const auto& f : r.derived) out["derived"].push_back(f.to_string());
  for (const auto& t : r.trace) {
    json b = json::object();
    for (const auto& [k, v] : t.bindings) b[k] = v.to_string();
    json produced = json::array();
    for (const auto& f : t.produced) produced.push_back(f.to_string());
    out["trace"].push_back({{"rule", t.rule_id}, {"bindings", b}, {"produced", produced}});
  }
  const auto d = bd::logic::derive_directives(r);
  json fills = json::object();
  for (const auto& [slot, values] : d.slot_fill) fills[slot] = values;
  out["directives"] = {{"skip", d.skip}, {"ask", d.ask}, {"slot_fill", fills}, {"knows", d.knows}};
  return out;
}

int run_reason(const ReasonArgs& args) {
  const auto rules = configure([&] { return bd::logic::load_rules(args.rules); });
  const auto facts = configure([&] { return bd::logic::load_facts(args.facts); });
  try {
    std::cout << inference_json(bd::logic::forward_chain(rules, facts, {args.max_facts, args.max_iterations}))
                     .dump(2)
              << '\n';
  } catch (const bd::logic::ResourceError& e) {
    json out = inference_json(e.partial());
    out["error"] = e.what();
    std::cout << out.dump(2) << '\n';
    return kExitRuntime;
  }
  return 0;
}

// --- chat / serve ------------------------------------------------------------

std::shared_ptr<const bd::dialog::DialogEngine> make_engine(const bd::service::AppConfig& app) {
  auto assets = configure([&] { return bd::service::load_assets(app); });
  return configure([&] { return std::make_shared<const bd::dialog::DialogEngine>(std::move(assets)); });
}

int run_chat(const bd::service::AppConfig& app, bool verbose) {
  const auto engine = make_engine(app);
  auto session = engine->new_session("cli", bd::service::now_timestamp());
  std::cout << "advisor> " << session.transcript.front().text << '\n';
  std::string line;
  while (session.status == bd::dialog::SessionStatus::active) {
    std::cout << "you> " << std::flush;
    if (!std::getline(std::cin, line)) break;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto reply = engine->process_turn(session, line, bd::service::now_timestamp());
    std::cout << "advisor> " << reply.text << '\n';
    if (verbose) {
      std::cout << "  belief " << reply.belief_label << ", fired [";
      for (std::size_t i = 0; i < reply.fired_rules.size(); ++i)
        std::cout << (i ? " " : "") << reply.fired_rules[i];
      std::cout << "], skipped [";
      for (std::size_t i = 0; i < reply.skipped_states.size(); ++i)
        std::cout << (i ? " " : "") << reply.skipped_states[i];
      std::cout << "]\n";
      for (const auto& w : reply.warnings) std::cout << "  warning: " << w << '\n';
    }
  }
  return 0;
}

int run_serve(const bd::service::AppConfig& app, std::optional<int> port) {
  const auto engine = make_engine(app);
  auto store = configure([&] { return std::make_unique<bd::service::SessionStore>(engine, app.journal, app.seed); });
  if (store->skipped_records() > 0)
    std::fprintf(stderr, "journal: skipped %zu unreadable record(s)\n", store->skipped_records());

  // Handle SIGINT/SIGTERM on a dedicated thread so the server can stop cleanly.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  httplib::Server server;
  bd::service::Api api(*store);
  api.install(server);
  const int listen_port = port.value_or(app.port);
  if (!server.bind_to_port("127.0.0.1", listen_port)) {
    std::fprintf(stderr, "error: cannot bind port %d\n", listen_port);
    return kExitRuntime;
  }
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  std::fprintf(stderr, "serving on http://127.0.0.1:%d (kernels: %s, %zu session(s) restored)\n", listen_port,
               std::string(bd::kernels::backend_name(bd::kernels::active_backend())).c_str(),
               store->session_ids().size());
  server.listen_after_bind();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Belief-driven course advising dialog manager"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--seed", seed, "Seed for training and session ids");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train the LSTM belief classifier");
  train->add_option("--corpus", train_args.corpus, "Labeled corpus (label<TAB>utterance)");
  train->add_option("--out", train_args.out, "Model output path");
  train->add_option("--report", train_args.report, "Write a JSON training report here");
  train->add_option("--epochs", train_args.epochs, "Override the number of epochs")->check(CLI::PositiveNumber);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate a trained model on a labeled corpus");
  eval->add_option("--model", eval_args.model, "Model path");
  eval->add_option("--corpus", eval_args.corpus, "Labeled test corpus");
  eval->add_option("--baseline-train", eval_args.baseline_train,
                   "Also train naive Bayes on this corpus and report its accuracy");

  std::string infer_text, infer_model;
  auto* infer = app.add_subcommand("infer", "Classify the belief behind one utterance");
  infer->add_option("text", infer_text, "Utterance")->required();
  infer->add_option("--model", infer_model, "Model path");

  std::string extract_text;
  auto* extract = app.add_subcommand("extract", "Extract triples and asserted facts from an utterance");
  extract->add_option("text", extract_text, "Utterance")->required();

  ReasonArgs reason_args;
  auto* reason = app.add_subcommand("reason", "Forward-chain rules over facts");
  reason->add_option("--rules", reason_args.rules, "Rule file")->required();
  reason->add_option("--facts", reason_args.facts, "Fact file")->required();
  reason->add_option("--max-facts", reason_args.max_facts, "Fact limit");
  reason->add_option("--max-iterations", reason_args.max_iterations, "Round limit");

  bool verbose = false;
  auto* chat = app.add_subcommand("chat", "Interactive advising session on the terminal");
  chat->add_flag("-v,--verbose", verbose, "Show belief, fired rules and skipped states");

  std::optional<int> port;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  app.add_option("--port", port, "Listen port (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*reason) return run_reason(reason_args);
    const auto cfg = load_config(config_path, seed);
    if (*train) return run_train(cfg, train_args);
    if (*eval) return run_eval(cfg, eval_args);
    if (*infer) return run_infer(cfg, infer_model, infer_text);
    if (*extract) return run_extract(cfg, extract_text);
    if (*chat) return run_chat(cfg, verbose);
    if (*serve) return run_serve(cfg, port);
  } catch (const ConfigFailure& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
