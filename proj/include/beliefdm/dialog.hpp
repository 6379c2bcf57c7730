#pragma once

// Finite-state dialog policy driven by latent beliefs and epistemic inference.
//
// One turn runs: classify belief -> extract triples -> assert facts -> enrich
// from the ontology -> forward chain -> project directives -> fill slots ->
// re-weight states -> partition into ask/skip -> reply with the first ask
// state's prompt, or a course recommendation once nothing is left to ask.

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "beliefdm/belief.hpp"
#include "beliefdm/classifier.hpp"
#include "beliefdm/extraction.hpp"
#include "beliefdm/knowledge_base.hpp"
#include "beliefdm/logic.hpp"
#include "beliefdm/text.hpp"

namespace beliefdm::dialog {

struct FsmState {
  std::string id;
  std::string prompt;
  std::optional<std::string> slot;
  std::optional<std::string> slot_attribute;  // course attribute the slot constrains
  double default_weight = 1.0;
  long order = 0;
  bool terminal = false;
};

class Fsm {
 public:
  /// States are validated and sorted by order. Throws ConfigError on duplicate
  /// ids or orders, a terminal count other than one, a missing prompt on a
  /// non-terminal state, or a weight outside [0, 1].
  Fsm(std::string greeting, std::vector<FsmState> states);

  /// Sections `[state <id>]` with keys prompt, slot, slot_attribute, weight,
  /// order, terminal; a global `greeting` key.
  static Fsm parse(std::string_view text);
  static Fsm load(const std::filesystem::path& path);

  const std::string& greeting() const { return greeting_; }
  const std::vector<FsmState>& states() const { return states_; }  // traversal order
  const FsmState* find(std::string_view id) const;
  const FsmState& terminal() const;
  /// State whose slot is `slot`, if any.
  const FsmState* state_for_slot(std::string_view slot) const;

 private:
  std::string greeting_;
  std::vector<FsmState> states_;
};

struct PolicyConfig {
  double threshold = 0.5;
  double skip_weight = 0.0;
  /// belief label -> state id -> additive delta
  std::map<std::string, std::map<std::string, double>> belief_weight_table;

  /// Global keys threshold, skip_weight; sections `[belief <label>]` with
  /// `state_id = delta` entries.
  static PolicyConfig parse(std::string_view text);
  static PolicyConfig load(const std::filesystem::path& path);
};

struct BeliefRecord {
  std::size_t turn = 0;
  std::string label;
  BeliefDistribution dist;

  bool operator==(const BeliefRecord&) const = default;
};

/// Transparency payload attached to each advisor reply.
struct AdvisorReply {
  std::string text;
  std::vector<std::string> labels;
  BeliefDistribution belief;
  std::string belief_label;
  std::vector<std::string> fired_rules;
  std::vector<std::string> skipped_states;
  std::vector<std::string> ask_states;
  std::optional<std::string> asked_state;
  std::map<std::string, std::string> slots;
  std::optional<std::string> recommended_course;
  std::string status;
  std::vector<std::string> warnings;

  bool operator==(const AdvisorReply&) const = default;
};

struct Message {
  text::Speaker speaker = text::Speaker::user;
  std::string text;
  std::string timestamp;
  std::optional<AdvisorReply> payload;

  bool operator==(const Message&) const = default;
};

enum class SessionStatus { active, completed };
std::string_view to_string(SessionStatus s);

struct DialogSession {
  std::string id;
  std::map<std::string, double> weights;
  std::map<std::string, std::string> slots;
  std::vector<BeliefRecord> belief_history;
  logic::FactStore facts;  // facts asserted from the user's utterances so far
  std::set<kb::Constraint> constraints;  // from recommend_constraint directives
  std::optional<std::string> pending_state;  // state asked by the last reply
  std::vector<Message> transcript;
  SessionStatus status = SessionStatus::active;

  bool operator==(const DialogSession&) const = default;
};

/// Slot value recorded when the user answers a question without a usable value.
inline constexpr std::string_view kAnyValue = "any";

struct WeightUpdate {
  std::map<std::string, double> weights;
  std::vector<std::string> warnings;
};

/// Adds the belief's deltas, sets skipstate targets to the skip weight and
/// askstate targets to 1 (ask wins), then clamps to [0, 1]. Directives naming
/// unknown states produce warnings and are ignored.
WeightUpdate update_weights(const Fsm& fsm, const DialogSession& session,
                            const logic::DirectiveSet& directives, const std::string& belief,
                            const PolicyConfig& cfg);

struct Partition {
  std::vector<std::string> ask;
  std::vector<std::string> skip;
};

/// Over non-terminal states whose slot is unfilled: weight >= threshold asks,
/// otherwise skips. Both lists follow traversal order.
Partition partition_states(const Fsm& fsm, const DialogSession& session, const PolicyConfig& cfg);

struct Recommendation {
  std::string text;
  std::optional<kb::CourseRecord> course;
  std::set<kb::Constraint> constraints;
};

/// Maps filled slots (and recommend_constraint directives) to course
/// constraints and names the top-ranked match, or apologizes listing the
/// unmet constraints.
Recommendation recommend(const DialogSession& session, const kb::KnowledgeGraph& graph,
                         const Fsm& fsm);

/// Maps raw user text to a belief distribution over labels().
class BeliefPredictor {
 public:
  virtual ~BeliefPredictor() = default;
  virtual const std::vector<std::string>& labels() const = 0;
  virtual BeliefDistribution predict(std::string_view utterance) const = 0;
};

class LstmBeliefPredictor : public BeliefPredictor {
 public:
  LstmBeliefPredictor(classifier::Model model, text::TextPipeline pipeline)
      : model_(std::move(model)), pipeline_(std::move(pipeline)) {}
  const std::vector<std::string>& labels() const override { return model_.labels; }
  BeliefDistribution predict(std::string_view utterance) const override {
    return model_.predict(pipeline_(utterance));
  }
  const classifier::Model& model() const { return model_; }

 private:
  classifier::Model model_;
  text::TextPipeline pipeline_;
};

/// Always returns a one-hot distribution on one label.
class FixedBeliefPredictor : public BeliefPredictor {
 public:
  FixedBeliefPredictor(std::vector<std::string> labels, const std::string& label);
  const std::vector<std::string>& labels() const override { return labels_; }
  BeliefDistribution predict(std::string_view) const override { return dist_; }

 private:
  std::vector<std::string> labels_;
  BeliefDistribution dist_;
};

/// Immutable assets shared by every session.
struct EngineAssets {
  std::shared_ptr<const BeliefPredictor> predictor;
  text::EntityLexicon entities;
  extraction::ExtractionGrammar grammar = extraction::ExtractionGrammar::defaults();
  extraction::FactAssertionRules assertion_rules;
  extraction::SynonymLexicon lexicon;
  logic::RuleBase rules;
  kb::KnowledgeGraph graph;
  std::shared_ptr<const Fsm> fsm;
  PolicyConfig policy;
  logic::InferenceLimits limits;
};

class DialogEngine {
 public:
  /// Adds the assertion rules' verbs to the extraction grammar.
  explicit DialogEngine(EngineAssets assets);

  /// Fresh session at default weights, transcript holding the greeting.
  DialogSession new_session(std::string id, std::string timestamp) const;

  /// Runs one turn. On any exception the session is left untouched.
  /// Throws InputError when the session is already completed.
  AdvisorReply process_turn(DialogSession& session, std::string_view utterance,
                            const std::string& timestamp) const;

  const EngineAssets& assets() const { return assets_; }
  const Fsm& fsm() const { return *assets_.fsm; }

 private:
  EngineAssets assets_;
};

}  // namespace beliefdm::dialog
