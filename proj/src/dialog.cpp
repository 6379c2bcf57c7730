#include "beliefdm/dialog.hpp"

#include <algorithm>
#include <cctype>

#include "beliefdm/errors.hpp"
#include "beliefdm/io_util.hpp"
#include "ini.hpp"

namespace beliefdm::dialog {

// ---------------------------------------------------------------------------
// Fsm

Fsm::Fsm(std::string greeting, std::vector<FsmState> states)
    : greeting_(std::move(greeting)), states_(std::move(states)) {
  std::set<std::string> ids;
  std::set<long> orders;
  std::size_t terminals = 0;
  for (const auto& s : states_) {
    if (!logic::is_atom_text(s.id)) throw ConfigError("state id '" + s.id + "' is not an atom");
    if (!ids.insert(s.id).second) throw ConfigError("duplicate state id '" + s.id + "'");
    if (!orders.insert(s.order).second)
      throw ConfigError("state '" + s.id + "' reuses order " + std::to_string(s.order));
    if (s.terminal) ++terminals;
    if (!s.terminal && s.prompt.empty()) throw ConfigError("state '" + s.id + "' has no prompt");
    if (!(s.default_weight >= 0.0 && s.default_weight <= 1.0))
      throw ConfigError("state '" + s.id + "' weight outside [0, 1]");
  }
  if (terminals != 1)
    throw ConfigError("FSM needs exactly one terminal state, found " + std::to_string(terminals));
  std::sort(states_.begin(), states_.end(),
            [](const FsmState& a, const FsmState& b) { return a.order < b.order; });
}

Fsm Fsm::parse(std::string_view text) {
  const auto doc = ini::parse(text);
  std::string greeting;
  for (const auto& e : doc.globals) {
    if (e.key == "greeting") greeting = e.value;
    else throw ParseError("unknown FSM key '" + e.key + "'", e.line);
  }
  std::vector<FsmState> states;
  for (const auto& sec : doc.sections) {
    if (sec.kind != "state") throw ParseError("unknown section kind '" + sec.kind + "'", sec.line);
    FsmState st;
    st.id = sec.name;
    st.order = static_cast<long>(states.size());
    bool has_order = false;
    for (const auto& e : sec.entries) {
      if (e.key == "prompt") st.prompt = e.value;
      else if (e.key == "slot") st.slot = e.value;
      else if (e.key == "slot_attribute") st.slot_attribute = e.value;
      else if (e.key == "weight") st.default_weight = ini::to_double(e);
      else if (e.key == "order") { st.order = ini::to_long(e); has_order = true; }
      else if (e.key == "terminal") st.terminal = ini::to_bool(e);
      else throw ParseError("unknown state key '" + e.key + "'", e.line);
    }
    if (!has_order) throw ParseError("state '" + st.id + "' has no order", sec.line);
    states.push_back(std::move(st));
  }
  try {
    return Fsm(std::move(greeting), std::move(states));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("FSM: ") + e.what());
  }
}

Fsm Fsm::load(const std::filesystem::path& path) { return parse(util::read_file(path)); }

const FsmState* Fsm::find(std::string_view id) const {
  for (const auto& s : states_)
    if (s.id == id) return &s;
  return nullptr;
}

const FsmState& Fsm::terminal() const {
  return *std::find_if(states_.begin(), states_.end(), [](const FsmState& s) { return s.terminal; });
}

const FsmState* Fsm::state_for_slot(std::string_view slot) const {
  for (const auto& s : states_)
    if (s.slot && *s.slot == slot) return &s;
  return nullptr;
}

// ---------------------------------------------------------------------------
// PolicyConfig

PolicyConfig PolicyConfig::parse(std::string_view text) {
  const auto doc = ini::parse(text);
  PolicyConfig cfg;
  for (const auto& e : doc.globals) {
    if (e.key == "threshold") cfg.threshold = ini::to_double(e);
    else if (e.key == "skip_weight") cfg.skip_weight = ini::to_double(e);
    else throw ParseError("unknown policy key '" + e.key + "'", e.line);
  }
  if (!(cfg.threshold >= 0.0 && cfg.threshold <= 1.0))
    throw ConfigError("policy threshold must lie in [0, 1]");
  if (!(cfg.skip_weight >= 0.0 && cfg.skip_weight <= 1.0))
    throw ConfigError("policy skip_weight must lie in [0, 1]");
  for (const auto& sec : doc.sections) {
    if (sec.kind != "belief") throw ParseError("unknown section kind '" + sec.kind + "'", sec.line);
    auto& row = cfg.belief_weight_table[sec.name];
    for (const auto& e : sec.entries) row[e.key] = ini::to_double(e);
  }
  return cfg;
}

PolicyConfig PolicyConfig::load(const std::filesystem::path& path) {
  return parse(util::read_file(path));
}

std::string_view to_string(SessionStatus s) {
  return s == SessionStatus::active ? "active" : "completed";
}

// ---------------------------------------------------------------------------
// Policy

WeightUpdate update_weights(const Fsm& fsm, const DialogSession& session,
                            const logic::DirectiveSet& directives, const std::string& belief,
                            const PolicyConfig& cfg) {
  WeightUpdate out;
  out.weights = session.weights;
  for (const auto& s : fsm.states())
    if (!out.weights.contains(s.id)) out.weights[s.id] = s.default_weight;

  if (const auto row = cfg.belief_weight_table.find(belief); row != cfg.belief_weight_table.end()) {
    for (const auto& [state, delta] : row->second) {
      if (!fsm.find(state)) {
        out.warnings.push_back("belief weight table names unknown state '" + state + "'");
        continue;
      }
      out.weights[state] += delta;
    }
  }
  for (const auto& id : directives.skip) {
    if (!fsm.find(id)) {
      out.warnings.push_back("skipstate names unknown state '" + id + "'");
      continue;
    }
    out.weights[id] = cfg.skip_weight;
  }
  for (const auto& id : directives.ask) {
    if (!fsm.find(id)) {
      out.warnings.push_back("askstate names unknown state '" + id + "'");
      continue;
    }
    out.weights[id] = 1.0;
  }
  for (auto& [id, w] : out.weights) w = std::clamp(w, 0.0, 1.0);
  return out;
}

Partition partition_states(const Fsm& fsm, const DialogSession& session, const PolicyConfig& cfg) {
  Partition p;
  for (const auto& s : fsm.states()) {
    if (s.terminal) continue;
    if (s.slot && session.slots.contains(*s.slot)) continue;
    const auto it = session.weights.find(s.id);
    const double w = it == session.weights.end() ? s.default_weight : it->second;
    (w >= cfg.threshold ? p.ask : p.skip).push_back(s.id);
  }
  return p;
}

namespace {

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string easiness_phrase(const std::optional<kb::Level>& l) {
  if (!l) return "";
  switch (*l) {
    case kb::Level::high: return " which is an easy course";
    case kb::Level::medium: return " which is a course of moderate difficulty";
    case kb::Level::low: return " which is a demanding course";
  }
  return "";
}

std::string describe(const std::set<kb::Constraint>& constraints) {
  std::string out;
  for (const auto& [attr, value] : constraints) {
    if (!out.empty()) out += ", ";
    out += attr + " = " + value;
  }
  return out;
}

}  // namespace

Recommendation recommend(const DialogSession& session, const kb::KnowledgeGraph& graph,
                         const Fsm& fsm) {
  const auto& searchable = kb::searchable_attributes();
  auto is_searchable = [&](const std::string& a) {
    return std::find(searchable.begin(), searchable.end(), a) != searchable.end();
  };
  Recommendation rec;
  for (const auto& [slot, value] : session.slots) {
    if (value == kAnyValue) continue;
    std::string attr = slot;
    if (const auto* st = fsm.state_for_slot(slot); st && st->slot_attribute) attr = *st->slot_attribute;
    if (is_searchable(attr)) rec.constraints.emplace(attr, value);
  }
  for (const auto& c : session.constraints)
    if (is_searchable(c.first)) rec.constraints.insert(c);

  const auto hits = kb::course_search(graph, rec.constraints);
  if (hits.empty()) {
    rec.text = rec.constraints.empty()
                   ? "Sorry, there is no matching course in the catalog."
                   : "Sorry, there is no matching course for: " + describe(rec.constraints) + ".";
    return rec;
  }
  const auto& top = hits.front();
  rec.text = "I would advise you " + upper(top.code);
  if (!top.title.empty()) rec.text += " \"" + top.title + "\"";
  rec.text += easiness_phrase(top.easiness) + ".";
  rec.course = top;
  return rec;
}

FixedBeliefPredictor::FixedBeliefPredictor(std::vector<std::string> labels, const std::string& label)
    : labels_(std::move(labels)) {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw ConfigError("fixed belief '" + label + "' is not a known label");
  dist_.probs.assign(labels_.size(), 0.0);
  dist_.probs[static_cast<std::size_t>(it - labels_.begin())] = 1.0;
}

// ---------------------------------------------------------------------------
// DialogEngine

DialogEngine::DialogEngine(EngineAssets assets) : assets_(std::move(assets)) {
  if (!assets_.predictor) throw ConfigError("dialog engine needs a belief predictor");
  if (!assets_.fsm) throw ConfigError("dialog engine needs an FSM");
  const auto verbs = assets_.assertion_rules.verbs();
  assets_.grammar.verbs.insert(verbs.begin(), verbs.end());
}

DialogSession DialogEngine::new_session(std::string id, std::string timestamp) const {
  DialogSession s;
  s.id = std::move(id);
  for (const auto& st : fsm().states()) s.weights[st.id] = st.default_weight;
  s.transcript.push_back({text::Speaker::advisor, fsm().greeting(), std::move(timestamp), std::nullopt});
  return s;
}

AdvisorReply DialogEngine::process_turn(DialogSession& session, std::string_view utterance,
                                        const std::string& timestamp) const {
  if (session.status != SessionStatus::active) throw InputError("session is completed");
  const auto& fsm = *assets_.fsm;
  DialogSession work = session;
  AdvisorReply reply;

  // Belief.
  reply.labels = assets_.predictor->labels();
  reply.belief = assets_.predictor->predict(utterance);
  if (reply.belief.probs.size() != reply.labels.size())
    throw ConfigError("predictor returned a distribution of the wrong size");
  reply.belief_label = reply.labels[reply.belief.argmax()];
  const std::size_t turn = work.belief_history.size() + 1;
  work.belief_history.push_back({turn, reply.belief_label, reply.belief});

  // Extraction and fact assertion.
  const text::Utterance utt{std::string(utterance), text::Speaker::user, work.transcript.size()};
  const auto triples = extraction::extract_triples(utt, assets_.grammar);
  const auto asserted = extraction::assert_facts(triples, assets_.assertion_rules, assets_.lexicon,
                                                 assets_.entities);
  work.facts.insert(asserted.begin(), asserted.end());

  // Enrichment and inference.
  logic::FactStore input = work.facts;
  input.insert(logic::Fact("belief", {logic::Term::atom("student"), logic::Term::atom(reply.belief_label)}));
  input = kb::enrich(input, assets_.graph);

  logic::DirectiveSet directives;
  logic::FactStore derived = input;
  bool degraded = false;
  try {
    auto result = logic::forward_chain(assets_.rules, input, assets_.limits);
    for (const auto& entry : result.trace)
      if (std::find(reply.fired_rules.begin(), reply.fired_rules.end(), entry.rule_id) ==
          reply.fired_rules.end())
        reply.fired_rules.push_back(entry.rule_id);
    directives = logic::derive_directives(result);
    derived = std::move(result.derived);
  } catch (const logic::ResourceError& e) {
    degraded = true;
    reply.warnings.push_back(std::string("inference stopped: ") + e.what());
  }

  // Slot filling from directives, then from preference facts matching a state's slot attribute.
  auto fill = [&](const std::string& slot, const std::string& value) {
    const auto [it, inserted] = work.slots.emplace(slot, value);
    if (!inserted && it->second != value)
      reply.warnings.push_back("slot '" + slot + "' already holds '" + it->second +
                               "'; ignoring '" + value + "'");
  };
  for (const auto& [slot, values] : directives.slot_fill) {
    if (values.size() > 1)
      reply.warnings.push_back("several values for slot '" + slot + "'; using '" + *values.begin() + "'");
    fill(slot, *values.begin());
  }
  for (const auto& [slot, values] : directives.slot_update) work.slots[slot] = *values.begin();
  for (const auto& f : derived) {
    if (f.predicate != "preference" || f.args.size() != 2) continue;
    for (const auto& st : fsm.states()) {
      if (st.slot && st.slot_attribute && *st.slot_attribute == f.args[0].text)
        fill(*st.slot, f.args[1].text);
    }
  }
  // The question asked last turn counts as answered even without a usable value.
  if (work.pending_state) {
    const auto* st = fsm.find(*work.pending_state);
    if (st && st->slot && !work.slots.contains(*st->slot)) work.slots[*st->slot] = std::string(kAnyValue);
  }
  work.constraints.insert(directives.recommend_constraints.begin(),
                          directives.recommend_constraints.end());

  // Weights and partition.
  auto update = update_weights(fsm, work, directives, reply.belief_label, assets_.policy);
  work.weights = std::move(update.weights);
  reply.warnings.insert(reply.warnings.end(), update.warnings.begin(), update.warnings.end());
  const auto part = partition_states(fsm, work, assets_.policy);
  reply.ask_states = part.ask;
  for (const auto& st : fsm.states()) {
    const bool directed = directives.skip.contains(st.id) && !directives.ask.contains(st.id);
    const bool partitioned = std::find(part.skip.begin(), part.skip.end(), st.id) != part.skip.end();
    if (directed || partitioned) reply.skipped_states.push_back(st.id);
  }

  // Reply.
  if (degraded) {
    const auto next = std::find_if(fsm.states().begin(), fsm.states().end(), [&](const FsmState& s) {
      return !s.terminal && !(s.slot && work.slots.contains(*s.slot));
    });
    if (next != fsm.states().end()) {
      reply.asked_state = next->id;
      reply.text = next->prompt;
    }
  } else if (!part.ask.empty()) {
    reply.asked_state = part.ask.front();
    reply.text = fsm.find(part.ask.front())->prompt;
  }
  if (!reply.asked_state) {
    const auto rec = recommend(work, assets_.graph, fsm);
    reply.text = rec.text;
    reply.asked_state = fsm.terminal().id;
    if (rec.course) reply.recommended_course = rec.course->code;
    work.status = SessionStatus::completed;
    work.pending_state.reset();
  } else {
    work.pending_state = reply.asked_state;
  }
  reply.slots = work.slots;
  reply.status = std::string(to_string(work.status));

  work.transcript.push_back({text::Speaker::user, std::string(utterance), timestamp, std::nullopt});
  work.transcript.push_back({text::Speaker::advisor, reply.text, timestamp, reply});
  session = std::move(work);
  return reply;
}

}  // namespace beliefdm::dialog
