#pragma once

// Datalog-style epistemic rules: terms, ground facts, a rule parser,
// unification, semi-naive forward chaining and projection of the reserved
// dialog predicates into directives.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "beliefdm/errors.hpp"

namespace beliefdm::logic {

struct Term {
  enum class Kind { atom, variable, number, literal };
  Kind kind = Kind::atom;
  std::string text;  // literal text is stored unquoted

  static Term atom(std::string s) { return {Kind::atom, std::move(s)}; }
  static Term var(std::string s) { return {Kind::variable, std::move(s)}; }
  static Term number(std::string s) { return {Kind::number, std::move(s)}; }
  static Term literal(std::string s) { return {Kind::literal, std::move(s)}; }

  bool is_variable() const { return kind == Kind::variable; }
  std::string to_string() const;

  auto operator<=>(const Term&) const = default;
};

/// Lowercase-initial identifier of letters, digits and underscores.
bool is_atom_text(std::string_view s);
/// Uppercase-initial (or '_'-initial) identifier.
bool is_variable_text(std::string_view s);

/// Predicate applied to terms; may contain variables (rule literals, query patterns).
struct Literal {
  std::string predicate;
  std::vector<Term> args;

  bool is_ground() const;
  std::string to_string() const;

  auto operator<=>(const Literal&) const = default;
};

/// A ground literal.
struct Fact {
  std::string predicate;
  std::vector<Term> args;

  Fact() = default;
  /// Throws InputError if any argument is a variable.
  Fact(std::string predicate, std::vector<Term> args);
  static Fact from_literal(const Literal& lit);

  std::string to_string() const;

  auto operator<=>(const Fact&) const = default;
};

/// Sorted, duplicate-free set of facts.
using FactStore = std::set<Fact>;

using Bindings = std::map<std::string, Term>;

struct Rule {
  std::string id;
  std::vector<Literal> body;
  std::vector<Literal> head;
  std::size_t line = 0;

  std::string to_string() const;
};

struct RuleBase {
  std::vector<Rule> rules;
};

/// Grammar ('%' starts a comment that runs to end of line):
///   rule    := body "=>" head "."
///   body    := literal ("&" literal)*
///   head    := literal ("," literal)*
///   literal := atom "(" term ("," term)* ")"
///   term    := atom | Variable | number | quoted-literal
/// Rules get ids r1, r2, ... in file order. Throws ParseError (line/column)
/// on syntax errors, SchemaError on inconsistent predicate arity and
/// ConfigError when a head variable does not occur in the body.
RuleBase parse_rules(std::string_view text);
RuleBase load_rules(const std::string& path);

/// One ground literal per statement, each terminated by '.'.
FactStore parse_facts(std::string_view text);
FactStore load_facts(const std::string& path);

/// A single literal such as `p(X, a)` with no trailing period.
Literal parse_literal(std::string_view text);

/// Extends `bindings` so that pattern matches fact, or nullopt.
std::optional<Bindings> unify(const Literal& pattern, const Fact& fact, const Bindings& bindings);

/// Ground `lit` under `bindings`. Throws InputError for an unbound variable.
Fact substitute(const Literal& lit, const Bindings& bindings);

struct TraceEntry {
  std::string rule_id;
  Bindings bindings;
  std::vector<Fact> produced;  // facts first derived by this firing
};

struct InferenceResult {
  FactStore derived;
  std::vector<TraceEntry> trace;
  std::size_t iterations = 0;  // rounds that derived at least one new fact
};

struct InferenceLimits {
  std::size_t max_facts = 100000;
  std::size_t max_iterations = 10000;
};

/// Thrown when inference exceeds its limits; carries what was derived so far.
class ResourceError : public Error {
 public:
  ResourceError(const std::string& what, InferenceResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const InferenceResult& partial() const { return partial_; }

 private:
  InferenceResult partial_;
};

/// Least fixpoint of the rules over the facts, computed semi-naively.
InferenceResult forward_chain(const RuleBase& rules, const FactStore& facts,
                              const InferenceLimits& limits = {});

/// Typed view of the reserved predicates skipstate/1, askstate/1, slot_fill/2,
/// slot_update/2, recommend_constraint/2 and knows_agent/1.
struct DirectiveSet {
  std::set<std::string> skip;
  std::set<std::string> ask;
  std::map<std::string, std::set<std::string>> slot_fill;    // slot -> candidate values
  std::map<std::string, std::set<std::string>> slot_update;  // explicit overwrite
  std::set<std::pair<std::string, std::string>> recommend_constraints;
  std::set<std::string> knows;

  bool empty() const {
    return skip.empty() && ask.empty() && slot_fill.empty() && slot_update.empty() &&
           recommend_constraints.empty() && knows.empty();
  }
};

/// Throws SchemaError when a reserved predicate appears with the wrong arity.
DirectiveSet derive_directives(const FactStore& derived);
inline DirectiveSet derive_directives(const InferenceResult& result) {
  return derive_directives(result.derived);
}

}  // namespace beliefdm::logic
