#include <doctest.h>

#include <algorithm>

#include "beliefdm/errors.hpp"
#include "beliefdm/logic.hpp"
#include "support.hpp"

namespace bd = beliefdm;
namespace lg = beliefdm::logic;

namespace {

const char* kPaperRule =
    "belief(student, confused) & course_load(C, high) => "
    "knows_agent(not_confident), knows_agent(advise_light_courses).";

lg::Fact fact(const std::string& text) { return lg::Fact::from_literal(lg::parse_literal(text)); }

}  // namespace

TEST_SUITE("logic") {

TEST_CASE("parse the advising rule") {
  const auto rb = lg::parse_rules(kPaperRule);
  REQUIRE(rb.rules.size() == 1);
  CHECK(rb.rules[0].id == "r1");
  CHECK(rb.rules[0].body.size() == 2);
  CHECK(rb.rules[0].head.size() == 2);
  CHECK(rb.rules[0].body[1].args[0].is_variable());
  CHECK(lg::parse_rules("").rules.empty());
  CHECK(lg::parse_rules("% only a comment\n").rules.empty());
}

TEST_CASE("rule ids follow file order and terms keep their kinds") {
  const auto rb = lg::parse_rules("p(X) => q(X).\n% c\nq(X) & r(X, 'Hello World', 42) => s(X).\n");
  REQUIRE(rb.rules.size() == 2);
  CHECK(rb.rules[1].id == "r2");
  CHECK(rb.rules[1].line == 3);
  const auto& args = rb.rules[1].body[1].args;
  CHECK(args[1].kind == lg::Term::Kind::literal);
  CHECK(args[1].text == "Hello World");
  CHECK(args[2].kind == lg::Term::Kind::number);
}

TEST_CASE("parse errors carry positions") {
  try {
    lg::parse_rules("p(X) => q(X).\np(X) q(X).");
    FAIL("expected a parse error");
  } catch (const bd::ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 6);
  }
  CHECK_THROWS_AS(lg::parse_rules("p(X) => q(X)"), bd::ParseError);
  CHECK_THROWS_AS(lg::parse_rules("p(X) => q('open)."), bd::ParseError);
  CHECK_THROWS_AS(lg::parse_rules("P(x) => q(x)."), bd::ParseError);
  CHECK_THROWS_WITH_AS(lg::parse_rules("p(X) => q(Y)."), doctest::Contains("Y"), bd::ConfigError);
  CHECK_THROWS_AS(lg::parse_rules("p(X) => q(X).\nq(X, Y) => p(X)."), bd::SchemaError);
}

TEST_CASE("facts") {
  const auto fs = lg::parse_facts("belief(student, confused).\ncourse_load(stats405, high).\n");
  CHECK(fs.size() == 2);
  CHECK(fs.contains(fact("belief(student, confused)")));
  CHECK_THROWS_AS(lg::parse_facts("p(X)."), bd::ParseError);
  CHECK_THROWS_AS(lg::Fact("p", {lg::Term::var("X")}), bd::InputError);
  const auto quoted = fact("p(a, 'two words', 3)");
  CHECK(quoted.to_string() == "p(a, \"two words\", 3)");
  CHECK(fact(quoted.to_string()) == quoted);
}

TEST_CASE("unify") {
  const auto px = lg::parse_literal("p(X)");
  auto b = lg::unify(px, fact("p(a)"), {});
  REQUIRE(b);
  CHECK(b->at("X") == lg::Term::atom("a"));
  CHECK_FALSE(lg::unify(lg::parse_literal("p(X, X)"), fact("p(a, b)"), {}));
  const lg::Bindings pre{{"X", lg::Term::atom("a")}};
  const auto b2 = lg::unify(lg::parse_literal("p(X, b)"), fact("p(a, b)"), pre);
  REQUIRE(b2);
  CHECK(*b2 == pre);
  CHECK_FALSE(lg::unify(lg::parse_literal("p(X, b)"), fact("p(c, b)"), pre));
  CHECK_FALSE(lg::unify(px, fact("q(a)"), {}));
  CHECK_FALSE(lg::unify(px, fact("p(a, b)"), {}));
  CHECK_THROWS_AS(lg::substitute(lg::parse_literal("p(Y)"), {}), bd::InputError);
}

TEST_CASE("the advising rule fires on a confused student and a heavy course") {
  const auto r = lg::forward_chain(
      lg::parse_rules(kPaperRule),
      {fact("belief(student, confused)"), fact("course_load(stats405, high)")});
  CHECK(r.derived.contains(fact("knows_agent(not_confident)")));
  CHECK(r.derived.contains(fact("knows_agent(advise_light_courses)")));
  REQUIRE(r.trace.size() == 1);
  CHECK(r.trace[0].rule_id == "r1");
  CHECK(r.trace[0].bindings.at("C") == lg::Term::atom("stats405"));

  const auto curious = lg::forward_chain(
      lg::parse_rules(kPaperRule), {fact("belief(student, curious)"), fact("course_load(stats405, high)")});
  CHECK_FALSE(curious.derived.contains(fact("knows_agent(not_confident)")));
}

TEST_CASE("forward chaining basics") {
  const lg::FactStore input{fact("p(a)")};
  const auto none = lg::forward_chain({}, input);
  CHECK(none.derived == input);
  CHECK(none.trace.empty());
  CHECK(none.iterations == 0);

  const auto chain = lg::forward_chain(lg::parse_rules("p(X) => q(X).\nq(X) => r(X)."), input);
  CHECK(chain.derived.contains(fact("q(a)")));
  CHECK(chain.derived.contains(fact("r(a)")));
  CHECK(chain.iterations <= 2);
  for (const auto& t : chain.trace)
    for (const auto& f : t.produced) CHECK(chain.derived.contains(f));
}

TEST_CASE("recursive rules reach a fixpoint") {
  const auto rb = lg::parse_rules("edge(X, Y) => path(X, Y).\npath(X, Y) & edge(Y, Z) => path(X, Z).");
  lg::FactStore edges;
  for (int i = 0; i < 6; ++i)
    edges.insert(lg::Fact("edge", {lg::Term::atom("n" + std::to_string(i)), lg::Term::atom("n" + std::to_string(i + 1))}));
  const auto r = lg::forward_chain(rb, edges);
  CHECK(r.derived.size() == 6 + 21);
  CHECK(lg::forward_chain(rb, r.derived).derived == r.derived);
  CHECK(r.derived == testing::brute_force_closure(rb, edges));
}

TEST_CASE("limits raise a resource error carrying the partial closure") {
  const auto rb = lg::parse_rules("edge(X, Y) => path(X, Y).\npath(X, Y) & edge(Y, Z) => path(X, Z).");
  lg::FactStore edges;
  for (int i = 0; i < 10; ++i)
    edges.insert(lg::Fact("edge", {lg::Term::atom("n" + std::to_string(i)), lg::Term::atom("n" + std::to_string(i + 1))}));
  try {
    lg::forward_chain(rb, edges, {20, 10000});
    FAIL("expected a resource error");
  } catch (const lg::ResourceError& e) {
    CHECK(e.partial().derived.size() > 20);
    CHECK(std::includes(e.partial().derived.begin(), e.partial().derived.end(), edges.begin(), edges.end()));
  }
  CHECK_THROWS_AS(lg::forward_chain(rb, edges, {100000, 3}), lg::ResourceError);
  // A limit equal to the productive rounds needed is not exceeded.
  const auto full = lg::forward_chain(rb, edges);
  CHECK_NOTHROW(lg::forward_chain(rb, edges, {100000, full.iterations}));
}

TEST_CASE("directives") {
  const auto d = lg::derive_directives(lg::FactStore{fact("skipstate(ask_interest)"), fact("skipstate(ask_semester)")});
  CHECK(d.skip == std::set<std::string>{"ask_interest", "ask_semester"});
  CHECK(lg::derive_directives(lg::FactStore{fact("p(a)"), fact("interest(statistics)")}).empty());
  const auto s = lg::derive_directives(lg::FactStore{fact("slot_fill(timing, morning)")});
  CHECK(s.slot_fill.at("timing") == std::set<std::string>{"morning"});
  const auto all = lg::derive_directives(lg::FactStore{
      fact("askstate(confirm_goal)"), fact("slot_update(timing, evening)"),
      fact("recommend_constraint(workload, light)"), fact("knows_agent(not_confident)")});
  CHECK(all.ask.contains("confirm_goal"));
  CHECK(all.slot_update.at("timing").contains("evening"));
  CHECK(all.recommend_constraints.contains({"workload", "light"}));
  CHECK(all.knows.contains("not_confident"));
  CHECK_THROWS_AS(lg::derive_directives(lg::FactStore{fact("skipstate(a, b)")}), bd::SchemaError);
}

TEST_CASE("random programs agree with exhaustive grounding") {
  bd::Rng rng(2024);
  for (int i = 0; i < 40; ++i) {
    const auto prog = testing::random_program(rng);
    CAPTURE(prog.rules_text);
    const auto r = lg::forward_chain(prog.rules, prog.facts);
    CHECK(r.derived == testing::brute_force_closure(prog.rules, prog.facts));
    CHECK(std::includes(r.derived.begin(), r.derived.end(), prog.facts.begin(), prog.facts.end()));
    CHECK(lg::forward_chain(prog.rules, r.derived).derived == r.derived);
    auto reversed = prog.rules;
    std::reverse(reversed.rules.begin(), reversed.rules.end());
    CHECK(lg::forward_chain(reversed, prog.facts).derived == r.derived);
  }
}

}  // TEST_SUITE
