#include <doctest.h>

#include <algorithm>

#include "beliefdm/errors.hpp"
#include "beliefdm/knowledge_base.hpp"
#include "support.hpp"

namespace bd = beliefdm;
namespace kb = beliefdm::kb;

namespace {

const kb::KnowledgeGraph& bundled() {
  static const auto g = kb::KnowledgeGraph::load(testing::data_path("courses.ttl"));
  return g;
}

kb::QueryPattern pattern(const std::string& s, const std::string& p, const std::string& o) {
  return {kb::PatternTerm::parse(s), kb::PatternTerm::parse(p), kb::PatternTerm::parse(o)};
}

bd::logic::Fact fact(const std::string& text) {
  return bd::logic::Fact::from_literal(bd::logic::parse_literal(text));
}

}  // namespace

TEST_SUITE("knowledge_base") {

TEST_CASE("parsing") {
  const auto one = kb::KnowledgeGraph::parse("stats250 workload light\n");
  CHECK(one.size() == 1);
  CHECK(one.course("stats250")->workload == kb::Workload::light);
  CHECK(kb::KnowledgeGraph::parse("").size() == 0);
  CHECK(kb::KnowledgeGraph::parse("# comment only\n\n").size() == 0);
  const auto quoted = kb::KnowledgeGraph::parse("X101 title \"Intro to \\\"Things\\\"\"  # trailing\n");
  CHECK(quoted.course("x101")->title == "Intro to \"Things\"");
}

TEST_CASE("parse errors name the line") {
  try {
    kb::KnowledgeGraph::parse("a workload light\nb workload\n");
    FAIL("expected a parse error");
  } catch (const bd::ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(kb::KnowledgeGraph::parse("a title \"open\n"), bd::ParseError);
  CHECK_THROWS_AS(kb::KnowledgeGraph::parse("\"a\" title x\n"), bd::ParseError);
  CHECK_THROWS_WITH_AS(kb::KnowledgeGraph::parse("a timing x\na workload extreme\n"),
                       doctest::Contains("line 1"), bd::SchemaError);
  CHECK_THROWS_AS(kb::KnowledgeGraph::parse("a easiness low\na easiness high\n"), bd::SchemaError);
}

TEST_CASE("bundled ontology") {
  const auto* c = bundled().course("stats250");
  REQUIRE(c);
  CHECK(c->title == "Statistics and Data Analysis");
  CHECK(c->easiness == kb::Level::high);
  CHECK(c->topics == std::vector<std::string>{"data_analysis", "statistics"});
}

TEST_CASE("queries") {
  const auto light = kb::query(bundled(), pattern("C", "workload", "light"));
  CHECK(std::find(light.begin(), light.end(), kb::QueryBindings{{"C", "stats250"}}) != light.end());
  CHECK(kb::query(kb::KnowledgeGraph{}, pattern("S", "P", "O")).empty());
  const auto ground = kb::query(bundled(), pattern("stats250", "workload", "light"));
  REQUIRE(ground.size() == 1);
  CHECK(ground[0].empty());
  CHECK(kb::query(bundled(), pattern("stats250", "workload", "heavy")).empty());
  // A repeated variable must bind the same value in every position.
  const auto g = kb::KnowledgeGraph::parse("a likes a\na likes b\n");
  CHECK(kb::query(g, pattern("X", "likes", "X")).size() == 1);
}

TEST_CASE("queries agree with a scan of the triples") {
  const std::vector<std::string> slots{"S", "stats250", "workload", "light", "P", "O", "topic", "statistics"};
  for (const auto& s : slots)
    for (const auto& p : slots)
      for (const auto& o : slots) {
        std::size_t expected = 0;
        for (const auto& t : bundled().triples()) {
          std::map<std::string, std::string> b;
          auto ok = [&](const std::string& pat, const std::string& v) {
            if (!bd::logic::is_variable_text(pat)) return pat == v;
            auto [it, ins] = b.emplace(pat, v);
            return ins || it->second == v;
          };
          if (ok(s, t.subject) && ok(p, t.predicate) && ok(o, t.object)) ++expected;
        }
        CHECK(kb::query(bundled(), pattern(s, p, o)).size() == expected);
      }
}

TEST_CASE("course search") {
  const auto hits = kb::course_search(bundled(), {{"workload", "light"}, {"timing", "morning"}, {"topic", "statistics"}});
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].code == "stats250");
  CHECK(kb::course_search(bundled(), {{"workload", "light"}, {"workload", "heavy"}}).empty());
  CHECK_THROWS_AS(kb::course_search(bundled(), {{"color", "red"}}), bd::InputError);

  const auto all = kb::course_search(bundled(), {});
  CHECK(all.size() == bundled().courses().size());
  // Ranking by hand: easiness desc, helpfulness desc, code asc.
  auto rank = [](const std::optional<kb::Level>& l) { return l ? static_cast<int>(*l) : -1; };
  for (std::size_t i = 1; i < all.size(); ++i) {
    const auto key = [&](const kb::CourseRecord& c) {
      return std::make_tuple(-rank(c.easiness), -rank(c.helpfulness), c.code);
    };
    CHECK(key(all[i - 1]) < key(all[i]));
  }
}

TEST_CASE("ties are broken by helpfulness then code") {
  const auto g = kb::KnowledgeGraph::parse(
      "b200 easiness high\nb200 helpfulness high\n"
      "a100 easiness high\na100 helpfulness medium\n"
      "c300 easiness high\nc300 helpfulness high\n"
      "d400 easiness low\n");
  const auto hits = kb::course_search(g, {});
  std::vector<std::string> codes;
  for (const auto& h : hits) codes.push_back(h.code);
  CHECK(codes == std::vector<std::string>{"b200", "c300", "a100", "d400"});
}

TEST_CASE("search agrees with a brute-force filter") {
  const std::vector<std::pair<std::string, std::vector<std::string>>> space{
      {"workload", {"light", "medium", "heavy"}},
      {"timing", {"morning", "afternoon", "evening"}},
      {"topic", {"statistics", "programming", "writing"}}};
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b)
      for (std::size_t c = 0; c < 4; ++c) {
        std::set<kb::Constraint> cs;
        const std::size_t pick[3] = {a, b, c};
        for (std::size_t k = 0; k < 3; ++k)
          if (pick[k] < 3) cs.emplace(space[k].first, space[k].second[pick[k]]);
        std::set<std::string> expected;
        for (const auto& [code, rec] : bundled().courses()) {
          bool ok = true;
          for (const auto& [attr, value] : cs) {
            if (attr == "topic") ok &= std::count(rec.topics.begin(), rec.topics.end(), value) > 0;
            else ok &= rec.attribute(attr) == value;
          }
          if (ok) expected.insert(code);
        }
        std::set<std::string> got;
        for (const auto& h : kb::course_search(bundled(), cs)) got.insert(h.code);
        CHECK(got == expected);
      }
}

TEST_CASE("enrichment") {
  const bd::logic::FactStore mentions{fact("mentioned_course(stats250)")};
  const auto e = kb::enrich(mentions, bundled());
  CHECK(e.contains(fact("course_load(stats250, light)")));
  CHECK(e.contains(fact("course_topic(stats250, statistics)")));
  CHECK(e.contains(fact("course_title(stats250, 'Statistics and Data Analysis')")));
  CHECK(std::includes(e.begin(), e.end(), mentions.begin(), mentions.end()));
  CHECK(kb::enrich(e, bundled()) == e);
  const bd::logic::FactStore plain{fact("interest(statistics)")};
  CHECK(kb::enrich(plain, bundled()) == plain);
  CHECK(kb::enrichment_predicate("workload") == "course_load");
  CHECK(kb::enrichment_predicate("nothing").empty());
}

}  // TEST_SUITE
