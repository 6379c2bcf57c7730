#pragma once

// Course ontology: a line-oriented triple file, pattern queries, attribute
// search and fact enrichment.
//
// File format: `subject predicate object` separated by whitespace; the object
// may be a double-quoted literal containing spaces; '#' starts a comment
// outside quotes. Course attributes use the predicates title, easiness,
// workload, class_size, timing, helpfulness and topic (repeatable).

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "beliefdm/logic.hpp"

namespace beliefdm::kb {

struct TripleFact {
  std::string subject;
  std::string predicate;
  std::string object;
  bool object_is_literal = false;

  auto operator<=>(const TripleFact&) const = default;
};

enum class Level { low, medium, high };
enum class Workload { light, medium, heavy };
enum class ClassSize { small, medium, large };
enum class Timing { morning, afternoon, evening };

std::string_view to_string(Level v);
std::string_view to_string(Workload v);
std::string_view to_string(ClassSize v);
std::string_view to_string(Timing v);

struct CourseRecord {
  std::string code;
  std::string title;
  std::optional<Level> easiness;
  std::optional<Workload> workload;
  std::optional<ClassSize> class_size;
  std::optional<Timing> timing;
  std::optional<Level> helpfulness;
  std::vector<std::string> topics;

  /// Value of a searchable attribute as text; topics joined by ','.
  std::optional<std::string> attribute(std::string_view name) const;

  bool operator==(const CourseRecord&) const = default;
};

/// Names accepted by course_search: code, title, easiness, workload,
/// class_size, timing, helpfulness, topic.
const std::vector<std::string>& searchable_attributes();

/// A subject/predicate/object slot in a pattern: a constant or a variable
/// (uppercase-initial name).
struct PatternTerm {
  std::string text;
  bool variable = false;

  static PatternTerm var(std::string name) { return {std::move(name), true}; }
  static PatternTerm constant(std::string value) { return {std::move(value), false}; }
  /// Uppercase-initial text becomes a variable.
  static PatternTerm parse(std::string_view s);
};

struct QueryPattern {
  PatternTerm subject;
  PatternTerm predicate;
  PatternTerm object;
};

using QueryBindings = std::map<std::string, std::string>;

class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  /// Throws SchemaError when a schema predicate carries an unknown value.
  explicit KnowledgeGraph(std::set<TripleFact> triples);

  static KnowledgeGraph load(const std::filesystem::path& path);
  /// Throws ParseError with the line number, SchemaError for unknown enum values.
  static KnowledgeGraph parse(std::string_view text);

  const std::set<TripleFact>& triples() const { return triples_; }
  const std::map<std::string, CourseRecord>& courses() const { return courses_; }
  const CourseRecord* course(std::string_view code) const;
  std::size_t size() const { return triples_.size(); }

 private:
  std::set<TripleFact> triples_;
  std::map<std::string, CourseRecord> courses_;
};

/// Bindings under which the pattern instantiates to a graph triple, in triple order.
std::vector<QueryBindings> query(const KnowledgeGraph& graph, const QueryPattern& pattern);

using Constraint = std::pair<std::string, std::string>;

/// Courses satisfying every constraint, ranked by easiness desc, helpfulness
/// desc, then code asc. `topic` constraints test membership. Throws InputError
/// for an attribute outside searchable_attributes().
std::vector<CourseRecord> course_search(const KnowledgeGraph& graph,
                                        const std::set<Constraint>& constraints);

/// Fact predicate used when re-expressing a course attribute (workload -> course_load).
std::string_view enrichment_predicate(std::string_view attribute);

/// Adds course_<attr>(code, value) facts for every course code mentioned as an
/// argument of an existing fact. Never removes facts.
logic::FactStore enrich(const logic::FactStore& facts, const KnowledgeGraph& graph);

}  // namespace beliefdm::kb
