#include "beliefdm/knowledge_base.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "beliefdm/errors.hpp"
#include "beliefdm/io_util.hpp"

namespace beliefdm::kb {
namespace {

constexpr std::array<std::string_view, 3> kLevel{"low", "medium", "high"};
constexpr std::array<std::string_view, 3> kWorkload{"light", "medium", "heavy"};
constexpr std::array<std::string_view, 3> kClassSize{"small", "medium", "large"};
constexpr std::array<std::string_view, 3> kTiming{"morning", "afternoon", "evening"};

template <typename E>
std::optional<E> lookup_enum(const std::array<std::string_view, 3>& names, std::string_view v) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == v) return static_cast<E>(i);
  return std::nullopt;
}

template <typename E>
E require_enum(const std::array<std::string_view, 3>& names, const TripleFact& t) {
  if (auto e = lookup_enum<E>(names, t.object)) return *e;
  std::string allowed;
  for (const auto n : names) allowed += (allowed.empty() ? "" : ", ") + std::string(n);
  throw SchemaError("course " + t.subject + ": unknown " + t.predicate + " value '" + t.object +
                    "' (expected one of " + allowed + ")");
}

template <typename E>
void set_once(std::optional<E>& field, E value, const TripleFact& t) {
  if (field && *field != value)
    throw SchemaError("course " + t.subject + " has conflicting " + t.predicate + " values");
  field = value;
}

bool is_schema_predicate(std::string_view p) {
  static const std::set<std::string_view> schema{"title",  "easiness",    "workload", "class_size",
                                                 "timing", "helpfulness", "topic"};
  return schema.contains(p);
}

// Whitespace-separated fields; a double-quoted field may contain spaces.
std::vector<std::pair<std::string, bool>> split_fields(std::string_view line, std::size_t line_no) {
  std::vector<std::pair<std::string, bool>> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '#') {
      break;
    } else if (c == '"') {
      std::string lit;
      ++i;
      bool closed = false;
      while (i < line.size()) {
        if (line[i] == '\\' && i + 1 < line.size()) {
          lit.push_back(line[i + 1]);
          i += 2;
        } else if (line[i] == '"') {
          closed = true;
          ++i;
          break;
        } else {
          lit.push_back(line[i++]);
        }
      }
      if (!closed) throw ParseError("unterminated quoted literal", line_no, i + 1);
      fields.emplace_back(std::move(lit), true);
    } else {
      const std::size_t start = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      fields.emplace_back(util::to_lower(line.substr(start, i - start)), false);
    }
  }
  return fields;
}

int rank(const std::optional<Level>& l) { return l ? static_cast<int>(*l) : -1; }

}  // namespace

std::string_view to_string(Level v) { return kLevel[static_cast<std::size_t>(v)]; }
std::string_view to_string(Workload v) { return kWorkload[static_cast<std::size_t>(v)]; }
std::string_view to_string(ClassSize v) { return kClassSize[static_cast<std::size_t>(v)]; }
std::string_view to_string(Timing v) { return kTiming[static_cast<std::size_t>(v)]; }

const std::vector<std::string>& searchable_attributes() {
  static const std::vector<std::string> names{"code",   "title",       "easiness", "workload",
                                              "class_size", "timing", "helpfulness", "topic"};
  return names;
}

std::optional<std::string> CourseRecord::attribute(std::string_view name) const {
  auto opt = [](const auto& field) -> std::optional<std::string> {
    if (!field) return std::nullopt;
    return std::string(to_string(*field));
  };
  if (name == "code") return code;
  if (name == "title") return title.empty() ? std::nullopt : std::optional<std::string>(title);
  if (name == "easiness") return opt(easiness);
  if (name == "workload") return opt(workload);
  if (name == "class_size") return opt(class_size);
  if (name == "timing") return opt(timing);
  if (name == "helpfulness") return opt(helpfulness);
  if (name == "topic") {
    std::string joined;
    for (const auto& t : topics) joined += (joined.empty() ? "" : ",") + t;
    return joined;
  }
  return std::nullopt;
}

PatternTerm PatternTerm::parse(std::string_view s) {
  if (logic::is_variable_text(s)) return var(std::string(s));
  return constant(std::string(s));
}

// ---------------------------------------------------------------------------
// KnowledgeGraph

KnowledgeGraph::KnowledgeGraph(std::set<TripleFact> triples) : triples_(std::move(triples)) {
  for (const auto& t : triples_) {
    if (!is_schema_predicate(t.predicate)) continue;
    auto& rec = courses_[t.subject];
    rec.code = t.subject;
    if (t.predicate == "title") {
      if (!rec.title.empty() && rec.title != t.object)
        throw SchemaError("course " + t.subject + " has conflicting title values");
      rec.title = t.object;
    } else if (t.predicate == "easiness") {
      set_once(rec.easiness, require_enum<Level>(kLevel, t), t);
    } else if (t.predicate == "workload") {
      set_once(rec.workload, require_enum<Workload>(kWorkload, t), t);
    } else if (t.predicate == "class_size") {
      set_once(rec.class_size, require_enum<ClassSize>(kClassSize, t), t);
    } else if (t.predicate == "timing") {
      set_once(rec.timing, require_enum<Timing>(kTiming, t), t);
    } else if (t.predicate == "helpfulness") {
      set_once(rec.helpfulness, require_enum<Level>(kLevel, t), t);
    } else if (t.predicate == "topic") {
      rec.topics.push_back(t.object);  // set order keeps topics sorted and unique
    }
  }
}

KnowledgeGraph KnowledgeGraph::parse(std::string_view text) {
  std::set<TripleFact> triples;
  std::size_t line_no = 0;
  for (auto line : util::split_lines(text)) {
    ++line_no;
    auto fields = split_fields(line, line_no);
    if (fields.empty()) continue;
    if (fields.size() != 3)
      throw ParseError("expected 'subject predicate object', found " +
                           std::to_string(fields.size()) + " fields",
                       line_no);
    for (std::size_t k = 0; k < 2; ++k)
      if (fields[k].second) throw ParseError("only the object may be a quoted literal", line_no);
    for (const auto& [text_field, literal] : fields)
      if (text_field.empty()) throw ParseError("empty triple component", line_no);
    TripleFact t{fields[0].first, fields[1].first, fields[2].first, fields[2].second};
    try {
      KnowledgeGraph single({t});
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
    triples.insert(std::move(t));
  }
  try {
    return KnowledgeGraph(std::move(triples));
  } catch (const SchemaError& e) {
    throw SchemaError(std::string("ontology: ") + e.what());
  }
}

KnowledgeGraph KnowledgeGraph::load(const std::filesystem::path& path) {
  return parse(util::read_file(path));
}

const CourseRecord* KnowledgeGraph::course(std::string_view code) const {
  const auto it = courses_.find(std::string(code));
  return it == courses_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Queries

std::vector<QueryBindings> query(const KnowledgeGraph& graph, const QueryPattern& pattern) {
  std::vector<QueryBindings> out;
  for (const auto& t : graph.triples()) {
    QueryBindings b;
    auto match = [&b](const PatternTerm& p, const std::string& value) {
      if (!p.variable) return p.text == value;
      const auto [it, inserted] = b.emplace(p.text, value);
      return inserted || it->second == value;
    };
    if (match(pattern.subject, t.subject) && match(pattern.predicate, t.predicate) &&
        match(pattern.object, t.object))
      out.push_back(std::move(b));
  }
  return out;
}

std::vector<CourseRecord> course_search(const KnowledgeGraph& graph,
                                        const std::set<Constraint>& constraints) {
  const auto& names = searchable_attributes();
  for (const auto& [attr, value] : constraints)
    if (std::find(names.begin(), names.end(), attr) == names.end())
      throw InputError("unknown course attribute '" + attr + "'");

  std::vector<CourseRecord> hits;
  for (const auto& [code, rec] : graph.courses()) {
    const bool ok = std::all_of(constraints.begin(), constraints.end(), [&](const Constraint& c) {
      if (c.first == "topic")
        return std::find(rec.topics.begin(), rec.topics.end(), c.second) != rec.topics.end();
      const auto v = rec.attribute(c.first);
      return v && *v == c.second;
    });
    if (ok) hits.push_back(rec);
  }
  std::sort(hits.begin(), hits.end(), [](const CourseRecord& a, const CourseRecord& b) {
    if (rank(a.easiness) != rank(b.easiness)) return rank(a.easiness) > rank(b.easiness);
    if (rank(a.helpfulness) != rank(b.helpfulness)) return rank(a.helpfulness) > rank(b.helpfulness);
    return a.code < b.code;
  });
  return hits;
}

// ---------------------------------------------------------------------------
// Enrichment

std::string_view enrichment_predicate(std::string_view attribute) {
  if (attribute == "workload") return "course_load";
  if (attribute == "class_size") return "course_size";
  if (attribute == "title") return "course_title";
  if (attribute == "easiness") return "course_easiness";
  if (attribute == "timing") return "course_timing";
  if (attribute == "helpfulness") return "course_helpfulness";
  if (attribute == "topic") return "course_topic";
  return {};
}

logic::FactStore enrich(const logic::FactStore& facts, const KnowledgeGraph& graph) {
  std::set<std::string> mentioned;
  for (const auto& f : facts)
    for (const auto& arg : f.args)
      if (arg.kind == logic::Term::Kind::atom && graph.course(arg.text)) mentioned.insert(arg.text);

  logic::FactStore out = facts;
  for (const auto& t : graph.triples()) {
    if (!mentioned.contains(t.subject)) continue;
    const auto pred = enrichment_predicate(t.predicate);
    if (pred.empty()) continue;
    out.insert(logic::Fact(std::string(pred),
                           {logic::Term::atom(t.subject),
                            t.object_is_literal ? logic::Term::literal(t.object)
                                                : logic::Term::atom(t.object)}));
  }
  return out;
}

}  // namespace beliefdm::kb
