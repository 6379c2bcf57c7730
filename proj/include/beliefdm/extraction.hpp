#pragma once

// Subject-verb-object triple extraction with a small pattern grammar, and the
// fact-assertion rulebase that turns triples into canonical facts.

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "beliefdm/logic.hpp"
#include "beliefdm/text.hpp"

namespace beliefdm::extraction {

/// Half-open token range within a sentence.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Span&) const = default;
};

struct Triple {
  Span subject;
  Span verb;
  Span object;
  std::size_t source_sentence = 0;
  std::string subject_text;
  std::string verb_text;
  std::string object_text;

  bool operator==(const Triple&) const = default;
};

/// Word classes driving the extractor. Matching is on lowercase tokens.
///   sentence := ... SUBJECT MODIFIER* VERB DETERMINER* OBJECT+ (BOUNDARY ...)?
struct ExtractionGrammar {
  std::set<std::string> subjects;
  std::set<std::string> modifiers;    // modal or adverb between subject and verb
  std::set<std::string> verbs;
  std::set<std::string> determiners;  // skipped at the start of the object
  std::set<std::string> boundaries;   // end the object phrase

  static ExtractionGrammar defaults();
};

/// Per sentence (split on . ? !), emits a triple for each
/// subject/verb/object match. Texts keep the utterance's original casing.
std::vector<Triple> extract_triples(const text::Utterance& utterance,
                                    const ExtractionGrammar& grammar = ExtractionGrammar::defaults());

/// Adapter for an external parser: `subject<TAB>verb<TAB>object` per line.
std::vector<Triple> parse_external_triples(std::string_view text);
std::vector<Triple> load_external_triples(const std::filesystem::path& path);

/// Surface phrase -> canonical atom; file lines are `surface phrase => atom`.
class SynonymLexicon {
 public:
  SynonymLexicon() = default;
  void add(std::string_view phrase, std::string atom);

  static SynonymLexicon parse(std::string_view text);
  static SynonymLexicon load(const std::filesystem::path& path);

  /// Left-to-right longest-match rewrite of tokens into canonical atoms.
  /// Unmatched tokens tagged by `entities` become `<tag>_<token>` (tag
  /// lowercased); other unmatched tokens are dropped.
  std::vector<std::string> canonicalize(const std::vector<std::string>& tokens,
                                        const text::EntityLexicon& entities = {}) const;

  std::set<std::string> atoms() const;
  std::size_t size() const { return phrases_.size(); }

 private:
  std::map<std::vector<std::string>, std::string> phrases_;
  std::size_t longest_ = 0;
};

/// `verb_class | object_pattern => fact_template`.
/// verb_class is a class declared with `class NAME = verb verb ...`, a single
/// verb, or `*`. object_pattern is a canonical atom, `prefix_Var` (binds the
/// remainder of an atom with that prefix) or a bare variable.
struct FactAssertionRule {
  std::string verb_class;
  std::string object_prefix;   // literal part of the pattern
  std::string object_variable; // empty for an exact-atom pattern
  logic::Literal assertion;
  std::size_t line = 0;
};

struct FactAssertionRules {
  std::map<std::string, std::set<std::string>> verb_classes;
  std::vector<FactAssertionRule> rules;

  /// Throws ParseError on syntax errors and ConfigError when a template
  /// variable is not bound by the trigger.
  static FactAssertionRules parse(std::string_view text);
  static FactAssertionRules load(const std::filesystem::path& path);

  /// All verbs named by classes or rules; feeds ExtractionGrammar::verbs.
  std::set<std::string> verbs() const;
};

/// Sorted, duplicate-free facts asserted by the rules for the given triples.
logic::FactStore assert_facts(const std::vector<Triple>& triples, const FactAssertionRules& rules,
                              const SynonymLexicon& lexicon,
                              const text::EntityLexicon& entities = {});

}  // namespace beliefdm::extraction
