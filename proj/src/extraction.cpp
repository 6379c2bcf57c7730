#include "beliefdm/extraction.hpp"

#include <algorithm>

#include "beliefdm/errors.hpp"
#include "beliefdm/io_util.hpp"

namespace beliefdm::extraction {
namespace {

std::string join(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace

ExtractionGrammar ExtractionGrammar::defaults() {
  ExtractionGrammar g;
  g.subjects = {"i", "we", "you", "he", "she", "they"};
  g.modifiers = {"would", "will", "really", "also", "do", "definitely", "just", "still",
                 "might", "could", "should", "usually", "generally", "mostly", "strongly", "d"};
  g.verbs = {"prefer", "prefers", "want", "wants", "like", "likes", "need", "needs",
             "am", "have", "has", "enjoy", "enjoys", "love", "loves"};
  g.determiners = {"a", "an", "the", "some", "my", "any"};
  g.boundaries = {"as",   "because", "since", "but",   "so",   "when", "while", "if",
                  "though", "although", "i",   "we",    "you",  "he",   "she",   "they",
                  "which", "that",    "who",   "where", "then"};
  return g;
}

std::vector<Triple> extract_triples(const text::Utterance& utterance,
                                    const ExtractionGrammar& grammar) {
  std::vector<Triple> triples;
  const auto sentences = text::split_sentences(utterance.raw);
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto surface = text::tokenize(sentences[s], false);
    const auto lower = text::tokenize(sentences[s], true);
    const std::size_t n = lower.size();
    std::size_t i = 0;
    while (i < n) {
      if (!grammar.subjects.contains(lower[i])) {
        ++i;
        continue;
      }
      std::size_t v = i + 1;
      while (v < n && grammar.modifiers.contains(lower[v])) ++v;
      if (v >= n || !grammar.verbs.contains(lower[v])) {
        ++i;
        continue;
      }
      std::size_t obj = v + 1;
      while (obj < n && grammar.determiners.contains(lower[obj])) ++obj;
      std::size_t end = obj;
      while (end < n && !grammar.boundaries.contains(lower[end])) ++end;
      if (end == obj) {
        i = v + 1;
        continue;
      }
      triples.push_back(Triple{{i, i + 1},
                               {v, v + 1},
                               {obj, end},
                               s,
                               surface[i],
                               surface[v],
                               join(surface, obj, end)});
      i = end;
    }
  }
  return triples;
}

std::vector<Triple> parse_external_triples(std::string_view text) {
  std::vector<Triple> out;
  std::size_t line_no = 0;
  for (auto line : util::split_lines(text)) {
    ++line_no;
    if (util::trim(line).empty() || util::trim(line).front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.emplace_back(util::trim(line.substr(start, tab == std::string_view::npos ? tab : tab - start)));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty())
      throw ParseError("expected 'subject<TAB>verb<TAB>object'", line_no);
    const auto ns = text::tokenize(fields[0]).size();
    const auto nv = text::tokenize(fields[1]).size();
    const auto no = text::tokenize(fields[2]).size();
    out.push_back(Triple{{0, ns},
                         {ns, ns + nv},
                         {ns + nv, ns + nv + no},
                         out.size(),
                         fields[0],
                         fields[1],
                         fields[2]});
  }
  return out;
}

std::vector<Triple> load_external_triples(const std::filesystem::path& path) {
  return parse_external_triples(util::read_file(path));
}

// ---------------------------------------------------------------------------
// SynonymLexicon

void SynonymLexicon::add(std::string_view phrase, std::string atom) {
  auto tokens = text::tokenize(phrase);
  if (tokens.empty()) throw InputError("empty lexicon phrase");
  if (!logic::is_atom_text(atom)) throw InputError("lexicon target '" + atom + "' is not an atom");
  longest_ = std::max(longest_, tokens.size());
  phrases_[std::move(tokens)] = std::move(atom);
}

SynonymLexicon SynonymLexicon::parse(std::string_view text) {
  SynonymLexicon lex;
  std::size_t line_no = 0;
  for (auto line : util::split_lines(text)) {
    ++line_no;
    const auto body = util::trim(util::strip_comment(line, '#'));
    if (body.empty()) continue;
    const auto arrow = body.find("=>");
    if (arrow == std::string_view::npos) throw ParseError("expected 'phrase => atom'", line_no);
    try {
      lex.add(util::trim(body.substr(0, arrow)), std::string(util::trim(body.substr(arrow + 2))));
    } catch (const InputError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return lex;
}

SynonymLexicon SynonymLexicon::load(const std::filesystem::path& path) {
  return parse(util::read_file(path));
}

std::vector<std::string> SynonymLexicon::canonicalize(const std::vector<std::string>& tokens,
                                                      const text::EntityLexicon& entities) const {
  std::vector<std::string> atoms;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    for (std::size_t len = std::min(longest_, tokens.size() - i); len > 0; --len) {
      const std::vector<std::string> key(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                         tokens.begin() + static_cast<std::ptrdiff_t>(i + len));
      const auto it = phrases_.find(key);
      if (it != phrases_.end()) {
        atoms.push_back(it->second);
        i += len;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (auto tag = entities.tag(tokens[i])) atoms.push_back(util::to_lower(*tag) + "_" + tokens[i]);
    ++i;
  }
  return atoms;
}

std::set<std::string> SynonymLexicon::atoms() const {
  std::set<std::string> out;
  for (const auto& [phrase, atom] : phrases_) out.insert(atom);
  return out;
}

// ---------------------------------------------------------------------------
// FactAssertionRules

FactAssertionRules FactAssertionRules::parse(std::string_view text) {
  FactAssertionRules out;
  std::size_t line_no = 0;
  for (auto line : util::split_lines(text)) {
    ++line_no;
    const auto body = util::trim(util::strip_comment(line, '#'));
    if (body.empty()) continue;

    if (body.starts_with("class ")) {
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) throw ParseError("expected 'class NAME = verbs...'", line_no);
      const auto name = util::trim(body.substr(6, eq - 6));
      if (!logic::is_atom_text(name)) throw ParseError("verb class name must be an atom", line_no);
      auto& verbs = out.verb_classes[std::string(name)];
      for (auto v : util::split_whitespace(body.substr(eq + 1))) verbs.insert(util::to_lower(v));
      if (verbs.empty()) throw ParseError("verb class '" + std::string(name) + "' is empty", line_no);
      continue;
    }

    const auto bar = body.find('|');
    const auto arrow = body.find("=>");
    if (bar == std::string_view::npos || arrow == std::string_view::npos || arrow < bar)
      throw ParseError("expected 'verb_class | object_pattern => fact_template'", line_no);
    FactAssertionRule rule;
    rule.line = line_no;
    rule.verb_class = util::to_lower(util::trim(body.substr(0, bar)));
    const auto pattern = std::string(util::trim(body.substr(bar + 1, arrow - bar - 1)));
    if (rule.verb_class.empty() || pattern.empty())
      throw ParseError("empty verb class or object pattern", line_no);

    if (logic::is_variable_text(pattern)) {
      rule.object_variable = pattern;
    } else {
      const auto us = pattern.rfind('_');
      if (us != std::string::npos && us + 1 < pattern.size() &&
          logic::is_variable_text(std::string_view(pattern).substr(us + 1))) {
        rule.object_prefix = pattern.substr(0, us + 1);
        rule.object_variable = pattern.substr(us + 1);
      } else {
        rule.object_prefix = pattern;
      }
      const auto stem = rule.object_variable.empty()
                            ? rule.object_prefix
                            : rule.object_prefix.substr(0, rule.object_prefix.size() - 1);
      if (!logic::is_atom_text(stem))
        throw ParseError("object pattern '" + pattern + "' is not an atom or prefix_Var", line_no);
    }

    try {
      rule.assertion = logic::parse_literal(util::trim(body.substr(arrow + 2)));
    } catch (const ParseError& e) {
      throw ParseError(std::string("fact template: ") + e.what(), line_no);
    }
    for (const auto& t : rule.assertion.args)
      if (t.is_variable() && t.text != rule.object_variable)
        throw ConfigError("line " + std::to_string(line_no) + ": template variable " + t.text +
                          " is not bound by the trigger");
    out.rules.push_back(std::move(rule));
  }
  return out;
}

FactAssertionRules FactAssertionRules::load(const std::filesystem::path& path) {
  return parse(util::read_file(path));
}

std::set<std::string> FactAssertionRules::verbs() const {
  std::set<std::string> out;
  for (const auto& [name, verbs] : verb_classes) out.insert(verbs.begin(), verbs.end());
  for (const auto& r : rules)
    if (r.verb_class != "*" && !verb_classes.contains(r.verb_class)) out.insert(r.verb_class);
  return out;
}

logic::FactStore assert_facts(const std::vector<Triple>& triples, const FactAssertionRules& rules,
                              const SynonymLexicon& lexicon, const text::EntityLexicon& entities) {
  logic::FactStore facts;
  for (const auto& triple : triples) {
    const auto verb = util::to_lower(triple.verb_text);
    const auto atoms = lexicon.canonicalize(text::tokenize(triple.object_text), entities);
    for (const auto& rule : rules.rules) {
      bool verb_ok = rule.verb_class == "*" || rule.verb_class == verb;
      if (!verb_ok) {
        const auto cls = rules.verb_classes.find(rule.verb_class);
        verb_ok = cls != rules.verb_classes.end() && cls->second.contains(verb);
      }
      if (!verb_ok) continue;
      for (const auto& atom : atoms) {
        logic::Bindings b;
        if (rule.object_variable.empty()) {
          if (atom != rule.object_prefix) continue;
        } else {
          if (!atom.starts_with(rule.object_prefix)) continue;
          const auto rest = atom.substr(rule.object_prefix.size());
          if (!logic::is_atom_text(rest)) continue;
          b.emplace(rule.object_variable, logic::Term::atom(rest));
        }
        facts.insert(logic::substitute(rule.assertion, b));
      }
    }
  }
  return facts;
}

}  // namespace beliefdm::extraction
