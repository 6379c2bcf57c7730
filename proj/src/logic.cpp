#include "beliefdm/logic.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "beliefdm/io_util.hpp"

namespace beliefdm::logic {

// ---------------------------------------------------------------------------
// Terms and literals

bool is_atom_text(std::string_view s) {
  if (s.empty() || !std::islower(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

bool is_variable_text(std::string_view s) {
  if (s.empty()) return false;
  const auto c0 = static_cast<unsigned char>(s[0]);
  if (!std::isupper(c0) && c0 != '_') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::string Term::to_string() const {
  if (kind != Kind::literal) return text;
  std::string out = "\"";
  for (const char c : text) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

std::string render(const std::string& predicate, const std::vector<Term>& args) {
  std::string out = predicate + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += args[i].to_string();
  }
  return out + ")";
}

}  // namespace

bool Literal::is_ground() const {
  return std::none_of(args.begin(), args.end(), [](const Term& t) { return t.is_variable(); });
}

std::string Literal::to_string() const { return render(predicate, args); }

Fact::Fact(std::string p, std::vector<Term> a) : predicate(std::move(p)), args(std::move(a)) {
  for (const auto& t : args)
    if (t.is_variable()) throw InputError("fact " + render(predicate, args) + " is not ground");
}

Fact Fact::from_literal(const Literal& lit) { return Fact(lit.predicate, lit.args); }

std::string Fact::to_string() const { return render(predicate, args); }

std::string Rule::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (i) out += " & ";
    out += body[i].to_string();
  }
  out += " => ";
  for (std::size_t i = 0; i < head.size(); ++i) {
    if (i) out += ", ";
    out += head[i].to_string();
  }
  return out + ".";
}

// ---------------------------------------------------------------------------
// Lexer / parser

namespace {

struct Token {
  enum class Kind { atom, variable, number, literal, lparen, rparen, comma, amp, arrow, period, end };
  Kind kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space();
    const std::size_t line = line_, col = col_;
    if (pos_ >= src_.size()) return {Token::Kind::end, "", line, col};
    const char c = src_[pos_];
    auto single = [&](Token::Kind k) {
      advance();
      return Token{k, std::string(1, c), line, col};
    };
    switch (c) {
      case '(': return single(Token::Kind::lparen);
      case ')': return single(Token::Kind::rparen);
      case ',': return single(Token::Kind::comma);
      case '&': return single(Token::Kind::amp);
      case '.': return single(Token::Kind::period);
      default: break;
    }
    if (c == '=' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
      advance();
      advance();
      return {Token::Kind::arrow, "=>", line, col};
    }
    if (c == '"' || c == '\'') return quoted(c, line, col);
    const auto uc = static_cast<unsigned char>(c);
    if (std::isdigit(uc) || (c == '-' && pos_ + 1 < src_.size() &&
                             std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      std::string text(1, c);
      advance();
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        text.push_back(src_[pos_]);
        advance();
      }
      if (pos_ + 1 < src_.size() && src_[pos_] == '.' &&
          std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
        text.push_back('.');
        advance();
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
          text.push_back(src_[pos_]);
          advance();
        }
      }
      return {Token::Kind::number, text, line, col};
    }
    if (std::isalpha(uc) || c == '_') {
      std::string text;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                    src_[pos_] == '_')) {
        text.push_back(src_[pos_]);
        advance();
      }
      const bool var = std::isupper(uc) || c == '_';
      return {var ? Token::Kind::variable : Token::Kind::atom, text, line, col};
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line, col);
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  Token quoted(char quote, std::size_t line, std::size_t col) {
    advance();
    std::string text;
    while (true) {
      if (pos_ >= src_.size() || src_[pos_] == '\n')
        throw ParseError("unterminated quoted literal", line, col);
      const char c = src_[pos_];
      if (c == quote) {
        advance();
        break;
      }
      if (c == '\\' && pos_ + 1 < src_.size()) {
        advance();
        text.push_back(src_[pos_]);
        advance();
        continue;
      }
      text.push_back(c);
      advance();
    }
    return {Token::Kind::literal, text, line, col};
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

const char* describe(Token::Kind k) {
  switch (k) {
    case Token::Kind::atom: return "atom";
    case Token::Kind::variable: return "variable";
    case Token::Kind::number: return "number";
    case Token::Kind::literal: return "quoted literal";
    case Token::Kind::lparen: return "'('";
    case Token::Kind::rparen: return "')'";
    case Token::Kind::comma: return "','";
    case Token::Kind::amp: return "'&'";
    case Token::Kind::arrow: return "'=>'";
    case Token::Kind::period: return "'.'";
    case Token::Kind::end: return "end of input";
  }
  return "token";
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { cur_ = lex_.next(); }

  bool at_end() const { return cur_.kind == Token::Kind::end; }
  const Token& peek() const { return cur_; }

  Token expect(Token::Kind k, const char* context) {
    if (cur_.kind != k)
      throw ParseError(std::string("expected ") + describe(k) + " " + context + ", found " +
                           describe(cur_.kind) +
                           (cur_.text.empty() ? "" : " '" + cur_.text + "'"),
                       cur_.line, cur_.column);
    Token t = cur_;
    cur_ = lex_.next();
    return t;
  }

  bool accept(Token::Kind k) {
    if (cur_.kind != k) return false;
    cur_ = lex_.next();
    return true;
  }

  Literal literal() {
    const auto name = expect(Token::Kind::atom, "as predicate name");
    Literal lit{name.text, {}};
    expect(Token::Kind::lparen, "after predicate name");
    do {
      lit.args.push_back(term());
    } while (accept(Token::Kind::comma));
    expect(Token::Kind::rparen, "to close argument list");
    return lit;
  }

  Term term() {
    const Token t = cur_;
    switch (t.kind) {
      case Token::Kind::atom: cur_ = lex_.next(); return Term::atom(t.text);
      case Token::Kind::variable: cur_ = lex_.next(); return Term::var(t.text);
      case Token::Kind::number: cur_ = lex_.next(); return Term::number(t.text);
      case Token::Kind::literal: cur_ = lex_.next(); return Term::literal(t.text);
      default:
        throw ParseError(std::string("expected a term, found ") + describe(t.kind), t.line,
                         t.column);
    }
  }

 private:
  Lexer lex_;
  Token cur_;
};

void check_arity(std::unordered_map<std::string, std::size_t>& arity, const Literal& lit,
                 std::size_t line) {
  const auto [it, inserted] = arity.emplace(lit.predicate, lit.args.size());
  if (!inserted && it->second != lit.args.size())
    throw SchemaError("line " + std::to_string(line) + ": predicate '" + lit.predicate +
                      "' used with arity " + std::to_string(lit.args.size()) +
                      " but earlier with arity " + std::to_string(it->second));
}

}  // namespace

RuleBase parse_rules(std::string_view text) {
  Parser p(text);
  RuleBase base;
  std::unordered_map<std::string, std::size_t> arity;
  while (!p.at_end()) {
    Rule rule;
    rule.line = p.peek().line;
    rule.id = "r" + std::to_string(base.rules.size() + 1);
    do {
      rule.body.push_back(p.literal());
    } while (p.accept(Token::Kind::amp));
    p.expect(Token::Kind::arrow, "between rule body and head");
    do {
      rule.head.push_back(p.literal());
    } while (p.accept(Token::Kind::comma));
    p.expect(Token::Kind::period, "to end the rule");

    std::set<std::string> body_vars;
    for (const auto& lit : rule.body) {
      check_arity(arity, lit, rule.line);
      for (const auto& t : lit.args)
        if (t.is_variable()) body_vars.insert(t.text);
    }
    for (const auto& lit : rule.head) {
      check_arity(arity, lit, rule.line);
      for (const auto& t : lit.args)
        if (t.is_variable() && !body_vars.contains(t.text))
          throw ConfigError("line " + std::to_string(rule.line) + ": unsafe rule, head variable " +
                            t.text + " does not occur in the body");
    }
    base.rules.push_back(std::move(rule));
  }
  return base;
}

RuleBase load_rules(const std::string& path) { return parse_rules(util::read_file(path)); }

FactStore parse_facts(std::string_view text) {
  Parser p(text);
  FactStore facts;
  while (!p.at_end()) {
    const auto at = p.peek();
    auto lit = p.literal();
    p.expect(Token::Kind::period, "after fact");
    if (!lit.is_ground()) throw ParseError("fact " + lit.to_string() + " is not ground", at.line, at.column);
    facts.insert(Fact::from_literal(lit));
  }
  return facts;
}

FactStore load_facts(const std::string& path) { return parse_facts(util::read_file(path)); }

Literal parse_literal(std::string_view text) {
  Parser p(text);
  auto lit = p.literal();
  p.accept(Token::Kind::period);
  if (!p.at_end()) throw ParseError("trailing input after literal", p.peek().line, p.peek().column);
  return lit;
}

// ---------------------------------------------------------------------------
// Unification

std::optional<Bindings> unify(const Literal& pattern, const Fact& fact, const Bindings& bindings) {
  if (pattern.predicate != fact.predicate || pattern.args.size() != fact.args.size())
    return std::nullopt;
  Bindings out = bindings;
  for (std::size_t i = 0; i < pattern.args.size(); ++i) {
    const auto& p = pattern.args[i];
    const auto& f = fact.args[i];
    if (!p.is_variable()) {
      if (p != f) return std::nullopt;
      continue;
    }
    const auto [it, inserted] = out.emplace(p.text, f);
    if (!inserted && it->second != f) return std::nullopt;
  }
  return out;
}

Fact substitute(const Literal& lit, const Bindings& bindings) {
  std::vector<Term> args;
  args.reserve(lit.args.size());
  for (const auto& t : lit.args) {
    if (!t.is_variable()) {
      args.push_back(t);
      continue;
    }
    const auto it = bindings.find(t.text);
    if (it == bindings.end()) throw InputError("unbound variable " + t.text + " in " + lit.to_string());
    args.push_back(it->second);
  }
  return Fact(lit.predicate, std::move(args));
}

// ---------------------------------------------------------------------------
// Forward chaining

namespace {

using Index = std::map<std::pair<std::string, std::size_t>, std::vector<const Fact*>>;

void index_into(Index& idx, const Fact& f) {
  idx[{f.predicate, f.args.size()}].push_back(&f);
}

const std::vector<const Fact*>& lookup(const Index& idx, const Literal& lit) {
  static const std::vector<const Fact*> none;
  const auto it = idx.find({lit.predicate, lit.args.size()});
  return it == idx.end() ? none : it->second;
}

// Enumerates bindings for rule.body where literal `pivot` matches a delta
// fact and every other literal matches any known fact.
template <typename Fn>
void join(const Rule& rule, std::size_t pivot, const Index& all, const Index& delta,
          std::size_t pos, const Bindings& b, Fn&& emit) {
  if (pos == rule.body.size()) {
    emit(b);
    return;
  }
  const auto& lit = rule.body[pos];
  for (const Fact* f : lookup(pos == pivot ? delta : all, lit)) {
    if (auto next = unify(lit, *f, b)) join(rule, pivot, all, delta, pos + 1, *next, emit);
  }
}

}  // namespace

InferenceResult forward_chain(const RuleBase& rules, const FactStore& facts,
                              const InferenceLimits& limits) {
  InferenceResult result;
  result.derived = facts;

  // Pointers into std::set stay valid across inserts.
  Index all;
  Index delta;
  for (const auto& f : result.derived) {
    index_into(all, f);
    index_into(delta, f);
  }

  while (!delta.empty()) {
    std::vector<const Fact*> fresh;
    for (const auto& rule : rules.rules) {
      for (std::size_t pivot = 0; pivot < rule.body.size(); ++pivot) {
        join(rule, pivot, all, delta, 0, Bindings{}, [&](const Bindings& b) {
          TraceEntry entry{rule.id, b, {}};
          for (const auto& head : rule.head) {
            auto [it, inserted] = result.derived.insert(substitute(head, b));
            if (inserted) {
              fresh.push_back(&*it);
              entry.produced.push_back(*it);
            }
          }
          if (!entry.produced.empty()) result.trace.push_back(std::move(entry));
          if (result.derived.size() > limits.max_facts)
            throw ResourceError("inference exceeded " + std::to_string(limits.max_facts) +
                                    " facts",
                                std::move(result));
        });
      }
    }
    // New facts join the full index only after the round so every pivot of
    // this round sees the same snapshot.
    delta.clear();
    for (const Fact* f : fresh) {
      index_into(all, *f);
      index_into(delta, *f);
    }
    if (fresh.empty()) break;
    if (++result.iterations > limits.max_iterations)
      throw ResourceError("inference exceeded " + std::to_string(limits.max_iterations) +
                              " iterations",
                          std::move(result));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Directives

DirectiveSet derive_directives(const FactStore& derived) {
  static const std::map<std::string, std::size_t> reserved{
      {"skipstate", 1},   {"askstate", 1},          {"slot_fill", 2},
      {"slot_update", 2}, {"recommend_constraint", 2}, {"knows_agent", 1}};
  DirectiveSet out;
  for (const auto& f : derived) {
    const auto it = reserved.find(f.predicate);
    if (it == reserved.end()) continue;
    if (f.args.size() != it->second)
      throw SchemaError("reserved predicate " + f.predicate + " expects arity " +
                        std::to_string(it->second) + ", got " + f.to_string());
    const auto& a0 = f.args[0].text;
    if (f.predicate == "skipstate") out.skip.insert(a0);
    else if (f.predicate == "askstate") out.ask.insert(a0);
    else if (f.predicate == "slot_fill") out.slot_fill[a0].insert(f.args[1].text);
    else if (f.predicate == "slot_update") out.slot_update[a0].insert(f.args[1].text);
    else if (f.predicate == "recommend_constraint") out.recommend_constraints.emplace(a0, f.args[1].text);
    else out.knows.insert(a0);
  }
  return out;
}

}  // namespace beliefdm::logic
