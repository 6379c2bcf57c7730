#include "beliefdm/text.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "beliefdm/errors.hpp"
#include "beliefdm/io_util.hpp"

namespace beliefdm::text {

StopwordSet parse_stopwords(std::string_view text) {
  StopwordSet words;
  for (auto line : util::split_lines(text)) {
    const auto word = util::trim(util::strip_comment(line, '#'));
    if (!word.empty()) words.insert(util::to_lower(word));
  }
  return words;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
  return parse_stopwords(util::read_file(path));
}

// ---------------------------------------------------------------------------
// TokenPattern

TokenPattern::TokenPattern(std::string_view source) : source_(source) {
  std::size_t i = 0;
  while (i < source.size()) {
    const auto c = static_cast<unsigned char>(source[i]);
    Item item;
    if (c == '[') {
      const auto close = source.find(']', i + 1);
      if (close == std::string_view::npos || close == i + 1)
        throw ConfigError("unterminated or empty character class in pattern '" + source_ + "'");
      for (std::size_t k = i + 1; k < close; ++k) {
        const auto lo = static_cast<unsigned char>(source[k]);
        if (k + 2 < close && source[k + 1] == '-') {
          const auto hi = static_cast<unsigned char>(source[k + 2]);
          if (hi < lo) throw ConfigError("reversed range in pattern '" + source_ + "'");
          item.ranges.emplace_back(lo, hi);
          k += 2;
        } else {
          item.ranges.emplace_back(lo, lo);
        }
      }
      i = close + 1;
    } else if (c == '+') {
      throw ConfigError("'+' without a preceding item in pattern '" + source_ + "'");
    } else if (c == '\\' && i + 1 < source.size()) {
      const auto lit = static_cast<unsigned char>(source[i + 1]);
      item.ranges.emplace_back(lit, lit);
      i += 2;
    } else {
      item.ranges.emplace_back(c, c);
      ++i;
    }
    if (i < source.size() && source[i] == '+') {
      item.repeat = true;
      ++i;
    }
    items_.push_back(std::move(item));
  }
  if (items_.empty()) throw ConfigError("empty token pattern");
}

bool TokenPattern::match_from(const std::vector<Item>& items, std::size_t item, std::string_view s,
                              std::size_t pos) {
  if (item == items.size()) return pos == s.size();
  const auto& it = items[item];
  auto accepts = [&](std::size_t p) {
    if (p >= s.size()) return false;
    const auto c = static_cast<unsigned char>(s[p]);
    return std::any_of(it.ranges.begin(), it.ranges.end(),
                       [c](const auto& r) { return c >= r.first && c <= r.second; });
  };
  if (!it.repeat) return accepts(pos) && match_from(items, item + 1, s, pos + 1);
  // Greedy with backtracking; tokens are short.
  std::size_t end = pos;
  while (accepts(end)) ++end;
  for (std::size_t stop = end; stop > pos; --stop) {
    if (match_from(items, item + 1, s, stop)) return true;
  }
  return false;
}

bool TokenPattern::matches(std::string_view token) const { return match_from(items_, 0, token, 0); }

// ---------------------------------------------------------------------------
// EntityLexicon

EntityLexicon EntityLexicon::parse(std::string_view text) {
  std::vector<EntityPattern> patterns;
  std::size_t line_no = 0;
  for (auto line : util::split_lines(text)) {
    ++line_no;
    const auto body = util::trim(util::strip_comment(line, '#'));
    if (body.empty()) continue;
    const auto fields = util::split_whitespace(body);
    if (fields.size() != 2) throw ParseError("expected 'TAG pattern'", line_no);
    try {
      patterns.push_back({std::string(fields[0]), TokenPattern(fields[1])});
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return EntityLexicon(std::move(patterns));
}

EntityLexicon EntityLexicon::load(const std::filesystem::path& path) {
  return parse(util::read_file(path));
}

std::optional<std::string> EntityLexicon::tag(std::string_view token) const {
  for (const auto& p : patterns_) {
    if (p.pattern.matches(token)) return p.tag;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Tokenization

std::vector<std::string> tokenize(std::string_view raw, bool lowercase) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (const char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    if (c == '\'') continue;  // "don't" -> "dont"
    if (c < 0x80 && (std::isspace(c) || util::is_ascii_punct(c))) {
      flush();
    } else {
      current.push_back(lowercase && c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return tokens;
}

std::vector<std::string> split_sentences(std::string_view raw) {
  std::vector<std::string> sentences;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= raw.size(); ++i) {
    if (i == raw.size() || raw[i] == '.' || raw[i] == '?' || raw[i] == '!') {
      const auto piece = util::trim(raw.substr(start, i - start));
      if (!piece.empty()) sentences.emplace_back(piece);
      start = i + 1;
    }
  }
  return sentences;
}

TokenList preprocess(std::string_view raw, const StopwordSet& stopwords,
                     const EntityLexicon& entities) {
  TokenList out;
  for (auto& tok : tokenize(raw)) {
    if (stopwords.contains(tok)) continue;
    out.entity_tags.push_back(entities.tag(tok).value_or(std::string{}));
    out.tokens.push_back(std::move(tok));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::from_map(std::unordered_map<std::string, std::int32_t> word_to_index,
                                std::int32_t capacity) {
  std::unordered_set<std::int32_t> seen;
  for (const auto& [word, idx] : word_to_index) {
    if (idx < 1 || idx > capacity)
      throw InputError("vocabulary index " + std::to_string(idx) + " for '" + word +
                       "' outside [1, " + std::to_string(capacity) + "]");
    if (!seen.insert(idx).second)
      throw InputError("vocabulary index " + std::to_string(idx) + " assigned twice");
  }
  Vocabulary v;
  v.word_to_index_ = std::move(word_to_index);
  v.capacity_ = capacity;
  return v;
}

std::int32_t Vocabulary::index(std::string_view word) const {
  const auto it = word_to_index_.find(std::string(word));
  return it == word_to_index_.end() ? 0 : it->second;
}

std::vector<std::string> Vocabulary::words_by_index() const {
  std::vector<std::string> words(static_cast<std::size_t>(capacity_));
  for (const auto& [word, idx] : word_to_index_) words[static_cast<std::size_t>(idx - 1)] = word;
  return words;
}

Vocabulary build_vocabulary(const std::vector<TokenList>& corpus, std::int32_t max_size) {
  if (max_size < 1) throw InputError("vocabulary size must be at least 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : corpus)
    for (const auto& tok : doc.tokens) ++counts[tok];

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  const auto keep = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(max_size));
  std::unordered_map<std::string, std::int32_t> map;
  for (std::size_t i = 0; i < keep; ++i)
    map.emplace(ranked[i].first, static_cast<std::int32_t>(i + 1));
  return Vocabulary::from_map(std::move(map), static_cast<std::int32_t>(keep));
}

TokenSequence encode(const TokenList& tokens, const Vocabulary& vocab, std::size_t length) {
  if (length < 1) throw InputError("sequence length must be at least 1");
  TokenSequence seq;
  seq.true_length = tokens.size();
  seq.indices.assign(length, 0);
  const std::size_t n = tokens.size();
  const std::size_t take = std::min(n, length);
  const std::size_t src_begin = n - take;
  const std::size_t dst_begin = length - take;
  for (std::size_t k = 0; k < take; ++k)
    seq.indices[dst_begin + k] = vocab.index(tokens.tokens[src_begin + k]);
  return seq;
}

}  // namespace beliefdm::text
