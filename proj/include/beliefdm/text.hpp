#pragma once

// Utterance preprocessing, vocabulary construction and fixed-length encoding.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace beliefdm::text {

enum class Speaker { user, advisor };

struct Utterance {
  std::string raw;
  Speaker speaker = Speaker::user;
  std::size_t turn_index = 0;
};

/// Tokens after lowercasing, punctuation removal and stopword filtering.
/// entity_tags is parallel to tokens; an empty string means untagged.
struct TokenList {
  std::vector<std::string> tokens;
  std::vector<std::string> entity_tags;

  bool operator==(const TokenList&) const = default;
  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

using StopwordSet = std::unordered_set<std::string>;

/// Stopword file: one lowercase word per line, '#' starts a comment.
StopwordSet load_stopwords(const std::filesystem::path& path);
StopwordSet parse_stopwords(std::string_view text);

/// A whole-token pattern in a restricted regex subset: literal characters,
/// bracket classes with ranges ([a-z0-9_]) and a '+' quantifier on the
/// preceding item. Matching is anchored at both ends.
class TokenPattern {
 public:
  explicit TokenPattern(std::string_view source);
  bool matches(std::string_view token) const;
  const std::string& source() const { return source_; }

 private:
  struct Item {
    std::vector<std::pair<unsigned char, unsigned char>> ranges;
    bool repeat = false;
  };
  static bool match_from(const std::vector<Item>& items, std::size_t item, std::string_view s,
                         std::size_t pos);
  std::string source_;
  std::vector<Item> items_;
};

struct EntityPattern {
  std::string tag;
  TokenPattern pattern;
};

/// Entity lexicon file: `TAG pattern` per line, '#' comments. First match wins.
class EntityLexicon {
 public:
  EntityLexicon() = default;
  explicit EntityLexicon(std::vector<EntityPattern> patterns) : patterns_(std::move(patterns)) {}

  static EntityLexicon load(const std::filesystem::path& path);
  static EntityLexicon parse(std::string_view text);

  /// Tag of the first pattern matching the token, if any.
  std::optional<std::string> tag(std::string_view token) const;
  const std::vector<EntityPattern>& patterns() const { return patterns_; }

 private:
  std::vector<EntityPattern> patterns_;
};

/// Split on whitespace and ASCII punctuation, dropping apostrophes. No stopword removal.
std::vector<std::string> tokenize(std::string_view raw, bool lowercase = true);

/// Split on '.', '?' and '!'. Empty sentences are dropped.
std::vector<std::string> split_sentences(std::string_view raw);

TokenList preprocess(std::string_view raw, const StopwordSet& stopwords,
                     const EntityLexicon& entities);

/// Maps tokens to 1..size(); 0 is shared by padding and out-of-vocabulary words.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Explicit mapping. Indices must be unique and in [1, capacity].
  static Vocabulary from_map(std::unordered_map<std::string, std::int32_t> word_to_index,
                             std::int32_t capacity);

  std::int32_t index(std::string_view word) const;
  /// Largest index that may be emitted (V).
  std::int32_t size() const { return capacity_; }
  const std::unordered_map<std::string, std::int32_t>& map() const { return word_to_index_; }
  /// Words ordered by index; used for serialization.
  std::vector<std::string> words_by_index() const;

  bool operator==(const Vocabulary& other) const {
    return capacity_ == other.capacity_ && word_to_index_ == other.word_to_index_;
  }

 private:
  std::unordered_map<std::string, std::int32_t> word_to_index_;
  std::int32_t capacity_ = 0;
};

/// Top-V tokens by descending frequency, ties broken by ascending byte order.
Vocabulary build_vocabulary(const std::vector<TokenList>& corpus, std::int32_t max_size);

struct TokenSequence {
  std::vector<std::int32_t> indices;
  std::size_t true_length = 0;  // token count before padding or truncation

  bool operator==(const TokenSequence&) const = default;
};

/// Pre-pads with 0 and keeps the last `length` tokens when truncating.
TokenSequence encode(const TokenList& tokens, const Vocabulary& vocab, std::size_t length);

/// Stopwords plus entity patterns; the preprocessing half of a classifier.
struct TextPipeline {
  StopwordSet stopwords;
  EntityLexicon entities;

  TokenList operator()(std::string_view raw) const { return preprocess(raw, stopwords, entities); }
};

}  // namespace beliefdm::text
