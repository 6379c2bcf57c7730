#pragma once

// Multinomial naive Bayes over bags of preprocessed tokens, add-one smoothing.
// Used as the bag-of-words baseline next to the LSTM classifier.

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "beliefdm/belief.hpp"
#include "beliefdm/text.hpp"

namespace beliefdm::naive_bayes {

struct Document {
  text::TokenList tokens;
  std::size_t label = 0;
};

struct Model {
  std::vector<std::string> labels;
  std::vector<std::size_t> doc_counts;                 // documents per class
  std::vector<std::size_t> token_totals;               // tokens per class
  std::vector<std::map<std::string, std::size_t>> token_counts;  // per class
  std::size_t vocabulary_size = 0;                     // distinct training tokens
};

/// Throws InputError on an empty corpus or an out-of-range label.
Model train(const std::vector<Document>& corpus, std::vector<std::string> labels);

/// Normalized posterior P(c | tokens) with prior = class document share and
/// P(w | c) = (count(w, c) + 1) / (tokens_in_c + |vocabulary|). Unseen tokens
/// take the smoothed zero-count likelihood.
BeliefDistribution predict(const Model& model, const text::TokenList& tokens);

}  // namespace beliefdm::naive_bayes
