#include "beliefdm/naive_bayes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "beliefdm/errors.hpp"

namespace beliefdm::naive_bayes {

Model train(const std::vector<Document>& corpus, std::vector<std::string> labels) {
  if (corpus.empty()) throw InputError("naive Bayes corpus is empty");
  if (labels.empty()) throw InputError("naive Bayes needs at least one label");
  Model m;
  const auto classes = labels.size();
  m.labels = std::move(labels);
  m.doc_counts.assign(classes, 0);
  m.token_totals.assign(classes, 0);
  m.token_counts.resize(classes);
  std::set<std::string> vocab;
  for (const auto& doc : corpus) {
    if (doc.label >= classes) throw InputError("document label index out of range");
    ++m.doc_counts[doc.label];
    for (const auto& tok : doc.tokens.tokens) {
      ++m.token_counts[doc.label][tok];
      ++m.token_totals[doc.label];
      vocab.insert(tok);
    }
  }
  m.vocabulary_size = vocab.size();
  return m;
}

BeliefDistribution predict(const Model& model, const text::TokenList& tokens) {
  const auto classes = model.labels.size();
  const double n_docs = static_cast<double>(
      std::accumulate(model.doc_counts.begin(), model.doc_counts.end(), std::size_t{0}));
  std::vector<double> log_post(classes, -INFINITY);
  for (std::size_t c = 0; c < classes; ++c) {
    if (model.doc_counts[c] == 0) continue;
    double lp = std::log(static_cast<double>(model.doc_counts[c]) / n_docs);
    const double denom =
        static_cast<double>(model.token_totals[c]) + static_cast<double>(model.vocabulary_size);
    for (const auto& tok : tokens.tokens) {
      const auto it = model.token_counts[c].find(tok);
      const double count = it == model.token_counts[c].end() ? 0.0 : static_cast<double>(it->second);
      lp += std::log((count + 1.0) / denom);
    }
    log_post[c] = lp;
  }
  const double peak = *std::max_element(log_post.begin(), log_post.end());
  BeliefDistribution dist;
  dist.probs.resize(classes);
  double total = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    dist.probs[c] = std::isinf(log_post[c]) ? 0.0 : std::exp(log_post[c] - peak);
    total += dist.probs[c];
  }
  for (auto& p : dist.probs) p /= total;
  return dist;
}

}  // namespace beliefdm::naive_bayes
