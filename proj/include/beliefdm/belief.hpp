#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace beliefdm {

/// Default label order. Index 0 wins argmax ties.
inline const std::vector<std::string>& default_belief_labels() {
  static const std::vector<std::string> labels{"curious", "confused", "neutral"};
  return labels;
}

/// Probability vector over a configured label list.
struct BeliefDistribution {
  std::vector<double> probs;

  /// Index of the largest probability; the lowest index wins ties.
  std::size_t argmax() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < probs.size(); ++k)
      if (probs[k] > probs[best]) best = k;
    return best;
  }

  bool operator==(const BeliefDistribution&) const = default;
};

}  // namespace beliefdm
