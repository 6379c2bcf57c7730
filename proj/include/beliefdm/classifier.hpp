#pragma once

// Training, evaluation and persistence for the LSTM belief classifier.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "beliefdm/belief.hpp"
#include "beliefdm/lstm.hpp"
#include "beliefdm/text.hpp"

namespace beliefdm::classifier {

struct LabeledUtterance {
  std::string text;
  std::string label;
};

/// `label<TAB>utterance` per line. Blank lines and lines starting with '#' are skipped.
std::vector<LabeledUtterance> load_corpus(const std::filesystem::path& path);
std::vector<LabeledUtterance> parse_corpus(std::string_view text);

struct TrainConfig {
  std::vector<std::string> labels = default_belief_labels();
  std::int32_t vocab_size = 300;
  std::size_t seq_len = 50;
  std::size_t embed_dim = 32;
  std::size_t hidden = 100;
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  lstm::AdamConfig adam;
  double dropout_rate = 0.5;
  std::uint64_t rng_seed = 42;
  double train_fraction = 0.75;

  /// Throws InputError on out-of-range values.
  void validate() const;
};

/// A trained classifier: parameters plus everything needed to encode input.
struct Model {
  std::vector<std::string> labels;
  text::Vocabulary vocab;
  std::size_t seq_len = 50;
  lstm::ModelParams params;

  BeliefDistribution predict(const text::TokenList& tokens) const;

  bool operator==(const Model&) const = default;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;      // mean over examples, with dropout, as seen during the epoch
  double train_accuracy = 0.0;  // under the dropout masks of the epoch
};

struct Evaluation {
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::size_t total = 0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::optional<Evaluation> test;  // absent when the held-out split is empty
  std::vector<std::string> warnings;
};

struct TrainResult {
  Model model;
  TrainReport report;
};

/// Stratified split, vocabulary from the training split, seeded mini-batch Adam.
TrainResult train(const std::vector<LabeledUtterance>& corpus, const TrainConfig& cfg,
                  const text::TextPipeline& pipeline);

struct EncodedExample {
  text::TokenSequence seq;
  std::size_t label = 0;
};

/// Accuracy under argmax (lowest index wins ties) and a [true][predicted] confusion matrix.
/// Throws InputError on an empty test set.
Evaluation evaluate(const Model& model, const std::vector<EncodedExample>& testset);
Evaluation evaluate(const Model& model, const std::vector<LabeledUtterance>& testset,
                    const text::TextPipeline& pipeline);

/// Binary container: magic, format version, labels, vocabulary, dims header
/// (V, D, H, C, L) and named tensors as shape + little-endian float64 values.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize_model(const Model& model);
Model deserialize_model(const std::vector<std::uint8_t>& bytes);

inline constexpr char kModelMagic[8] = {'B', 'D', 'M', 'L', 'S', 'T', 'M', '\0'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

}  // namespace beliefdm::classifier
