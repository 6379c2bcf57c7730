#pragma once

// Embedding -> single-layer LSTM -> (dropout) -> dense -> softmax, with exact
// backpropagation through time and an Adam optimizer. All arithmetic is double.
//
// Gate layout in the packed 4H vectors is [input | forget | candidate | output]:
//   i = sigmoid(z_i), f = sigmoid(z_f), g = tanh(z_g), o = sigmoid(z_o)
//   c = f * c_prev + i * g
//   h = o * tanh(c)
// where z = b + x W + h_prev U.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beliefdm/belief.hpp"
#include "beliefdm/text.hpp"

namespace beliefdm::lstm {

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool operator==(const Matrix&) const = default;
};

struct Dims {
  std::size_t vocab_size = 300;  // V; the embedding has V + 1 rows
  std::size_t embed_dim = 32;    // D
  std::size_t hidden = 100;      // H
  std::size_t classes = 3;       // C

  bool operator==(const Dims&) const = default;
};

struct ModelParams {
  Matrix embedding;  // (V+1) x D
  Matrix lstm_w;     // D x 4H
  Matrix lstm_u;     // H x 4H
  std::vector<double> lstm_b;  // 4H
  Matrix dense_w;    // H x C
  std::vector<double> dense_b;  // C

  static ModelParams zeros(const Dims& dims);

  /// Embeddings uniform(-0.05, 0.05); weight matrices uniform(+-1/sqrt(fan_in)); biases zero.
  static ModelParams random(const Dims& dims, std::uint64_t seed);

  Dims dims() const;

  /// Throws ConfigError when tensor shapes disagree with each other.
  void validate() const;

  /// Every tensor as a flat span, in serialization order.
  void for_each_tensor(const std::function<void(const std::string& name, std::span<double>)>& fn);
  void for_each_tensor(
      const std::function<void(const std::string& name, std::span<const double>)>& fn) const;

  bool operator==(const ModelParams&) const = default;
};

struct CellState {
  std::vector<double> h;
  std::vector<double> c;
};

/// One LSTM step. Throws ConfigError on shape mismatch.
CellState lstm_cell(std::span<const double> x, std::span<const double> h_prev,
                    std::span<const double> c_prev, const ModelParams& params);

/// Activations retained for backward().
struct ForwardCache {
  std::vector<std::int32_t> indices;
  std::vector<std::vector<double>> gates;  // per step, 4H post-activation
  std::vector<std::vector<double>> cells;  // per step c_t
  std::vector<std::vector<double>> hiddens;  // per step h_t
  std::vector<double> dropout_mask;  // empty when no dropout
  std::vector<double> dropped;       // final hidden state after the mask
  std::vector<double> probs;
};

struct ForwardResult {
  BeliefDistribution dist;
  ForwardCache cache;
};

/// Mask entries are the multipliers applied to the final hidden state
/// (0 or 1/(1-rate) for inverted dropout). Throws NumericError on non-finite logits.
ForwardResult forward(const text::TokenSequence& seq, const ModelParams& params,
                      std::optional<std::span<const double>> dropout_mask = std::nullopt);

/// -ln(max(p_true, 1e-12)).
double cross_entropy(const BeliefDistribution& dist, std::size_t true_label);

/// Gradient of cross_entropy(forward(...)) with respect to every parameter.
ModelParams backward(const ForwardCache& cache, const ModelParams& params, std::size_t true_label);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::uint64_t t = 0;

  static AdamState for_params(const ModelParams& params);
};

/// One bias-corrected Adam step, applied in place; increments state.t.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const AdamConfig& cfg);

}  // namespace beliefdm::lstm
