#include "beliefdm/lstm.hpp"

#include <algorithm>
#include <cmath>

#include "beliefdm/errors.hpp"
#include "beliefdm/kernels.hpp"
#include "beliefdm/rng.hpp"

namespace beliefdm::lstm {
namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void fill_uniform(std::span<double> xs, Rng& rng, double limit) {
  for (auto& x : xs) x = rng.uniform(-limit, limit);
}

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

// Pre-activation z = b + x W + h_prev U, then gate nonlinearities in place.
void gate_activations(std::span<const double> x, std::span<const double> h_prev,
                      const ModelParams& p, std::span<double> gates) {
  const std::size_t hidden = p.lstm_u.rows;
  std::copy(p.lstm_b.begin(), p.lstm_b.end(), gates.begin());
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != 0.0) kernels::axpy(x[i], p.lstm_w.row(i), gates);
  for (std::size_t k = 0; k < hidden; ++k)
    if (h_prev[k] != 0.0) kernels::axpy(h_prev[k], p.lstm_u.row(k), gates);
  for (std::size_t k = 0; k < hidden; ++k) {
    gates[k] = sigmoid(gates[k]);
    gates[hidden + k] = sigmoid(gates[hidden + k]);
    gates[2 * hidden + k] = std::tanh(gates[2 * hidden + k]);
    gates[3 * hidden + k] = sigmoid(gates[3 * hidden + k]);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelParams

ModelParams ModelParams::zeros(const Dims& d) {
  ModelParams p;
  p.embedding = Matrix(d.vocab_size + 1, d.embed_dim);
  p.lstm_w = Matrix(d.embed_dim, 4 * d.hidden);
  p.lstm_u = Matrix(d.hidden, 4 * d.hidden);
  p.lstm_b.assign(4 * d.hidden, 0.0);
  p.dense_w = Matrix(d.hidden, d.classes);
  p.dense_b.assign(d.classes, 0.0);
  return p;
}

ModelParams ModelParams::random(const Dims& d, std::uint64_t seed) {
  ModelParams p = zeros(d);
  Rng rng(seed);
  fill_uniform(p.embedding.data, rng, 0.05);
  fill_uniform(p.lstm_w.data, rng, 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(d.embed_dim, 1))));
  fill_uniform(p.lstm_u.data, rng, 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(d.hidden, 1))));
  fill_uniform(p.dense_w.data, rng, 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(d.hidden, 1))));
  return p;
}

Dims ModelParams::dims() const {
  return Dims{embedding.rows == 0 ? 0 : embedding.rows - 1, embedding.cols, lstm_u.rows,
              dense_w.cols};
}

void ModelParams::validate() const {
  if (embedding.rows == 0) throw ConfigError("embedding must have at least one row");
  const auto d = dims();
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("shape mismatch: " + what);
  };
  check(lstm_w.rows == d.embed_dim && lstm_w.cols == 4 * d.hidden,
        "lstm_w is " + shape_str(lstm_w) + ", expected " + std::to_string(d.embed_dim) + "x" +
            std::to_string(4 * d.hidden));
  check(lstm_u.cols == 4 * d.hidden, "lstm_u is " + shape_str(lstm_u));
  check(lstm_b.size() == 4 * d.hidden, "lstm_b has " + std::to_string(lstm_b.size()) + " entries");
  check(dense_w.rows == d.hidden, "dense_w is " + shape_str(dense_w));
  check(dense_b.size() == d.classes, "dense_b has " + std::to_string(dense_b.size()) + " entries");
  for (const Matrix* m : {&embedding, &lstm_w, &lstm_u, &dense_w})
    check(m->data.size() == m->rows * m->cols, "tensor storage does not match its shape");
}

void ModelParams::for_each_tensor(
    const std::function<void(const std::string&, std::span<double>)>& fn) {
  fn("embedding", embedding.data);
  fn("lstm_w", lstm_w.data);
  fn("lstm_u", lstm_u.data);
  fn("lstm_b", lstm_b);
  fn("dense_w", dense_w.data);
  fn("dense_b", dense_b);
}

void ModelParams::for_each_tensor(
    const std::function<void(const std::string&, std::span<const double>)>& fn) const {
  fn("embedding", embedding.data);
  fn("lstm_w", lstm_w.data);
  fn("lstm_u", lstm_u.data);
  fn("lstm_b", lstm_b);
  fn("dense_w", dense_w.data);
  fn("dense_b", dense_b);
}

// ---------------------------------------------------------------------------
// Forward

CellState lstm_cell(std::span<const double> x, std::span<const double> h_prev,
                    std::span<const double> c_prev, const ModelParams& params) {
  params.validate();
  const std::size_t hidden = params.lstm_u.rows;
  if (x.size() != params.lstm_w.rows || h_prev.size() != hidden || c_prev.size() != hidden)
    throw ConfigError("lstm_cell: input sizes do not match the parameter shapes");
  std::vector<double> gates(4 * hidden);
  gate_activations(x, h_prev, params, gates);
  CellState out{std::vector<double>(hidden), std::vector<double>(hidden)};
  for (std::size_t k = 0; k < hidden; ++k) {
    out.c[k] = gates[hidden + k] * c_prev[k] + gates[k] * gates[2 * hidden + k];
    out.h[k] = gates[3 * hidden + k] * std::tanh(out.c[k]);
  }
  return out;
}

ForwardResult forward(const text::TokenSequence& seq, const ModelParams& params,
                      std::optional<std::span<const double>> dropout_mask) {
  const auto d = params.dims();
  const std::size_t hidden = d.hidden;
  ForwardResult result;
  auto& cache = result.cache;
  cache.indices = seq.indices;

  std::vector<double> h(hidden, 0.0);
  std::vector<double> c(hidden, 0.0);
  cache.gates.reserve(seq.indices.size());
  for (const auto idx : seq.indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) > d.vocab_size)
      throw InputError("token index " + std::to_string(idx) + " outside [0, " +
                       std::to_string(d.vocab_size) + "]");
    std::vector<double> gates(4 * hidden);
    gate_activations(params.embedding.row(static_cast<std::size_t>(idx)), h, params, gates);
    for (std::size_t k = 0; k < hidden; ++k) {
      c[k] = gates[hidden + k] * c[k] + gates[k] * gates[2 * hidden + k];
      h[k] = gates[3 * hidden + k] * std::tanh(c[k]);
    }
    cache.gates.push_back(std::move(gates));
    cache.cells.push_back(c);
    cache.hiddens.push_back(h);
  }

  cache.dropped = h;
  if (dropout_mask) {
    if (dropout_mask->size() != hidden) throw ConfigError("dropout mask size must equal H");
    cache.dropout_mask.assign(dropout_mask->begin(), dropout_mask->end());
    for (std::size_t k = 0; k < hidden; ++k) cache.dropped[k] *= cache.dropout_mask[k];
  }

  std::vector<double> logits = params.dense_b;
  for (std::size_t k = 0; k < hidden; ++k)
    if (cache.dropped[k] != 0.0) kernels::axpy(cache.dropped[k], params.dense_w.row(k), logits);
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (!std::isfinite(logits[j]))
      throw NumericError("non-finite logit at class " + std::to_string(j));
  }

  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  std::vector<double> probs(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) {
    probs[j] = std::exp(logits[j] - peak);
    total += probs[j];
  }
  for (auto& p : probs) p /= total;
  cache.probs = probs;
  result.dist.probs = std::move(probs);
  return result;
}

double cross_entropy(const BeliefDistribution& dist, std::size_t true_label) {
  if (true_label >= dist.probs.size()) throw InputError("label index out of range");
  return -std::log(std::max(dist.probs[true_label], 1e-12));
}

// ---------------------------------------------------------------------------
// Backward

ModelParams backward(const ForwardCache& cache, const ModelParams& params, std::size_t true_label) {
  const auto d = params.dims();
  const std::size_t hidden = d.hidden;
  const std::size_t steps = cache.indices.size();
  if (true_label >= d.classes) throw InputError("label index out of range");
  ModelParams grad = ModelParams::zeros(d);

  // Softmax + cross-entropy: dlogits = p - y.
  std::vector<double> dlogits = cache.probs;
  dlogits[true_label] -= 1.0;
  grad.dense_b = dlogits;

  std::vector<double> dh(hidden, 0.0);
  for (std::size_t k = 0; k < hidden; ++k) {
    if (cache.dropped[k] != 0.0) kernels::axpy(cache.dropped[k], dlogits, grad.dense_w.row(k));
    dh[k] = kernels::dot(params.dense_w.row(k), dlogits);
    if (!cache.dropout_mask.empty()) dh[k] *= cache.dropout_mask[k];
  }
  if (steps == 0) return grad;

  std::vector<double> dc(hidden, 0.0);
  std::vector<double> dz(4 * hidden);
  const std::vector<double> zeros(hidden, 0.0);
  for (std::size_t t = steps; t-- > 0;) {
    const auto& gates = cache.gates[t];
    const auto& c_t = cache.cells[t];
    const auto& c_prev = t > 0 ? cache.cells[t - 1] : zeros;
    const auto& h_prev = t > 0 ? cache.hiddens[t - 1] : zeros;
    for (std::size_t k = 0; k < hidden; ++k) {
      const double i = gates[k];
      const double f = gates[hidden + k];
      const double g = gates[2 * hidden + k];
      const double o = gates[3 * hidden + k];
      const double tc = std::tanh(c_t[k]);
      dc[k] += dh[k] * o * (1.0 - tc * tc);
      dz[k] = dc[k] * g * i * (1.0 - i);
      dz[hidden + k] = dc[k] * c_prev[k] * f * (1.0 - f);
      dz[2 * hidden + k] = dc[k] * i * (1.0 - g * g);
      dz[3 * hidden + k] = dh[k] * tc * o * (1.0 - o);
      dc[k] *= f;
    }
    kernels::axpy(1.0, dz, grad.lstm_b);

    const auto row = static_cast<std::size_t>(cache.indices[t]);
    const auto x = params.embedding.row(row);
    auto dx = grad.embedding.row(row);
    for (std::size_t i = 0; i < d.embed_dim; ++i) {
      if (x[i] != 0.0) kernels::axpy(x[i], dz, grad.lstm_w.row(i));
      dx[i] += kernels::dot(params.lstm_w.row(i), dz);
    }
    for (std::size_t k = 0; k < hidden; ++k) {
      if (h_prev[k] != 0.0) kernels::axpy(h_prev[k], dz, grad.lstm_u.row(k));
      dh[k] = kernels::dot(params.lstm_u.row(k), dz);
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Adam

AdamState AdamState::for_params(const ModelParams& params) {
  const auto d = params.dims();
  return AdamState{ModelParams::zeros(d), ModelParams::zeros(d), 0};
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const AdamConfig& cfg) {
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const kernels::AdamCoeffs coeffs{cfg.learning_rate,
                                   cfg.beta1,
                                   cfg.beta2,
                                   cfg.epsilon,
                                   1.0 - std::pow(cfg.beta1, t),
                                   1.0 - std::pow(cfg.beta2, t)};

  std::vector<std::span<const double>> g;
  std::vector<std::span<double>> m;
  std::vector<std::span<double>> v;
  grads.for_each_tensor([&](const std::string&, std::span<const double> s) { g.push_back(s); });
  state.m.for_each_tensor([&](const std::string&, std::span<double> s) { m.push_back(s); });
  state.v.for_each_tensor([&](const std::string&, std::span<double> s) { v.push_back(s); });
  std::size_t k = 0;
  params.for_each_tensor([&](const std::string& name, std::span<double> p) {
    if (g[k].size() != p.size() || m[k].size() != p.size() || v[k].size() != p.size())
      throw ConfigError("adam_step: shape mismatch in " + name);
    kernels::adam_update(p, g[k], m[k], v[k], coeffs);
    ++k;
  });
}

}  // namespace beliefdm::lstm
