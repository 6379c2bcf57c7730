#include "beliefdm/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>

#include "beliefdm/errors.hpp"
#include "beliefdm/io_util.hpp"
#include "beliefdm/kernels.hpp"
#include "beliefdm/rng.hpp"

namespace beliefdm::classifier {

// ---------------------------------------------------------------------------
// Corpus

std::vector<LabeledUtterance> parse_corpus(std::string_view text) {
  std::vector<LabeledUtterance> out;
  std::size_t line_no = 0;
  for (auto line : util::split_lines(text)) {
    ++line_no;
    if (util::trim(line).empty() || util::trim(line).front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError("expected 'label<TAB>utterance'", line_no);
    const auto label = util::trim(line.substr(0, tab));
    if (label.empty()) throw ParseError("empty label", line_no);
    out.push_back({std::string(line.substr(tab + 1)), std::string(label)});
  }
  return out;
}

std::vector<LabeledUtterance> load_corpus(const std::filesystem::path& path) {
  return parse_corpus(util::read_file(path));
}

void TrainConfig::validate() const {
  if (labels.empty()) throw InputError("at least one label is required");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InputError("train_fraction must lie in (0, 1)");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw InputError("dropout_rate must lie in [0, 1)");
  if (epochs < 1) throw InputError("epochs must be at least 1");
  if (batch_size < 1) throw InputError("batch_size must be at least 1");
  if (vocab_size < 1) throw InputError("vocab_size must be at least 1");
  if (seq_len < 1) throw InputError("seq_len must be at least 1");
}

BeliefDistribution Model::predict(const text::TokenList& tokens) const {
  return lstm::forward(text::encode(tokens, vocab, seq_len), params).dist;
}

// ---------------------------------------------------------------------------
// Training

namespace {

void accumulate(lstm::ModelParams& acc, const lstm::ModelParams& grad) {
  std::vector<std::span<const double>> parts;
  grad.for_each_tensor([&](const std::string&, std::span<const double> s) { parts.push_back(s); });
  std::size_t k = 0;
  acc.for_each_tensor([&](const std::string&, std::span<double> s) {
    kernels::axpy(1.0, parts[k++], s);
  });
}

void scale(lstm::ModelParams& p, double factor) {
  p.for_each_tensor([&](const std::string&, std::span<double> s) {
    for (auto& x : s) x *= factor;
  });
}

std::vector<double> draw_mask(Rng& rng, std::size_t n, double rate) {
  std::vector<double> mask(n);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (auto& m : mask) m = rng.uniform01() < rate ? 0.0 : keep_scale;
  return mask;
}

}  // namespace

TrainResult train(const std::vector<LabeledUtterance>& corpus, const TrainConfig& cfg,
                  const text::TextPipeline& pipeline) {
  cfg.validate();
  if (corpus.empty()) throw InputError("training corpus is empty");

  std::map<std::string, std::size_t> label_index;
  for (std::size_t k = 0; k < cfg.labels.size(); ++k) label_index[cfg.labels[k]] = k;

  TrainReport report;
  std::vector<std::vector<std::size_t>> by_label(cfg.labels.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto it = label_index.find(corpus[i].label);
    if (it == label_index.end())
      throw InputError("corpus line " + std::to_string(i + 1) + " has unknown label '" +
                       corpus[i].label + "'");
    by_label[it->second].push_back(i);
  }
  for (std::size_t k = 0; k < cfg.labels.size(); ++k)
    if (by_label[k].empty())
      report.warnings.push_back("label '" + cfg.labels[k] + "' has no training examples");

  Rng rng(cfg.rng_seed);

  // Stratified split: each label contributes round(n * fraction) examples (at least one) to training.
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> test_ids;
  for (auto& ids : by_label) {
    if (ids.empty()) continue;
    rng.shuffle(ids);
    auto n_train = static_cast<std::size_t>(
        std::llround(static_cast<double>(ids.size()) * cfg.train_fraction));
    n_train = std::clamp<std::size_t>(n_train, 1, ids.size());
    train_ids.insert(train_ids.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    test_ids.insert(test_ids.end(), ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  }

  std::vector<text::TokenList> train_tokens;
  train_tokens.reserve(train_ids.size());
  for (const auto id : train_ids) train_tokens.push_back(pipeline(corpus[id].text));

  Model model;
  model.labels = cfg.labels;
  model.seq_len = cfg.seq_len;
  model.vocab = text::build_vocabulary(train_tokens, cfg.vocab_size);
  const lstm::Dims dims{static_cast<std::size_t>(model.vocab.size()), cfg.embed_dim, cfg.hidden,
                        cfg.labels.size()};
  model.params = lstm::ModelParams::random(dims, rng.engine()());

  auto encode_ids = [&](const std::vector<std::size_t>& ids) {
    std::vector<EncodedExample> out;
    out.reserve(ids.size());
    for (const auto id : ids)
      out.push_back({text::encode(pipeline(corpus[id].text), model.vocab, cfg.seq_len),
                     label_index.at(corpus[id].label)});
    return out;
  };
  const auto train_set = encode_ids(train_ids);
  const auto test_set = encode_ids(test_ids);
  report.train_size = train_set.size();
  report.test_size = test_set.size();

  auto adam = lstm::AdamState::for_params(model.params);
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      auto grad_sum = lstm::ModelParams::zeros(dims);
      for (std::size_t b = start; b < stop; ++b) {
        const auto& ex = train_set[order[b]];
        std::optional<std::vector<double>> mask;
        if (cfg.dropout_rate > 0.0) mask = draw_mask(rng, cfg.hidden, cfg.dropout_rate);
        const auto fwd = mask ? lstm::forward(ex.seq, model.params, std::span<const double>(*mask))
                              : lstm::forward(ex.seq, model.params);
        loss_sum += lstm::cross_entropy(fwd.dist, ex.label);
        if (fwd.dist.argmax() == ex.label) ++correct;
        accumulate(grad_sum, lstm::backward(fwd.cache, model.params, ex.label));
      }
      scale(grad_sum, 1.0 / static_cast<double>(stop - start));
      lstm::adam_step(model.params, grad_sum, adam, cfg.adam);
    }
    const auto n = static_cast<double>(order.size());
    report.epochs.push_back({epoch, loss_sum / n, static_cast<double>(correct) / n});
  }

  if (!test_set.empty()) report.test = evaluate(model, test_set);
  return {std::move(model), std::move(report)};
}

// ---------------------------------------------------------------------------
// Evaluation

Evaluation evaluate(const Model& model, const std::vector<EncodedExample>& testset) {
  if (testset.empty()) throw InputError("test set is empty");
  const std::size_t classes = model.labels.size();
  Evaluation ev;
  ev.total = testset.size();
  ev.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  std::size_t correct = 0;
  for (const auto& ex : testset) {
    if (ex.label >= classes) throw InputError("test label index out of range");
    const auto predicted = lstm::forward(ex.seq, model.params).dist.argmax();
    ++ev.confusion[ex.label][predicted];
    if (predicted == ex.label) ++correct;
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(ev.total);
  return ev;
}

Evaluation evaluate(const Model& model, const std::vector<LabeledUtterance>& testset,
                    const text::TextPipeline& pipeline) {
  std::vector<EncodedExample> encoded;
  encoded.reserve(testset.size());
  for (const auto& ex : testset) {
    const auto it = std::find(model.labels.begin(), model.labels.end(), ex.label);
    if (it == model.labels.end()) throw InputError("unknown label '" + ex.label + "'");
    encoded.push_back({text::encode(pipeline(ex.text), model.vocab, model.seq_len),
                       static_cast<std::size_t>(it - model.labels.begin())});
  }
  return evaluate(model, encoded);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  void need(std::size_t n, const std::string& field) const {
    if (in_.size() - pos_ < n) throw FormatError("model file truncated while reading " + field);
  }
  std::uint32_t u32(const std::string& field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64(const std::string& field) {
    need(8, field);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  double f64(const std::string& field) { return std::bit_cast<double>(u64(field)); }
  std::string str(const std::string& field) {
    const auto n = u32(field + " length");
    need(n, field);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void expect_bytes(const char* data, std::size_t n, const std::string& field) {
    need(n, field);
    if (!std::equal(data, data + n, in_.begin() + static_cast<std::ptrdiff_t>(pos_),
                    [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; }))
      throw FormatError("bad " + field + ": not a belief model file");
    pos_ += n;
  }
  bool at_end() const { return pos_ == in_.size(); }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

struct TensorShape {
  std::string name;
  std::vector<std::uint64_t> shape;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const Model& model) {
  model.params.validate();
  const auto d = model.params.dims();
  Writer w;
  w.bytes(kModelMagic, sizeof(kModelMagic));
  w.u32(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.labels.size()));
  for (const auto& l : model.labels) w.str(l);

  w.u32(static_cast<std::uint32_t>(model.vocab.size()));
  std::vector<std::pair<std::int32_t, std::string>> entries;
  for (const auto& [word, idx] : model.vocab.map()) entries.emplace_back(idx, word);
  std::sort(entries.begin(), entries.end());
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& [idx, word] : entries) {
    w.u32(static_cast<std::uint32_t>(idx));
    w.str(word);
  }

  for (const auto v : {d.vocab_size, d.embed_dim, d.hidden, d.classes, model.seq_len}) w.u64(v);

  const std::vector<TensorShape> shapes{
      {"embedding", {model.params.embedding.rows, model.params.embedding.cols}},
      {"lstm_w", {model.params.lstm_w.rows, model.params.lstm_w.cols}},
      {"lstm_u", {model.params.lstm_u.rows, model.params.lstm_u.cols}},
      {"lstm_b", {model.params.lstm_b.size()}},
      {"dense_w", {model.params.dense_w.rows, model.params.dense_w.cols}},
      {"dense_b", {model.params.dense_b.size()}},
  };
  w.u32(static_cast<std::uint32_t>(shapes.size()));
  std::size_t k = 0;
  model.params.for_each_tensor([&](const std::string& name, std::span<const double> values) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(shapes[k].shape.size()));
    for (const auto s : shapes[k].shape) w.u64(s);
    for (const auto x : values) w.f64(x);
    ++k;
  });
  return w.take();
}

Model deserialize_model(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.expect_bytes(kModelMagic, sizeof(kModelMagic), "magic header");
  const auto version = r.u32("format version");
  if (version != kModelFormatVersion)
    throw FormatError("unsupported model format version " + std::to_string(version) +
                      " (expected " + std::to_string(kModelFormatVersion) + ")");

  Model model;
  const auto n_labels = r.u32("label count");
  if (n_labels == 0) throw FormatError("label count is zero");
  for (std::uint32_t i = 0; i < n_labels; ++i) model.labels.push_back(r.str("label"));

  const auto capacity = r.u32("vocabulary size");
  const auto n_words = r.u32("vocabulary entry count");
  std::unordered_map<std::string, std::int32_t> words;
  for (std::uint32_t i = 0; i < n_words; ++i) {
    const auto idx = static_cast<std::int32_t>(r.u32("vocabulary index"));
    words.emplace(r.str("vocabulary word"), idx);
  }
  try {
    model.vocab = text::Vocabulary::from_map(std::move(words), static_cast<std::int32_t>(capacity));
  } catch (const InputError& e) {
    throw FormatError(std::string("vocabulary: ") + e.what());
  }

  lstm::Dims d;
  d.vocab_size = r.u64("dims.V");
  d.embed_dim = r.u64("dims.D");
  d.hidden = r.u64("dims.H");
  d.classes = r.u64("dims.C");
  model.seq_len = r.u64("dims.L");
  if (d.classes != n_labels)
    throw FormatError("dims.C = " + std::to_string(d.classes) + " but " +
                      std::to_string(n_labels) + " labels are listed");
  if (d.vocab_size != capacity)
    throw FormatError("dims.V = " + std::to_string(d.vocab_size) +
                      " disagrees with vocabulary size " + std::to_string(capacity));
  if (model.seq_len == 0) throw FormatError("dims.L is zero");

  model.params = lstm::ModelParams::zeros(d);
  const std::vector<std::vector<std::uint64_t>> expected{
      {d.vocab_size + 1, d.embed_dim}, {d.embed_dim, 4 * d.hidden}, {d.hidden, 4 * d.hidden},
      {4 * d.hidden},                  {d.hidden, d.classes},       {d.classes}};
  const auto n_tensors = r.u32("tensor count");
  if (n_tensors != expected.size())
    throw FormatError("expected " + std::to_string(expected.size()) + " tensors, found " +
                      std::to_string(n_tensors));
  std::size_t k = 0;
  model.params.for_each_tensor([&](const std::string& name, std::span<double> values) {
    const auto stored = r.str("tensor name");
    if (stored != name) throw FormatError("expected tensor '" + name + "', found '" + stored + "'");
    const auto ndim = r.u32(name + " rank");
    std::vector<std::uint64_t> shape(ndim);
    for (auto& s : shape) s = r.u64(name + " shape");
    if (shape != expected[k]) throw FormatError("tensor '" + name + "' has inconsistent shape");
    r.need(values.size() * 8, name + " values");
    for (auto& x : values) {
      x = r.f64(name + " values");
      if (!std::isfinite(x)) throw FormatError("tensor '" + name + "' holds a non-finite value");
    }
    ++k;
  });
  if (!r.at_end()) throw FormatError("trailing bytes after the last tensor");
  return model;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  const auto raw = util::read_file(path);
  return deserialize_model(std::vector<std::uint8_t>(raw.begin(), raw.end()));
}

}  // namespace beliefdm::classifier
