#include <doctest.h>

#include <fstream>

#include "beliefdm/classifier.hpp"
#include "beliefdm/errors.hpp"
#include "support.hpp"

namespace bd = beliefdm;
namespace cls = beliefdm::classifier;

namespace {

bd::text::TextPipeline plain_pipeline() { return {}; }

std::vector<cls::LabeledUtterance> toy_corpus() {
  return {{"happy explore learn", "curious"},   {"wonder explore topics", "curious"},
          {"learn new things", "curious"},      {"lost and stuck", "confused"},
          {"stuck unclear lost", "confused"},   {"unclear why stuck", "confused"},
          {"okay done fine", "neutral"},        {"fine thanks okay", "neutral"},
          {"done registered fine", "neutral"}, {"thanks registered", "neutral"},
          {"explore wonder", "curious"},        {"lost why", "confused"}};
}

cls::TrainConfig small_config() {
  cls::TrainConfig cfg;
  cfg.embed_dim = 6;
  cfg.hidden = 8;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.seq_len = 6;
  return cfg;
}

cls::Model random_model(std::vector<std::string> labels, std::uint64_t seed) {
  cls::Model m;
  m.labels = std::move(labels);
  m.vocab = bd::text::Vocabulary::from_map({{"alpha", 1}, {"beta", 2}, {"gamma", 4}}, 5);
  m.seq_len = 7;
  m.params = bd::lstm::ModelParams::random({5, 3, 4, m.labels.size()}, seed);
  return m;
}

}  // namespace

TEST_SUITE("classifier") {

TEST_CASE("corpus parsing") {
  const auto c = cls::parse_corpus("# header\n\ncurious\tI wonder why\nneutral\tok\n");
  REQUIRE(c.size() == 2);
  CHECK(c[0].label == "curious");
  CHECK(c[0].text == "I wonder why");
  CHECK_THROWS_AS(cls::parse_corpus("no tab here\n"), bd::ParseError);
  CHECK(cls::load_corpus(testing::data_path("beliefs.tsv")).size() == 300);
}

TEST_CASE("config validation") {
  auto cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.train_fraction = 1.0;
  CHECK_THROWS_AS(cfg.validate(), bd::InputError);
  cfg = small_config();
  cfg.dropout_rate = 1.0;
  CHECK_THROWS_AS(cfg.validate(), bd::InputError);
  cfg = small_config();
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), bd::InputError);
  CHECK_THROWS_AS(cls::train({}, small_config(), plain_pipeline()), bd::InputError);
  CHECK_THROWS_AS(cls::train({{"text", "bogus"}}, small_config(), plain_pipeline()), bd::InputError);
}

TEST_CASE("training is deterministic and the split is stratified") {
  const auto a = cls::train(toy_corpus(), small_config(), plain_pipeline());
  const auto b = cls::train(toy_corpus(), small_config(), plain_pipeline());
  CHECK(a.model == b.model);
  CHECK(a.report.train_size == 9);  // round(4 * 0.75) = 3 per class
  CHECK(a.report.test_size == 3);
  CHECK(a.report.epochs.size() == 3);
  auto other = small_config();
  other.rng_seed = 43;
  CHECK_FALSE(cls::train(toy_corpus(), other, plain_pipeline()).model == a.model);
}

TEST_CASE("one example, one epoch lowers its loss") {
  const std::vector<cls::LabeledUtterance> one{{"stuck and lost", "confused"}};
  auto cfg = small_config();
  cfg.epochs = 1;
  cfg.dropout_rate = 0.0;
  auto frozen = cfg;
  frozen.adam.learning_rate = 0.0;  // same seed, same initialisation, no movement
  const auto before = cls::train(one, frozen, plain_pipeline()).model;
  const auto after = cls::train(one, cfg, plain_pipeline()).model;
  auto loss = [&](const cls::Model& m) {
    return bd::lstm::cross_entropy(m.predict(plain_pipeline()(one[0].text)), 1);
  };
  CHECK(loss(after) < loss(before));
}

TEST_CASE("evaluation of a uniform model picks the lowest label") {
  auto m = random_model(bd::default_belief_labels(), 1);
  m.params = bd::lstm::ModelParams::zeros(m.params.dims());
  std::vector<cls::EncodedExample> set;
  for (std::size_t k = 0; k < 3; ++k)
    for (int r = 0; r < 2; ++r) set.push_back({bd::text::encode({}, m.vocab, m.seq_len), k});
  const auto e = cls::evaluate(m, set);
  CHECK(e.accuracy == doctest::Approx(1.0 / 3.0));
  CHECK(e.total == 6);
  std::size_t sum = 0;
  for (const auto& row : e.confusion)
    for (auto x : row) sum += x;
  CHECK(sum == 6);
  CHECK(e.confusion[1][0] == 2);
  CHECK_THROWS_AS(cls::evaluate(m, std::vector<cls::EncodedExample>{}), bd::InputError);
}

TEST_CASE("evaluation of a perfect model is diagonal") {
  auto m = random_model({"a", "b"}, 2);
  m.params = bd::lstm::ModelParams::zeros(m.params.dims());
  m.params.dense_b = {5.0, 0.0};
  const auto e = cls::evaluate(m, {{bd::text::encode({}, m.vocab, m.seq_len), 0}});
  CHECK(e.accuracy == 1.0);
  CHECK(e.confusion == std::vector<std::vector<std::size_t>>{{1, 0}, {0, 0}});
}

TEST_CASE("save and load round trip") {
  const auto m = random_model(bd::default_belief_labels(), 5);
  const auto dir = testing::temp_dir("model");
  cls::save_model(m, dir / "m.bin");
  const auto loaded = cls::load_model(dir / "m.bin");
  CHECK(loaded == m);
  bd::Rng rng(8);
  for (int i = 0; i < 10; ++i) {
    bd::text::TokenSequence s;
    for (int t = 0; t < 7; ++t) s.indices.push_back(static_cast<std::int32_t>(rng.below(6)));
    s.true_length = 7;
    CHECK(bd::lstm::forward(s, loaded.params).dist == bd::lstm::forward(s, m.params).dist);
  }
}

TEST_CASE("five-label models load") {
  const auto m = random_model({"a", "b", "c", "d", "e"}, 6);
  const auto loaded = cls::deserialize_model(cls::serialize_model(m));
  CHECK(loaded.labels.size() == 5);
  CHECK(loaded.params.dense_b.size() == 5);
}

TEST_CASE("corrupt model files are rejected") {
  const auto bytes = cls::serialize_model(random_model(bd::default_belief_labels(), 7));

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_WITH_AS(cls::deserialize_model(bad_magic), doctest::Contains("magic"), bd::FormatError);

  auto bad_version = bytes;
  bad_version[8] = 99;
  CHECK_THROWS_WITH_AS(cls::deserialize_model(bad_version), doctest::Contains("version"), bd::FormatError);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_WITH_AS(cls::deserialize_model(truncated), doctest::Contains("truncated"), bd::FormatError);

  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_WITH_AS(cls::deserialize_model(trailing), doctest::Contains("trailing"), bd::FormatError);

  CHECK_THROWS_AS(cls::load_model("/nonexistent/model.bin"), bd::Error);
}

TEST_CASE("bundled model classifies the advising script as curious") {
  const auto m = cls::load_model(testing::data_path("model.bin"));
  const bd::text::TextPipeline p{bd::text::load_stopwords(testing::data_path("stopwords.txt")),
                                 bd::text::EntityLexicon::load(testing::data_path("entities.txt"))};
  CHECK(m.labels == bd::default_belief_labels());
  CHECK(m.labels[m.predict(p(testing::advising_script()[0])).argmax()] == "curious");
}

}  // TEST_SUITE
