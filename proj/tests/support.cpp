#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <unistd.h>

namespace bd = beliefdm;

namespace testing {

std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(BELIEFDM_DATA_DIR) / name;
}

std::filesystem::path cli_path() { return BELIEFDM_CLI_PATH; }

std::filesystem::path temp_dir(const std::string& stem) {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("beliefdm_" + stem + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

bd::service::AppConfig bundled_config(const std::string& classifier,
                                      const std::filesystem::path& journal) {
  auto cfg = bd::service::AppConfig::load(data_path("config.json"));
  cfg.classifier = classifier;
  cfg.journal = journal;
  return cfg;
}

std::shared_ptr<const bd::dialog::DialogEngine> bundled_engine(const std::string& classifier) {
  return std::make_shared<const bd::dialog::DialogEngine>(
      bd::service::load_assets(bundled_config(classifier)));
}

const std::vector<std::string>& advising_script() {
  static const std::vector<std::string> turns{
      "I am a junior year student with interest in statistics and data analysis",
      "I would prefer a class with lighter workload and higher helpfulness rating",
      "I prefer morning classes as I sleep early at night.",
  };
  return turns;
}

// ---------------------------------------------------------------------------

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

std::vector<double> oracle_forward(const std::vector<std::int32_t>& indices, const bd::lstm::ModelParams& p,
                                   const std::vector<double>* mask) {
  const std::size_t D = p.embedding.cols;
  const std::size_t H = p.lstm_u.rows;
  const std::size_t C = p.dense_b.size();
  std::vector<double> h(H, 0.0), c(H, 0.0);
  for (const auto idx : indices) {
    std::vector<double> hn(H), cn(H);
    for (std::size_t j = 0; j < H; ++j) {
      double z[4];
      for (int g = 0; g < 4; ++g) {
        const std::size_t col = g * H + j;
        double s = p.lstm_b[col];
        for (std::size_t d = 0; d < D; ++d) s += p.embedding(idx, d) * p.lstm_w(d, col);
        for (std::size_t k = 0; k < H; ++k) s += h[k] * p.lstm_u(k, col);
        z[g] = s;
      }
      const double in = sigmoid(z[0]), fg = sigmoid(z[1]), cand = std::tanh(z[2]), out = sigmoid(z[3]);
      cn[j] = fg * c[j] + in * cand;
      hn[j] = out * std::tanh(cn[j]);
    }
    h = hn;
    c = cn;
  }
  if (mask)
    for (std::size_t j = 0; j < H; ++j) h[j] *= (*mask)[j];
  std::vector<double> logits(C);
  for (std::size_t k = 0; k < C; ++k) {
    double s = p.dense_b[k];
    for (std::size_t j = 0; j < H; ++j) s += h[j] * p.dense_w(j, k);
    logits[k] = s;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (auto& l : logits) total += (l = std::exp(l - mx));
  for (auto& l : logits) l /= total;
  return logits;
}

double oracle_loss(const std::vector<std::int32_t>& indices, const bd::lstm::ModelParams& p,
                   std::size_t label, const std::vector<double>* mask) {
  return -std::log(std::max(oracle_forward(indices, p, mask)[label], 1e-12));
}

bd::lstm::ModelParams random_params(const bd::lstm::Dims& dims, bd::Rng& rng, double scale) {
  auto p = bd::lstm::ModelParams::zeros(dims);
  p.for_each_tensor([&](const std::string&, std::span<double> t) {
    for (auto& x : t) x = rng.uniform(-scale, scale);
  });
  return p;
}

// ---------------------------------------------------------------------------

namespace {

void collect_vars(const bd::logic::Literal& lit, std::vector<std::string>& vars) {
  for (const auto& t : lit.args)
    if (t.is_variable() && std::find(vars.begin(), vars.end(), t.text) == vars.end()) vars.push_back(t.text);
}

bd::logic::Fact ground(const bd::logic::Literal& lit, const std::map<std::string, bd::logic::Term>& b) {
  std::vector<bd::logic::Term> args;
  for (const auto& t : lit.args) args.push_back(t.is_variable() ? b.at(t.text) : t);
  return bd::logic::Fact(lit.predicate, args);
}

}  // namespace

bd::logic::FactStore brute_force_closure(const bd::logic::RuleBase& rules, const bd::logic::FactStore& facts) {
  bd::logic::FactStore closure = facts;
  bool changed = true;
  while (changed) {
    changed = false;
    std::set<bd::logic::Term> domain;
    for (const auto& f : closure) domain.insert(f.args.begin(), f.args.end());
    for (const auto& rule : rules.rules)
      for (const auto& lit : rule.body)
        for (const auto& t : lit.args)
          if (!t.is_variable()) domain.insert(t);
    const std::vector<bd::logic::Term> dom(domain.begin(), domain.end());

    for (const auto& rule : rules.rules) {
      std::vector<std::string> vars;
      for (const auto& lit : rule.body) collect_vars(lit, vars);
      if (!vars.empty() && dom.empty()) continue;
      std::vector<std::size_t> choice(vars.size(), 0);
      while (true) {
        std::map<std::string, bd::logic::Term> b;
        for (std::size_t i = 0; i < vars.size(); ++i) b[vars[i]] = dom[choice[i]];
        bool holds = true;
        for (const auto& lit : rule.body)
          if (!closure.contains(ground(lit, b))) {
            holds = false;
            break;
          }
        if (holds)
          for (const auto& head : rule.head) changed |= closure.insert(ground(head, b)).second;
        std::size_t k = 0;
        while (k < choice.size() && ++choice[k] == dom.size()) choice[k++] = 0;
        if (k == choice.size()) break;
      }
    }
  }
  return closure;
}

}  // namespace testing

namespace testing {

GradCheck gradient_check(const bd::lstm::Dims& dims, std::size_t seq_len, std::uint64_t seed,
                         bool with_dropout, double step) {
  bd::Rng rng(seed);
  auto params = random_params(dims, rng, 0.5);
  bd::text::TokenSequence seq;
  for (std::size_t t = 0; t < seq_len; ++t)
    seq.indices.push_back(static_cast<std::int32_t>(rng.below(dims.vocab_size + 1)));
  seq.true_length = seq_len;
  const auto label = static_cast<std::size_t>(rng.below(dims.classes));
  std::vector<double> mask;
  if (with_dropout)
    for (std::size_t j = 0; j < dims.hidden; ++j) mask.push_back(rng.uniform01() < 0.5 ? 0.0 : 2.0);
  const std::vector<double>* mask_ptr = with_dropout ? &mask : nullptr;

  const auto fwd = with_dropout ? bd::lstm::forward(seq, params, std::span<const double>(mask))
                                : bd::lstm::forward(seq, params);
  const auto grads = bd::lstm::backward(fwd.cache, params, label);

  std::vector<std::span<const double>> analytic;
  grads.for_each_tensor([&](const std::string&, std::span<const double> t) { analytic.push_back(t); });

  GradCheck out;
  std::size_t tensor = 0;
  params.for_each_tensor([&](const std::string& name, std::span<double> t) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + step;
      const double up = oracle_loss(seq.indices, params, label, mask_ptr);
      t[i] = saved - step;
      const double down = oracle_loss(seq.indices, params, label, mask_ptr);
      t[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[tensor][i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      ++out.components;
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst = name + "[" + std::to_string(i) + "]";
      }
    }
    ++tensor;
  });
  return out;
}

}  // namespace testing

namespace testing {

std::vector<std::pair<std::vector<std::string>, std::size_t>> nb_six_documents() {
  return {{{"cheap", "easy", "easy"}, 0}, {{"easy", "fun"}, 0},          {{"cheap"}, 0},
          {{"hard", "heavy"}, 1},         {{"heavy", "exam", "exam"}, 1}, {{"fun", "cheap"}, 0}};
}

// Counts: class 0 has 4 documents and 8 tokens (cheap 3, easy 3, fun 2);
// class 1 has 2 documents and 5 tokens (hard 1, heavy 2, exam 2). Six distinct
// words, so the smoothed denominators are 14 and 11; priors 4/6 and 2/6.
std::vector<NbCase> nb_hand_table() {
  auto norm = [](double a, double b) { return std::vector<double>{a / (a + b), b / (a + b)}; };
  return {
      {{"easy"}, norm(4.0 / 6 * 4.0 / 14, 2.0 / 6 * 1.0 / 11)},
      {{"easy", "exam"}, norm(4.0 / 6 * 4.0 / 14 * 1.0 / 14, 2.0 / 6 * 1.0 / 11 * 3.0 / 11)},
      {{"heavy", "exam", "hard"}, norm(4.0 / 6 * 1.0 / 14 * 1.0 / 14 * 1.0 / 14,
                                       2.0 / 6 * 3.0 / 11 * 3.0 / 11 * 2.0 / 11)},
      {{"cheap", "cheap", "fun"}, norm(4.0 / 6 * 4.0 / 14 * 4.0 / 14 * 3.0 / 14,
                                       2.0 / 6 * 1.0 / 11 * 1.0 / 11 * 1.0 / 11)},
      {{"never", "seen"}, norm(4.0 / 6 * 1.0 / 14 * 1.0 / 14, 2.0 / 6 * 1.0 / 11 * 1.0 / 11)},
      {{}, norm(4.0 / 6, 2.0 / 6)},
  };
}

}  // namespace testing

namespace testing {

RandomProgram random_program(bd::Rng& rng) {
  RandomProgram prog;
  prog.predicates = 2 + rng.below(3);
  prog.constants = 1 + rng.below(10);
  std::vector<std::size_t> arity(prog.predicates);
  for (auto& a : arity) {
    a = 1 + rng.below(2);
    prog.max_arity = std::max(prog.max_arity, a);
  }
  const char* vars[] = {"X", "Y", "Z"};
  auto constant = [&] { return "c" + std::to_string(rng.below(prog.constants)); };

  const std::size_t n_rules = 1 + rng.below(5);
  for (std::size_t r = 0; r < n_rules; ++r) {
    std::vector<std::string> bound;
    std::string body;
    const std::size_t n_body = 1 + rng.below(3);
    for (std::size_t b = 0; b < n_body; ++b) {
      const auto p = rng.below(prog.predicates);
      std::string lit = "p" + std::to_string(p) + "(";
      for (std::size_t a = 0; a < arity[p]; ++a) {
        std::string term;
        if (rng.uniform01() < 0.75) {
          term = vars[rng.below(3)];
          if (std::find(bound.begin(), bound.end(), term) == bound.end()) bound.push_back(term);
        } else {
          term = constant();
        }
        lit += (a ? ", " : "") + term;
      }
      body += (b ? " & " : "") + lit + ")";
    }
    std::string head;
    const std::size_t n_head = 1 + rng.below(2);
    for (std::size_t h = 0; h < n_head; ++h) {
      const auto p = rng.below(prog.predicates);
      std::string lit = "p" + std::to_string(p) + "(";
      for (std::size_t a = 0; a < arity[p]; ++a) {
        const bool use_var = !bound.empty() && rng.uniform01() < 0.8;
        lit += (a ? ", " : "") + (use_var ? bound[rng.below(bound.size())] : constant());
      }
      head += (h ? ", " : "") + lit + ")";
    }
    prog.rules_text += body + " => " + head + ".\n";
  }
  prog.rules = bd::logic::parse_rules(prog.rules_text);

  const std::size_t n_facts = rng.below(9);
  std::string facts;
  for (std::size_t f = 0; f < n_facts; ++f) {
    const auto p = rng.below(prog.predicates);
    facts += "p" + std::to_string(p) + "(";
    for (std::size_t a = 0; a < arity[p]; ++a) facts += (a ? ", " : "") + constant();
    facts += ").\n";
  }
  prog.facts = bd::logic::parse_facts(facts);
  return prog;
}

}  // namespace testing
