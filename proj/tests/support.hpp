#pragma once

// Shared fixtures and independent oracles for the test suites.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "beliefdm/dialog.hpp"
#include "beliefdm/logic.hpp"
#include "beliefdm/lstm.hpp"
#include "beliefdm/rng.hpp"
#include "beliefdm/service.hpp"

namespace testing {

std::filesystem::path data_path(const std::string& name);
std::filesystem::path cli_path();

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& stem);

/// Bundled config with the classifier replaced by `classifier`
/// ("fixed:<label>" or "lstm") and the journal pointed at `journal`.
beliefdm::service::AppConfig bundled_config(const std::string& classifier = "fixed:curious",
                                            const std::filesystem::path& journal = {});

std::shared_ptr<const beliefdm::dialog::DialogEngine> bundled_engine(
    const std::string& classifier = "fixed:curious");

/// The three student turns of the advising transcript.
const std::vector<std::string>& advising_script();

// --- LSTM oracle ---------------------------------------------------------------

/// Straight-line recomputation of the forward pass: explicit loops, no kernels,
/// no shared code with the library beyond the parameter layout.
std::vector<double> oracle_forward(const std::vector<std::int32_t>& indices,
                                   const beliefdm::lstm::ModelParams& p,
                                   const std::vector<double>* mask = nullptr);

double oracle_loss(const std::vector<std::int32_t>& indices, const beliefdm::lstm::ModelParams& p,
                   std::size_t label, const std::vector<double>* mask = nullptr);

/// Random parameters with every entry uniform in [-scale, scale].
beliefdm::lstm::ModelParams random_params(const beliefdm::lstm::Dims& dims, beliefdm::Rng& rng,
                                          double scale);

// --- Datalog oracle ------------------------------------------------------------

/// Closure by exhaustive grounding: every rule is instantiated with every
/// assignment of its variables to the active domain, repeated until nothing
/// changes.
beliefdm::logic::FactStore brute_force_closure(const beliefdm::logic::RuleBase& rules,
                                               const beliefdm::logic::FactStore& facts);

}  // namespace testing

namespace testing {

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t components = 0;
  std::string worst;  // tensor[index] with the largest error
};

/// Compares backward() with central differences of oracle_loss on a random
/// model and sequence. Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradCheck gradient_check(const beliefdm::lstm::Dims& dims, std::size_t seq_len, std::uint64_t seed,
                         bool with_dropout, double step = 1e-5);

}  // namespace testing

namespace testing {

struct NbCase {
  std::vector<std::string> query;
  std::vector<double> posterior;  // hand-computed
};

/// Six documents over two classes {easy, hard} and a table of posteriors
/// worked out by hand from the counts (see support.cpp).
std::vector<std::pair<std::vector<std::string>, std::size_t>> nb_six_documents();
std::vector<NbCase> nb_hand_table();

}  // namespace testing

namespace testing {

struct RandomProgram {
  std::string rules_text;
  beliefdm::logic::RuleBase rules;
  beliefdm::logic::FactStore facts;
  std::size_t predicates = 0;
  std::size_t constants = 0;
  std::size_t max_arity = 0;
};

/// Safe random Datalog program: at most 5 rules and 10 constants, predicates
/// of arity 1 or 2.
RandomProgram random_program(beliefdm::Rng& rng);

}  // namespace testing
