#pragma once

#include <optional>
#include <string_view>
#include <vector>

namespace sgame {

enum class Method { kG, kD, kMI, kSC, kERG, kERD, kSG };

/// CLI vocabulary: G, D, MI, SC, ER-G, ER-D, SG.
std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view s);

/// Per-candidate inputs shared by every baseline selector.
struct SelectorScores {
  std::vector<double> gen_loglik;    // log p(y | x)
  std::vector<double> disc_correct;  // log p(correct | x, y), <= 0

  /// Throws DataError on length mismatch, empty vectors, or non-finite values.
  void validate() const;
};

// Argmax selectors; ties go to the lowest index.
std::size_t select_G(const SelectorScores& scores);
std::size_t select_D(const SelectorScores& scores);
/// gen + disc in the log domain.
std::size_t select_MI(const SelectorScores& scores);
/// disc - (gen - logsumexp(gen)): discriminator score contrasted against the
/// generator's normalized posterior.
std::size_t select_SC(const SelectorScores& scores);

struct EquilibriumConfig {
  std::size_t iterations = 5000;
  double step_size = 0.1;
  double regularization = 0.1;  // strength of the pull toward the initial policies
  std::vector<std::size_t> checkpoints;  // iterations at which to log exploitability
};

/// Generator rows pi_G(y | v) and discriminator rows pi_D(v | y), v in {correct, incorrect}.
struct EquilibriumState {
  std::vector<double> gen_correct;    // pi_G(. | correct)
  std::vector<double> gen_incorrect;  // pi_G(. | incorrect)
  std::vector<double> disc_correct;   // pi_D(correct | y); incorrect = 1 - this
  std::size_t iteration = 0;
  double step_size = 0.0;
};

struct EquilibriumResult {
  EquilibriumState average;  // iterate average
  EquilibriumState last;
  std::vector<std::pair<std::size_t, double>> exploitability;  // (iteration, gap) per checkpoint
};

/// Initial policies derived from the scores.
EquilibriumState initial_policies(const SelectorScores& scores);

/// Sum over both players of the best-response improvement in the regularized
/// signaling game, evaluated at `state` against the priors from `scores`.
double exploitability(const EquilibriumState& state, const SelectorScores& scores, double regularization);

/// Regularized multiplicative-weights dynamics; throws NumericalError on
/// non-finite iterates and ConfigError for zero iterations.
EquilibriumResult run_equilibrium(const SelectorScores& scores, const EquilibriumConfig& config);

/// ER-G ranks by the averaged pi_G(. | correct), ER-D by averaged pi_D(correct | .).
std::size_t select_ER(const SelectorScores& scores, Method variant, const EquilibriumConfig& config = {});

/// Dispatch for the six baselines (SG is handled by the game solver).
std::size_t select_baseline(Method method, const SelectorScores& scores, const EquilibriumConfig& config = {});

}  // namespace sgame
