#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sgame/margin.hpp"

namespace sgame {

enum class Penalty { kHardcap, kLinear, kSigmoid };
enum class TieBreak { kLowestRiskThenIndex };

std::string_view to_string(Penalty p);
std::optional<Penalty> parse_penalty(std::string_view s);

/// Risk cap and penalty parameters for one selection run.
struct GameConfig {
  double T = 1.0;       // cap on expected extra risk (nats); any sign
  double beta = 10.0;   // multiplier bound, mu in [0, beta]
  double kappa = 30.0;  // sigmoid steepness
  Penalty penalty = Penalty::kSigmoid;
  TieBreak tie_break = TieBreak::kLowestRiskThenIndex;
  std::size_t grid_points = 2001;  // per frontier segment, sigmoid search

  /// Throws ConfigError unless beta > 0, kappa > 0, grid_points >= 101 and T finite.
  void validate() const;
};

struct GameSolution {
  std::vector<double> pi;
  double mu = 0.0;
  double lambda = 0.0;
  double objective = 0.0;
  double expected_lift = 0.0;
  double expected_risk = 0.0;
  bool feasible = true;
  // Empty only when the problem is infeasible and the fallback is not in the set.
  std::optional<std::size_t> selected_index;
  std::vector<std::size_t> support;
};

/// Upper concave envelope of the candidate points (Delta_i, M_i).
struct ParetoFrontier {
  struct Vertex {
    double risk = 0.0;
    double lift = 0.0;
    std::size_t index = 0;
  };
  std::vector<Vertex> vertices;  // strictly increasing risk, strictly decreasing slopes

  /// Envelope lift at `risk`, which must lie within the vertices' risk range.
  double lift_at(double risk) const;
};

ParetoFrontier upper_frontier(const MarginSet& margins);

double logistic(double x);

/// beta * sigma(kappa * (R - T)), the saturated sigmoid penalty.
double sigmoid_penalty(double risk, const GameConfig& config);

double expected_lift(std::span<const double> pi, const MarginSet& margins);
double expected_risk(std::span<const double> pi, const MarginSet& margins);

/// M(pi) - mu * sigma(kappa * (R(pi) - T)) for a fixed multiplier.
double sigmoid_lagrangian(std::span<const double> pi, double mu, const MarginSet& margins,
                          const GameConfig& config);

/// M(pi) - mu * (R(pi) - T) for a fixed multiplier.
double linear_lagrangian(std::span<const double> pi, double mu, const MarginSet& margins,
                         const GameConfig& config);

/// Two-branch form: M(pi)/(beta+1) - beta/(beta+1) * lambda * sigma(kappa(R - T)).
double normalized_objective(std::span<const double> pi, double lambda, const MarginSet& margins,
                            const GameConfig& config);

/// Objective the configured penalty assigns to a mixture, with the inner
/// multiplier at its best response.
double penalized_value(std::span<const double> pi, const MarginSet& margins, const GameConfig& config);

/// Exact LP optimum of max M(pi) s.t. R(pi) <= T over the simplex.
GameSolution solve_hardcap(const MarginSet& margins, const GameConfig& config);

/// max M(pi) - beta * max(0, R(pi) - T).
GameSolution solve_linear(const MarginSet& margins, const GameConfig& config);

/// max M(pi) - beta * sigma(kappa (R(pi) - T)), searched along the frontier.
GameSolution solve_sigmoid(const MarginSet& margins, const GameConfig& config);

/// Dispatches on config.penalty.
GameSolution solve(const MarginSet& margins, const GameConfig& config);

struct Selection {
  std::optional<std::size_t> index;  // row of the margin set; empty = fallback outside the set
  bool is_fallback = false;
  GameSolution solution;
};

/// Runs the configured solver and picks the answer to emit.
Selection select(const MarginSet& margins, const GameConfig& config);

/// argmax pi_i, ties to lower Delta and then lower index.
std::size_t argmax_with_tiebreak(std::span<const double> pi, const MarginSet& margins);

/// Hypothesis under which the cap must bind: the problem is feasible, some
/// candidate has M_j > 0 and Delta_j > 0, and no maximizer of M meets the cap.
bool boundary_hypothesis(const MarginSet& margins, const GameConfig& config);

struct BoundaryCheck {
  bool hypothesis = false;
  bool on_boundary = false;
  GameSolution solution;
  // A strictly better mixture found by shifting fallback mass, if any.
  std::optional<std::vector<double>> improving_mixture;
};

BoundaryCheck check_boundary(const MarginSet& margins, const GameConfig& config);

/// hypothesis => |R(pi*) - T| <= 1e-9 for the hardcap or linear optimum.
bool boundary_certificate(const MarginSet& margins, const GameConfig& config);

/// Extreme points of {pi : R(pi) = T}: pure strategies with Delta_i = T and
/// two-point mixtures straddling the cap.
std::vector<std::vector<double>> boundary_extreme_points(const MarginSet& margins, double T);

enum class WitnessCase { kAuto, kSwap, kTighten };

struct WitnessRecord {
  WitnessCase kind = WitnessCase::kSwap;  // kSwap or kTighten
  std::size_t coordinate = 0;             // perturbed M index (swap)
  double epsilon = 0.0;
  double delta = 0.0;                     // |M(pi_a) - M(pi_b)|
  MarginSet perturbed_margins;
  GameConfig perturbed_config;
  GameSolution before;
  GameSolution after;
  bool verified = false;
};

/// Builds a perturbation of size <= eta that either makes the other boundary
/// extreme point optimal (M_k += eps) or cuts the cap (T -= eps) so that every
/// old boundary mixture becomes infeasible, then re-solves to verify it.
/// Throws WitnessError when neither construction is possible.
WitnessRecord sensitivity_witness(const MarginSet& margins, const GameConfig& config,
                                  std::span<const double> pi_a, std::span<const double> pi_b, double eta,
                                  WitnessCase which = WitnessCase::kAuto);

}  // namespace sgame
