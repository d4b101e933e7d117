#include "sgame/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sgame/error.hpp"

namespace sgame {

namespace {

constexpr double kBoundaryTol = 1e-9;

void validate_margins(const MarginSet& margins) {
  if (margins.M.empty()) throw DataError("empty candidate set");
  if (margins.M.size() != margins.Delta.size()) {
    throw DataError("margin vectors differ in length: " + std::to_string(margins.M.size()) + " vs " +
                    std::to_string(margins.Delta.size()));
  }
  for (std::size_t i = 0; i < margins.M.size(); ++i) {
    if (!std::isfinite(margins.M[i]) || !std::isfinite(margins.Delta[i])) {
      throw DataError("non-finite margin at candidate " + std::to_string(i));
    }
  }
  if (margins.fallback_index && *margins.fallback_index >= margins.M.size()) {
    throw DataError("fallback index out of range");
  }
}

double min_risk(const MarginSet& margins) {
  return *std::min_element(margins.Delta.begin(), margins.Delta.end());
}

// A candidate optimum: weight w on row i and 1 - w on row j (j == i for pure).
struct Pick {
  double value = -std::numeric_limits<double>::infinity();
  double risk = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  double w = 1.0;
  double w_j = 0.0;
  bool boundary = false;  // two-point mixture sitting on R = T
  bool valid = false;
};

// Strictly better value wins; near-equal values go to the lower risk.
bool better(const Pick& a, const Pick& b) {
  if (!b.valid) return a.valid;
  if (!a.valid) return false;
  const double tol = 1e-12 * (1.0 + std::abs(a.value) + std::abs(b.value));
  if (a.value > b.value + tol) return true;
  if (a.value < b.value - tol) return false;
  return a.risk < b.risk;
}

void consider(Pick& best, const Pick& cand) {
  if (better(cand, best)) best = cand;
}

Pick pure(const MarginSet& margins, std::size_t i, double value) {
  Pick p;
  p.value = value;
  p.risk = margins.Delta[i];
  p.i = p.j = i;
  p.w = 1.0;
  p.valid = true;
  return p;
}

// Mixture of i (Delta_i <= T) and j (Delta_j > T) with R exactly at T.
Pick boundary_mix(const MarginSet& margins, std::size_t i, std::size_t j, double T) {
  const double span = margins.Delta[j] - margins.Delta[i];
  const double wi = (margins.Delta[j] - T) / span;
  const double wj = (T - margins.Delta[i]) / span;
  Pick p;
  p.i = i;
  p.j = j;
  p.w = wi;
  p.w_j = wj;
  p.value = wi * margins.M[i] + wj * margins.M[j];
  p.risk = wi * margins.Delta[i] + wj * margins.Delta[j];
  p.boundary = true;
  p.valid = true;
  return p;
}

std::vector<double> pick_pi(const Pick& p, std::size_t m) {
  std::vector<double> pi(m, 0.0);
  if (p.i == p.j) {
    pi[p.i] = 1.0;
  } else {
    pi[p.i] = p.w;
    pi[p.j] = p.w_j;
  }
  return pi;
}

GameSolution finish(const MarginSet& margins, std::vector<double> pi) {
  GameSolution sol;
  sol.pi = std::move(pi);
  sol.expected_lift = expected_lift(sol.pi, margins);
  sol.expected_risk = expected_risk(sol.pi, margins);
  for (std::size_t i = 0; i < sol.pi.size(); ++i) {
    if (sol.pi[i] > 0.0) sol.support.push_back(i);
  }
  sol.selected_index = argmax_with_tiebreak(sol.pi, margins);
  return sol;
}

GameSolution infeasible_solution(const MarginSet& margins, const GameConfig& config) {
  GameSolution sol;
  sol.pi.assign(margins.size(), 0.0);
  sol.feasible = false;
  sol.mu = config.beta;
  sol.lambda = 1.0;
  sol.objective = 0.0;
  if (margins.fallback_index) {
    sol.pi[*margins.fallback_index] = 1.0;
    sol.support = {*margins.fallback_index};
    sol.selected_index = margins.fallback_index;
  }
  sol.expected_lift = expected_lift(sol.pi, margins);
  sol.expected_risk = expected_risk(sol.pi, margins);
  return sol;
}

double golden_max(double lo, double hi, auto&& f) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? c : d;
}

}  // namespace

std::string_view to_string(Penalty p) {
  switch (p) {
    case Penalty::kHardcap: return "hardcap";
    case Penalty::kLinear: return "linear";
    case Penalty::kSigmoid: return "sigmoid";
  }
  return "sigmoid";
}

std::optional<Penalty> parse_penalty(std::string_view s) {
  if (s == "hardcap" || s == "hard") return Penalty::kHardcap;
  if (s == "linear") return Penalty::kLinear;
  if (s == "sigmoid") return Penalty::kSigmoid;
  return std::nullopt;
}

void GameConfig::validate() const {
  if (!std::isfinite(T)) throw ConfigError("risk cap T must be finite");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be > 0");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be > 0");
  if (grid_points < 101) throw ConfigError("grid_points must be >= 101");
}

double ParetoFrontier::lift_at(double risk) const {
  if (vertices.empty()) throw DataError("empty frontier");
  if (vertices.size() == 1 || risk <= vertices.front().risk) return vertices.front().lift;
  if (risk >= vertices.back().risk) return vertices.back().lift;
  auto it = std::upper_bound(vertices.begin(), vertices.end(), risk,
                             [](double r, const Vertex& v) { return r < v.risk; });
  const Vertex& b = *it;
  const Vertex& a = *(it - 1);
  const double t = (risk - a.risk) / (b.risk - a.risk);
  return a.lift + t * (b.lift - a.lift);
}

ParetoFrontier upper_frontier(const MarginSet& margins) {
  validate_margins(margins);
  std::vector<std::size_t> order(margins.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (margins.Delta[a] != margins.Delta[b]) return margins.Delta[a] < margins.Delta[b];
    if (margins.M[a] != margins.M[b]) return margins.M[a] > margins.M[b];
    return a < b;
  });

  ParetoFrontier out;
  auto& hull = out.vertices;
  for (std::size_t idx : order) {
    const ParetoFrontier::Vertex v{margins.Delta[idx], margins.M[idx], idx};
    if (!hull.empty() && hull.back().risk == v.risk) continue;  // keeps max lift, lowest index
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      // Pop b unless a -> b -> v turns strictly clockwise.
      const double cross = (b.risk - a.risk) * (v.lift - b.lift) - (b.lift - a.lift) * (v.risk - b.risk);
      if (cross >= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(v);
  }
  return out;
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sigmoid_penalty(double risk, const GameConfig& config) {
  return config.beta * logistic(config.kappa * (risk - config.T));
}

double expected_lift(std::span<const double> pi, const MarginSet& margins) {
  double acc = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) acc += pi[i] * margins.M[i];
  return acc;
}

double expected_risk(std::span<const double> pi, const MarginSet& margins) {
  double acc = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) acc += pi[i] * margins.Delta[i];
  return acc;
}

double sigmoid_lagrangian(std::span<const double> pi, double mu, const MarginSet& margins,
                          const GameConfig& config) {
  return expected_lift(pi, margins) -
         mu * logistic(config.kappa * (expected_risk(pi, margins) - config.T));
}

double linear_lagrangian(std::span<const double> pi, double mu, const MarginSet& margins,
                         const GameConfig& config) {
  return expected_lift(pi, margins) - mu * (expected_risk(pi, margins) - config.T);
}

double normalized_objective(std::span<const double> pi, double lambda, const MarginSet& margins,
                            const GameConfig& config) {
  const double scale = config.beta + 1.0;
  return expected_lift(pi, margins) / scale -
         (config.beta / scale) * lambda * logistic(config.kappa * (expected_risk(pi, margins) - config.T));
}

double penalized_value(std::span<const double> pi, const MarginSet& margins, const GameConfig& config) {
  const double lift = expected_lift(pi, margins);
  const double risk = expected_risk(pi, margins);
  switch (config.penalty) {
    case Penalty::kHardcap:
      return risk <= config.T ? lift : -std::numeric_limits<double>::infinity();
    case Penalty::kLinear:
      return lift - config.beta * std::max(0.0, risk - config.T);
    case Penalty::kSigmoid:
      return lift - sigmoid_penalty(risk, config);
  }
  return lift;
}

GameSolution solve_hardcap(const MarginSet& margins, const GameConfig& config) {
  validate_margins(margins);
  config.validate();
  const double T = config.T;
  if (min_risk(margins) > T) return infeasible_solution(margins, config);

  const std::size_t m = margins.size();
  Pick best;
  for (std::size_t i = 0; i < m; ++i) {
    if (margins.Delta[i] <= T) consider(best, pure(margins, i, margins.M[i]));
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (margins.Delta[i] > T) continue;
    for (std::size_t j = 0; j < m; ++j) {
      if (margins.Delta[j] > T) consider(best, boundary_mix(margins, i, j, T));
    }
  }

  GameSolution sol = finish(margins, pick_pi(best, m));
  sol.objective = sol.expected_lift;
  // Multiplier of the binding cap: slope of the active edge, clipped to [0, beta].
  if (best.boundary) {
    const double slope = (margins.M[best.j] - margins.M[best.i]) / (margins.Delta[best.j] - margins.Delta[best.i]);
    sol.mu = std::clamp(slope, 0.0, config.beta);
  }
  sol.lambda = sol.mu / config.beta;
  return sol;
}

GameSolution solve_linear(const MarginSet& margins, const GameConfig& config) {
  validate_margins(margins);
  config.validate();
  const double T = config.T;
  const std::size_t m = margins.size();

  Pick best;
  for (std::size_t i = 0; i < m; ++i) {
    consider(best, pure(margins, i, margins.M[i] - config.beta * std::max(0.0, margins.Delta[i] - T)));
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!(margins.Delta[i] < T)) continue;
    for (std::size_t j = 0; j < m; ++j) {
      if (margins.Delta[j] > T) consider(best, boundary_mix(margins, i, j, T));
    }
  }

  GameSolution sol = finish(margins, pick_pi(best, m));
  sol.feasible = min_risk(margins) <= T;
  // Inner best response: beta strictly above the cap, 0 below or on it.
  const bool above = !best.boundary && margins.Delta[best.i] > T;
  sol.mu = above ? config.beta : 0.0;
  sol.lambda = sol.mu / config.beta;
  sol.objective = sol.expected_lift - config.beta * std::max(0.0, sol.expected_risk - T);
  return sol;
}

GameSolution solve_sigmoid(const MarginSet& margins, const GameConfig& config) {
  validate_margins(margins);
  config.validate();
  const ParetoFrontier frontier = upper_frontier(margins);
  const auto& verts = frontier.vertices;

  auto value_at = [&](double risk, double lift) { return lift - sigmoid_penalty(risk, config); };

  Pick best;
  for (const auto& v : verts) consider(best, pure(margins, v.index, value_at(v.risk, v.lift)));

  const std::size_t grid = config.grid_points;
  for (std::size_t s = 0; s + 1 < verts.size(); ++s) {
    const auto& a = verts[s];
    const auto& b = verts[s + 1];
    auto g = [&](double t) {
      return value_at(a.risk + t * (b.risk - a.risk), a.lift + t * (b.lift - a.lift));
    };
    std::size_t best_k = 0;
    double best_g = g(0.0);
    for (std::size_t k = 1; k < grid; ++k) {
      const double val = g(static_cast<double>(k) / static_cast<double>(grid - 1));
      if (val > best_g) {
        best_g = val;
        best_k = k;
      }
    }
    const double step = 1.0 / static_cast<double>(grid - 1);
    double t = static_cast<double>(best_k) * step;
    const double lo = std::max(0.0, t - step);
    const double hi = std::min(1.0, t + step);
    const double refined = golden_max(lo, hi, g);
    if (g(refined) > best_g) t = refined;
    if (t <= 0.0 || t >= 1.0) continue;  // vertices already considered

    Pick p;
    p.i = a.index;
    p.j = b.index;
    p.w = 1.0 - t;
    p.w_j = t;
    p.risk = a.risk + t * (b.risk - a.risk);
    p.value = g(t);
    p.valid = true;
    consider(best, p);
  }

  GameSolution sol = finish(margins, pick_pi(best, margins.size()));
  sol.feasible = min_risk(margins) <= config.T;
  sol.mu = config.beta;
  sol.lambda = 1.0;
  sol.objective = sol.expected_lift - sigmoid_penalty(sol.expected_risk, config);
  return sol;
}

GameSolution solve(const MarginSet& margins, const GameConfig& config) {
  switch (config.penalty) {
    case Penalty::kHardcap: return solve_hardcap(margins, config);
    case Penalty::kLinear: return solve_linear(margins, config);
    case Penalty::kSigmoid: return solve_sigmoid(margins, config);
  }
  return solve_sigmoid(margins, config);
}

std::size_t argmax_with_tiebreak(std::span<const double> pi, const MarginSet& margins) {
  if (pi.empty()) throw DataError("empty mixture");
  const double top = *std::max_element(pi.begin(), pi.end());
  std::size_t chosen = pi.size();
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (pi[i] < top - 1e-12) continue;
    if (chosen == pi.size() || margins.Delta[i] < margins.Delta[chosen]) chosen = i;
  }
  return chosen;
}

Selection select(const MarginSet& margins, const GameConfig& config) {
  Selection out;
  out.solution = solve(margins, config);
  if (!out.solution.feasible) {
    out.index = margins.fallback_index;
    out.is_fallback = true;
    return out;
  }
  out.index = out.solution.selected_index;
  out.is_fallback = margins.fallback_index.has_value() && out.index == margins.fallback_index;
  return out;
}

bool boundary_hypothesis(const MarginSet& margins, const GameConfig& config) {
  validate_margins(margins);
  const double T = config.T;
  if (min_risk(margins) > T) return false;
  bool tradeoff = false;
  double max_all = -std::numeric_limits<double>::infinity();
  double max_feasible = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < margins.size(); ++i) {
    if (margins.M[i] > 0.0 && margins.Delta[i] > 0.0) tradeoff = true;
    max_all = std::max(max_all, margins.M[i]);
    if (margins.Delta[i] <= T) max_feasible = std::max(max_feasible, margins.M[i]);
  }
  return tradeoff && max_feasible < max_all;
}

BoundaryCheck check_boundary(const MarginSet& margins, const GameConfig& config) {
  if (config.penalty == Penalty::kSigmoid) {
    throw ConfigError("boundary certificate applies to hardcap or linear penalties");
  }
  BoundaryCheck out;
  out.hypothesis = boundary_hypothesis(margins, config);
  out.solution = solve(margins, config);
  out.on_boundary = std::abs(out.solution.expected_risk - config.T) <= kBoundaryTol;
  if (!out.hypothesis || out.on_boundary || !margins.fallback_index) return out;

  // Strictly under the cap: try to move fallback mass onto a helpful, riskier row.
  const std::size_t s = *margins.fallback_index;
  const double slack = config.T - out.solution.expected_risk;
  if (slack <= 0.0 || out.solution.pi[s] <= 0.0) return out;
  for (std::size_t j = 0; j < margins.size(); ++j) {
    if (j == s || !(margins.M[j] > 0.0 && margins.Delta[j] > 0.0)) continue;
    const double alpha = std::min(out.solution.pi[s], slack / margins.Delta[j]);
    std::vector<double> moved = out.solution.pi;
    moved[s] -= alpha;
    moved[j] += alpha;
    if (penalized_value(moved, margins, config) > out.solution.objective) {
      out.improving_mixture = std::move(moved);
      break;
    }
  }
  return out;
}

bool boundary_certificate(const MarginSet& margins, const GameConfig& config) {
  const BoundaryCheck check = check_boundary(margins, config);
  return !check.hypothesis || (check.on_boundary && !check.improving_mixture);
}

std::vector<std::vector<double>> boundary_extreme_points(const MarginSet& margins, double T) {
  validate_margins(margins);
  const std::size_t m = margins.size();
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < m; ++i) {
    if (std::abs(margins.Delta[i] - T) <= 1e-12) {
      std::vector<double> pi(m, 0.0);
      pi[i] = 1.0;
      out.push_back(std::move(pi));
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!(margins.Delta[i] < T - 1e-12)) continue;
    for (std::size_t j = 0; j < m; ++j) {
      if (margins.Delta[j] > T + 1e-12) out.push_back(pick_pi(boundary_mix(margins, i, j, T), m));
    }
  }
  return out;
}

WitnessRecord sensitivity_witness(const MarginSet& margins, const GameConfig& config,
                                  std::span<const double> pi_a, std::span<const double> pi_b, double eta,
                                  WitnessCase which) {
  validate_margins(margins);
  config.validate();
  if (!(eta > 0.0)) throw WitnessError("perturbation bound eta must be > 0");
  const std::size_t m = margins.size();
  if (pi_a.size() != m || pi_b.size() != m) throw WitnessError("mixture length does not match margins");

  auto check_boundary_point = [&](std::span<const double> pi, const char* name) {
    double total = 0.0;
    for (double p : pi) {
      if (p < 0.0) throw WitnessError(std::string(name) + " has a negative weight");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw WitnessError(std::string(name) + " is not a distribution");
    if (std::abs(expected_risk(pi, margins) - config.T) > kBoundaryTol) {
      throw WitnessError(std::string(name) + " is not on the boundary R = T");
    }
  };
  check_boundary_point(pi_a, "pi_a");
  check_boundary_point(pi_b, "pi_b");

  GameConfig hard = config;
  hard.penalty = Penalty::kHardcap;

  WitnessRecord rec;
  rec.before = solve_hardcap(margins, hard);
  const double lift_a = expected_lift(pi_a, margins);
  const double lift_b = expected_lift(pi_b, margins);
  rec.delta = std::abs(lift_a - lift_b);

  // The incumbent is the better of the two; the challenger should overtake it.
  const bool a_leads = lift_a >= lift_b;
  std::span<const double> incumbent = a_leads ? pi_a : pi_b;
  std::span<const double> challenger = a_leads ? pi_b : pi_a;

  std::size_t k = m;
  double gap = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (challenger[i] - incumbent[i] > gap) {
      gap = challenger[i] - incumbent[i];
      k = i;
    }
  }
  const bool swap_possible = k < m && rec.delta / gap < eta;

  if (which == WitnessCase::kSwap || (which == WitnessCase::kAuto && swap_possible)) {
    if (!swap_possible) throw WitnessError("no coordinate swaps the optimum within eta");
    rec.kind = WitnessCase::kSwap;
    rec.coordinate = k;
    rec.epsilon = 0.5 * (rec.delta / gap + eta);
    rec.perturbed_margins = margins;
    rec.perturbed_margins.M[k] += rec.epsilon;
    rec.perturbed_config = hard;
    rec.after = solve_hardcap(rec.perturbed_margins, hard);
    const double new_inc = expected_lift(incumbent, rec.perturbed_margins);
    const double new_chal = expected_lift(challenger, rec.perturbed_margins);
    rec.verified = new_chal > new_inc && rec.after.objective >= new_chal - 1e-12 && rec.epsilon <= eta;
    return rec;
  }

  if (!(config.T > 0.0)) throw WitnessError("cap T must be > 0 to tighten it");
  rec.kind = WitnessCase::kTighten;
  rec.epsilon = 0.5 * std::min(eta, config.T);
  rec.perturbed_margins = margins;
  rec.perturbed_config = hard;
  rec.perturbed_config.T = config.T - rec.epsilon;
  rec.after = solve_hardcap(margins, rec.perturbed_config);
  const double cut = rec.perturbed_config.T;
  bool old_infeasible = expected_risk(pi_a, margins) > cut && expected_risk(pi_b, margins) > cut;
  for (const auto& pi : boundary_extreme_points(margins, config.T)) {
    old_infeasible = old_infeasible && expected_risk(pi, margins) > cut;
  }
  const bool new_ok = !rec.after.feasible || rec.after.expected_risk <= cut + kBoundaryTol;
  rec.verified = old_infeasible && new_ok && rec.epsilon <= eta;
  return rec;
}

}  // namespace sgame
