#include "sgame/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sgame/error.hpp"

namespace sgame {

namespace {

constexpr double kProbFloor = 1e-12;

std::size_t argmax_lowest(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

double logsumexp(const std::vector<double>& v) {
  const double top = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - top);
  return top + std::log(acc);
}

void normalize(std::vector<double>& p) {
  double total = 0.0;
  for (double x : p) total += x;
  if (!(total > 0.0) || !std::isfinite(total)) throw NumericalError("cannot normalize policy row");
  for (double& x : p) x /= total;
}

// Softmax of logits, in place.
void softmax(std::vector<double>& logits) {
  const double lse = logsumexp(logits);
  for (double& x : logits) x = std::exp(x - lse);
}

double kl(const std::vector<double>& p, const std::vector<double>& q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) acc += p[i] * std::log(p[i] / q[i]);
  }
  return acc;
}

// Regularized best-response gap for one row: max_p <p,Q> - lam KL(p||prior) minus its value at `current`.
double row_gap(const std::vector<double>& current, const std::vector<double>& prior, const std::vector<double>& q,
               double lam) {
  std::vector<double> shifted(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) shifted[i] = std::log(prior[i]) + q[i] / lam;
  const double best = lam * logsumexp(shifted);
  double value = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) value += current[i] * q[i];
  value -= lam * kl(current, prior);
  return best - value;
}

// One KL-proximal multiplicative-weights step on a row.
void mwu_step(std::vector<double>& row, const std::vector<double>& prior, const std::vector<double>& q,
              double eta, double lam) {
  std::vector<double> logits(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) {
    logits[i] = (std::log(row[i]) + eta * (q[i] + lam * std::log(prior[i]))) / (1.0 + eta * lam);
  }
  softmax(logits);
  for (std::size_t i = 0; i < row.size(); ++i) row[i] = std::max(logits[i], kProbFloor);
  normalize(row);
}

void check_finite(const EquilibriumState& s) {
  auto ok = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!ok(s.gen_correct) || !ok(s.gen_incorrect) || !ok(s.disc_correct)) {
    throw NumericalError("non-finite value in equilibrium iterate " + std::to_string(s.iteration));
  }
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kG: return "G";
    case Method::kD: return "D";
    case Method::kMI: return "MI";
    case Method::kSC: return "SC";
    case Method::kERG: return "ER-G";
    case Method::kERD: return "ER-D";
    case Method::kSG: return "SG";
  }
  return "SG";
}

std::optional<Method> parse_method(std::string_view s) {
  for (Method m : {Method::kG, Method::kD, Method::kMI, Method::kSC, Method::kERG, Method::kERD, Method::kSG}) {
    if (s == to_string(m)) return m;
  }
  if (s == "ER_G") return Method::kERG;
  if (s == "ER_D") return Method::kERD;
  return std::nullopt;
}

void SelectorScores::validate() const {
  if (gen_loglik.empty()) throw DataError("selector scores are empty");
  if (gen_loglik.size() != disc_correct.size()) throw DataError("selector score vectors differ in length");
  for (std::size_t i = 0; i < gen_loglik.size(); ++i) {
    if (!std::isfinite(gen_loglik[i]) || !std::isfinite(disc_correct[i])) {
      throw DataError("non-finite selector score at candidate " + std::to_string(i));
    }
  }
}

std::size_t select_G(const SelectorScores& scores) {
  scores.validate();
  return argmax_lowest(scores.gen_loglik);
}

std::size_t select_D(const SelectorScores& scores) {
  scores.validate();
  return argmax_lowest(scores.disc_correct);
}

std::size_t select_MI(const SelectorScores& scores) {
  scores.validate();
  std::vector<double> total(scores.gen_loglik.size());
  for (std::size_t i = 0; i < total.size(); ++i) total[i] = scores.gen_loglik[i] + scores.disc_correct[i];
  return argmax_lowest(total);
}

std::size_t select_SC(const SelectorScores& scores) {
  scores.validate();
  const double lse = logsumexp(scores.gen_loglik);
  std::vector<double> contrast(scores.gen_loglik.size());
  for (std::size_t i = 0; i < contrast.size(); ++i) {
    contrast[i] = scores.disc_correct[i] - (scores.gen_loglik[i] - lse);
  }
  return argmax_lowest(contrast);
}

EquilibriumState initial_policies(const SelectorScores& scores) {
  scores.validate();
  const std::size_t n = scores.gen_loglik.size();
  EquilibriumState s;
  s.gen_correct = scores.gen_loglik;
  softmax(s.gen_correct);
  s.gen_incorrect.resize(n);
  s.disc_correct.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(std::exp(scores.disc_correct[i]), kProbFloor, 1.0 - kProbFloor);
    s.disc_correct[i] = p;
    s.gen_incorrect[i] = 1.0 - p;
  }
  for (double& x : s.gen_correct) x = std::max(x, kProbFloor);
  normalize(s.gen_correct);
  normalize(s.gen_incorrect);
  return s;
}

double exploitability(const EquilibriumState& state, const SelectorScores& scores, double regularization) {
  const EquilibriumState prior = initial_policies(scores);
  const std::size_t n = state.gen_correct.size();
  // Generator payoff for y given v is half the discriminator's belief in v.
  std::vector<double> q_c(n);
  std::vector<double> q_i(n);
  for (std::size_t y = 0; y < n; ++y) {
    q_c[y] = 0.5 * state.disc_correct[y];
    q_i[y] = 0.5 * (1.0 - state.disc_correct[y]);
  }
  double gap = row_gap(state.gen_correct, prior.gen_correct, q_c, regularization) +
               row_gap(state.gen_incorrect, prior.gen_incorrect, q_i, regularization);
  for (std::size_t y = 0; y < n; ++y) {
    const std::vector<double> cur{state.disc_correct[y], 1.0 - state.disc_correct[y]};
    const std::vector<double> pri{prior.disc_correct[y], 1.0 - prior.disc_correct[y]};
    const std::vector<double> q{0.5 * state.gen_correct[y], 0.5 * state.gen_incorrect[y]};
    gap += row_gap(cur, pri, q, regularization);
  }
  return gap;
}

EquilibriumResult run_equilibrium(const SelectorScores& scores, const EquilibriumConfig& config) {
  if (config.iterations == 0) throw ConfigError("equilibrium ranking needs at least one iteration");
  if (!(config.step_size > 0.0)) throw ConfigError("equilibrium step size must be > 0");
  if (!(config.regularization > 0.0)) throw ConfigError("equilibrium regularization must be > 0");
  const EquilibriumState prior = initial_policies(scores);
  const std::size_t n = prior.gen_correct.size();
  const double eta = config.step_size;
  const double lam = config.regularization;

  EquilibriumResult out;
  EquilibriumState cur = prior;
  cur.step_size = eta;
  EquilibriumState sum = cur;
  std::vector<std::size_t> checkpoints = config.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  std::size_t next_cp = 0;

  for (std::size_t t = 1; t <= config.iterations; ++t) {
    std::vector<double> q_c(n);
    std::vector<double> q_i(n);
    for (std::size_t y = 0; y < n; ++y) {
      q_c[y] = 0.5 * cur.disc_correct[y];
      q_i[y] = 0.5 * (1.0 - cur.disc_correct[y]);
    }
    EquilibriumState next = cur;
    mwu_step(next.gen_correct, prior.gen_correct, q_c, eta, lam);
    mwu_step(next.gen_incorrect, prior.gen_incorrect, q_i, eta, lam);
    for (std::size_t y = 0; y < n; ++y) {
      std::vector<double> row{cur.disc_correct[y], 1.0 - cur.disc_correct[y]};
      const std::vector<double> pri{prior.disc_correct[y], 1.0 - prior.disc_correct[y]};
      const std::vector<double> q{0.5 * cur.gen_correct[y], 0.5 * cur.gen_incorrect[y]};
      mwu_step(row, pri, q, eta, lam);
      next.disc_correct[y] = row[0];
    }
    next.iteration = t;
    check_finite(next);
    cur = std::move(next);

    for (std::size_t y = 0; y < n; ++y) {
      sum.gen_correct[y] += cur.gen_correct[y];
      sum.gen_incorrect[y] += cur.gen_incorrect[y];
      sum.disc_correct[y] += cur.disc_correct[y];
    }
    sum.iteration = t;

    while (next_cp < checkpoints.size() && checkpoints[next_cp] == t) {
      EquilibriumState avg = sum;
      const double count = static_cast<double>(t + 1);
      for (std::size_t y = 0; y < n; ++y) {
        avg.gen_correct[y] /= count;
        avg.gen_incorrect[y] /= count;
        avg.disc_correct[y] /= count;
      }
      out.exploitability.emplace_back(t, exploitability(avg, scores, lam));
      ++next_cp;
    }
  }

  const double count = static_cast<double>(config.iterations + 1);
  out.average = sum;
  for (std::size_t y = 0; y < n; ++y) {
    out.average.gen_correct[y] /= count;
    out.average.gen_incorrect[y] /= count;
    out.average.disc_correct[y] /= count;
  }
  out.average.step_size = eta;
  out.last = std::move(cur);
  check_finite(out.average);
  return out;
}

std::size_t select_ER(const SelectorScores& scores, Method variant, const EquilibriumConfig& config) {
  if (variant != Method::kERG && variant != Method::kERD) throw ConfigError("select_ER needs ER-G or ER-D");
  const EquilibriumResult res = run_equilibrium(scores, config);
  return variant == Method::kERG ? argmax_lowest(res.average.gen_correct) : argmax_lowest(res.average.disc_correct);
}

std::size_t select_baseline(Method method, const SelectorScores& scores, const EquilibriumConfig& config) {
  switch (method) {
    case Method::kG: return select_G(scores);
    case Method::kD: return select_D(scores);
    case Method::kMI: return select_MI(scores);
    case Method::kSC: return select_SC(scores);
    case Method::kERG:
    case Method::kERD: return select_ER(scores, method, config);
    case Method::kSG: break;
  }
  throw ConfigError("SG is not a baseline selector");
}

}  // namespace sgame
