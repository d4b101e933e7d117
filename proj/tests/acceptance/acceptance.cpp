// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
// `acceptance --freeze` regenerates data/smoke/smoke_expected.json from the oracle.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#include "json.hpp"
#include "oracle.hpp"
#include "sgame/game.hpp"
#include "sgame/harness.hpp"
#include "sgame/metrics.hpp"
#include "sgame/probe.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path data(const std::string& rel) { return fs::path(SGAME_TEST_DATA) / rel; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

sgame::MarginSet to_margins(const oracle::Instance& inst, bool fallback_first) {
  sgame::MarginSet m;
  m.M = inst.M;
  m.Delta = inst.D;
  if (fallback_first) m.fallback_index = 0;
  return m;
}

sgame::GameConfig to_config(const oracle::Instance& inst, sgame::Penalty p) {
  sgame::GameConfig c;
  c.T = inst.T;
  c.beta = inst.beta;
  c.kappa = inst.kappa;
  c.penalty = p;
  return c;
}

// Fallback row (0,0) first, then m-1 rows uniform in [-2, 2].
oracle::Instance random_instance(std::mt19937_64& rng, std::size_t m, double T) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  oracle::Instance inst;
  inst.M = {0.0};
  inst.D = {0.0};
  for (std::size_t i = 1; i < m; ++i) {
    inst.M.push_back(u(rng));
    inst.D.push_back(u(rng));
  }
  inst.T = T;
  return inst;
}

constexpr std::pair<sgame::Penalty, oracle::Mode> kModes[] = {
    {sgame::Penalty::kHardcap, oracle::Mode::kHardcap},
    {sgame::Penalty::kLinear, oracle::Mode::kLinear},
    {sgame::Penalty::kSigmoid, oracle::Mode::kSigmoid},
};

// 1. solver vs simplex grid
Outcome solver_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> msize(2, 4);
  std::uniform_real_distribution<double> uT(0.0, 2.0);

  // the line search must agree with full enumeration on a coarse lattice
  for (int t = 0; t < 30; ++t) {
    const auto inst = random_instance(rng, 4, uT(rng));
    for (const auto& [p, mode] : kModes) {
      const double fast = oracle::grid_search(inst, mode, 60).best;
      const double slow = oracle::grid_search_naive(inst, mode, 60).best;
      if (std::abs(fast - slow) > 1e-12) return {false, "oracle line search disagrees with enumeration"};
    }
  }

  double worst = 0.0;
  int count = 0;
  for (const auto& [p, mode] : kModes) {
    for (int t = 0; t < 500; ++t) {
      const auto inst = random_instance(rng, msize(rng), uT(rng));
      const sgame::GameSolution s = sgame::solve(to_margins(inst, true), to_config(inst, p));
      const double grid = oracle::grid_search(inst, mode, 1000).best;
      const double gap = std::abs(s.objective - grid);
      worst = std::max(worst, gap);
      ++count;
      if (!(gap <= 5e-3)) {
        return {false, std::string(sgame::to_string(p)) + " instance " + std::to_string(t) + " off by " +
                           fmt("%.3g", gap)};
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs >= 60.0) return {false, "took " + fmt("%.1f", secs) + " s"};
  return {true, std::to_string(count) + " instances, max gap " + fmt("%.2e", worst) + ", " + fmt("%.1f", secs) +
                    " s"};
}

// Hypothesis checked here, not via the library: a helpful risky row exists
// and every maximizer of M breaks the cap.
bool tradeoff_holds(const oracle::Instance& inst) {
  bool helpful_risky = false;
  double best = -INFINITY;
  for (std::size_t i = 0; i < inst.M.size(); ++i) {
    helpful_risky = helpful_risky || (inst.M[i] > 0 && inst.D[i] > 0);
    best = std::max(best, inst.M[i]);
  }
  if (!helpful_risky) return false;
  for (std::size_t i = 0; i < inst.M.size(); ++i) {
    if (inst.M[i] == best && inst.D[i] <= inst.T) return false;
  }
  return true;
}

// 2. boundary selection
Outcome boundary_selection() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::size_t> msize(2, 6);
  std::uniform_real_distribution<double> uT(0.0, 2.0);
  int tested = 0, ok = 0;
  double worst = 0.0;
  while (tested < 1000) {
    const auto inst = random_instance(rng, msize(rng), uT(rng));
    if (!tradeoff_holds(inst)) continue;
    ++tested;
    const auto s = sgame::solve_hardcap(to_margins(inst, true), to_config(inst, sgame::Penalty::kHardcap));
    double R = 0.0;
    for (std::size_t i = 0; i < s.pi.size(); ++i) R += s.pi[i] * inst.D[i];
    const double gap = std::abs(R - inst.T);
    worst = std::max(worst, gap);
    if (gap <= 1e-9) ++ok;
  }
  return {ok == tested, std::to_string(ok) + "/" + std::to_string(tested) + " on the cap, max |R-T| " +
                            fmt("%.1e", worst)};
}

// 3. sensitivity witnesses on two-vertex boundary instances
Outcome witnesses() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> uT(0.2, 1.0), uD(1.1, 2.0), uM(0.2, 2.0), small(-1e-3, 1e-3),
      ueta(0.01, 0.1);
  int ok = 0, swaps = 0, cuts = 0;
  for (int t = 0; t < 100; ++t) {
    oracle::Instance inst;
    inst.T = uT(rng);
    const double D1 = uD(rng) + inst.T, D2 = uD(rng) + inst.T;
    const double M1 = uM(rng);
    // boundary lifts M1*T/D1 and M2*T/D2 differ by at most 1e-3
    const double M2 = (M1 * inst.T / D1 + small(rng)) * D2 / inst.T;
    inst.M = {0.0, M1, M2};
    inst.D = {0.0, D1, D2};
    const std::vector<double> pa{1.0 - inst.T / D1, inst.T / D1, 0.0};
    const std::vector<double> pb{1.0 - inst.T / D2, 0.0, inst.T / D2};
    const double eta = ueta(rng);
    const auto which = t % 2 == 0 ? sgame::WitnessCase::kSwap : sgame::WitnessCase::kTighten;
    const auto margins = to_margins(inst, true);
    const auto w = sgame::sensitivity_witness(margins, to_config(inst, sgame::Penalty::kHardcap), pa, pb, eta, which);

    bool good = w.verified && w.epsilon > 0.0 && w.epsilon <= eta;
    if (w.kind == sgame::WitnessCase::kSwap) {
      // the leader before the bump must trail after it
      auto lift = [](const std::vector<double>& pi, const std::vector<double>& M) {
        return pi[0] * M[0] + pi[1] * M[1] + pi[2] * M[2];
      };
      const bool a_led = lift(pa, inst.M) >= lift(pb, inst.M);
      const double na = lift(pa, w.perturbed_margins.M), nb = lift(pb, w.perturbed_margins.M);
      good = good && (a_led ? nb > na : na > nb);
      double moved = 0.0;
      for (std::size_t i = 0; i < 3; ++i) moved += std::abs(w.perturbed_margins.M[i] - inst.M[i]);
      good = good && moved <= eta && w.perturbed_margins.Delta == margins.Delta;
      ++swaps;
    } else {
      const double Tn = w.perturbed_config.T;
      good = good && inst.T - Tn <= eta && inst.T - Tn > 0.0;
      for (const auto* pi : {&pa, &pb}) {
        const double R = (*pi)[1] * D1 + (*pi)[2] * D2;
        good = good && R > Tn;
      }
      ++cuts;
    }
    if (good) ++ok;
  }
  return {ok == 100, std::to_string(ok) + "/100 verified (" + std::to_string(swaps) + " swaps, " +
                         std::to_string(cuts) + " cap cuts)"};
}

// 4. sigmoid anchors
Outcome sigmoid_anchors() {
  sgame::GameConfig c;
  c.kappa = 30.0;
  c.beta = 10.0;
  bool ok = true;
  double worst = 0.0;
  for (double T : {-1.0, 0.0, 0.5, 1.0, 3.7}) {
    c.T = T;
    ok = ok && sgame::sigmoid_penalty(T, c) == c.beta / 2.0;
    const double h = 1e-6;
    const double slope = (sgame::sigmoid_penalty(T + h, c) - sgame::sigmoid_penalty(T - h, c)) / (2 * h);
    const double rel = std::abs(slope - c.kappa * c.beta / 4.0) / (c.kappa * c.beta / 4.0);
    worst = std::max(worst, rel);
  }
  ok = ok && worst <= 1e-6;
  return {ok, "P(T) = beta/2 exactly, slope rel err " + fmt("%.1e", worst)};
}

// 5. multiplier reports
Outcome multipliers() {
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<std::size_t> msize(2, 5);
  std::uniform_real_distribution<double> uT(-0.5, 2.0);
  int sig_ok = 0, lin_ok = 0, below = 0, above = 0;
  for (int t = 0; t < 500; ++t) {
    const auto inst = random_instance(rng, msize(rng), uT(rng));
    const auto margins = to_margins(inst, true);
    const auto s = sgame::solve_sigmoid(margins, to_config(inst, sgame::Penalty::kSigmoid));
    if (s.mu == inst.beta && s.lambda == 1.0) ++sig_ok;
    const auto l = sgame::solve_linear(margins, to_config(inst, sgame::Penalty::kLinear));
    double R = 0.0;
    for (std::size_t i = 0; i < l.pi.size(); ++i) R += l.pi[i] * inst.D[i];
    bool good = true;
    if (R < inst.T - 1e-9) {
      ++below;
      good = l.mu == 0.0;
    } else if (R > inst.T + 1e-9) {
      ++above;
      good = l.mu == inst.beta;
    }
    if (good) ++lin_ok;
  }
  return {sig_ok == 500 && lin_ok == 500, "sigmoid mu/beta = 1 on " + std::to_string(sig_ok) +
                                              "/500; linear rule on " + std::to_string(lin_ok) + "/500 (" +
                                              std::to_string(below) + " under, " + std::to_string(above) +
                                              " over the cap)"};
}

// 6. scaling bridge between the penalized and branch forms
Outcome scaling_bridge() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(-2.0, 2.0), u01(0.0, 1.0), ub(0.1, 20.0), uk(0.5, 60.0);
  std::uniform_int_distribution<std::size_t> msize(1, 6);
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t m = msize(rng);
    oracle::Instance inst;
    for (std::size_t i = 0; i < m; ++i) {
      inst.M.push_back(u(rng));
      inst.D.push_back(u(rng));
    }
    inst.T = u(rng);
    inst.beta = ub(rng);
    inst.kappa = uk(rng);
    std::vector<double> pi(m);
    double sum = 0.0;
    for (auto& p : pi) sum += (p = u01(rng));
    for (auto& p : pi) p /= sum;
    const double lambda = u01(rng);
    const double mu = lambda * inst.beta;
    double M = 0.0, R = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      M += pi[i] * inst.M[i];
      R += pi[i] * inst.D[i];
    }
    const double penalized = M - mu * oracle::logistic(inst.kappa * (R - inst.T));
    const double branch = sgame::normalized_objective(pi, mu / inst.beta, to_margins(inst, false),
                                                      to_config(inst, sgame::Penalty::kSigmoid));
    worst = std::max(worst, std::abs(penalized - (inst.beta + 1.0) * branch));
  }
  return {worst <= 1e-12, "10000 tuples, max gap " + fmt("%.1e", worst)};
}

// 7. never worse than always falling back
Outcome fallback_dominance() {
  std::mt19937_64 rng(707);
  std::uniform_int_distribution<std::size_t> msize(1, 6);
  std::uniform_real_distribution<double> uT(0.0, 2.0);
  int ok = 0, total = 0;
  double lowest = INFINITY;
  for (int t = 0; t < 1000; ++t) {
    const auto inst = random_instance(rng, msize(rng), t % 10 == 0 ? 0.0 : uT(rng));
    for (auto p : {sgame::Penalty::kHardcap, sgame::Penalty::kLinear}) {
      const auto s = sgame::solve(to_margins(inst, true), to_config(inst, p));
      ++total;
      lowest = std::min(lowest, s.objective);
      if (s.objective >= 0.0) ++ok;
    }
  }
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " objectives >= 0 (min " +
                           fmt("%.3g", lowest) + ")"};
}

// 8. yes/no normalization
Outcome normalization() {
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> wide(-700.0, 700.0), narrow(-30.0, 5.0), shift(-50.0, 50.0);
  double worst_sum = 0.0, worst_shift = 0.0;
  for (int t = 0; t < 100000; ++t) {
    const bool big = t % 2 == 0;
    const double y = big ? wide(rng) : narrow(rng);
    const double n = big ? wide(rng) : narrow(rng);
    const double c = shift(rng);
    const double a = sgame::log_p_normalize(y, n), b = sgame::log_p_normalize(n, y);
    if (!std::isfinite(a) || !std::isfinite(b)) return {false, "non-finite output"};
    worst_sum = std::max(worst_sum, std::abs(std::exp(a) + std::exp(b) - 1.0));
    worst_shift = std::max(worst_shift, std::abs(sgame::log_p_normalize(y + c, n + c) - a));
  }
  return {worst_sum <= 1e-12 && worst_shift <= 1e-12,
          "100000 pairs, complement err " + fmt("%.1e", worst_sum) + ", shift err " + fmt("%.1e", worst_shift)};
}

// 9. BLEU against hand-computed values
Outcome bleu_hand() {
  struct Pair {
    const char* cand;
    const char* ref;
    double expect;
  };
  // Worked by hand: clipped n-gram precisions, geometric mean over the
  // available orders, brevity penalty exp(1 - r/c) when c < r.
  const Pair pairs[] = {
      {"the cat sat", "the cat sat down", std::exp(1.0 - 4.0 / 3.0)},
      {"the cat sat on the mat", "the cat sat on the mat", 1.0},
      {"cat sat on the mat", "the cat sat on the mat", std::exp(1.0 - 6.0 / 5.0)},
      {"the big cat sat down", "the big cat sat on the mat",
       std::exp(1.0 - 7.0 / 5.0) * std::pow((4.0 / 5.0) * (3.0 / 4.0) * (2.0 / 3.0) * (1.0 / 2.0), 0.25)},
      {"A dog, barking.", "a dog barking", 0.0},
  };
  // Pair 4: p1 = 4/5, p2 = 3/4, p3 = 2/3, p4 = 1/2, c = 5 < r = 7.
  // Pair 5: cand [a dog , barking .], ref [a dog barking]:
  //   p1 = 3/5, p2 = 1/4 (a dog), p3 = 0/3 -> BLEU 0.
  double worst = 0.0;
  bool ok = true;
  for (const auto& p : pairs) {
    const std::vector<std::string> refs{p.ref};
    const double got = sgame::bleu(p.cand, refs);
    worst = std::max(worst, std::abs(got - p.expect));
  }
  // smoothed variant of pair 5: (3/5 * 1/4 * (0.1/3) * (0.1/2))^(1/4)
  sgame::BleuConfig eps;
  eps.smoothing = sgame::Smoothing::kEpsilon;
  const std::vector<std::string> r5{"a dog barking"};
  const double s5 = std::pow(0.6 * 0.25 * (0.1 / 3.0) * (0.1 / 2.0), 0.25);
  worst = std::max(worst, std::abs(sgame::bleu("A dog, barking.", r5, eps) - s5));
  ok = worst <= 1e-9;

  const std::vector<std::string> ok_refs{"the sky is blue"}, bad_refs{"the sky is green"};
  const int a = sgame::bleu_acc("the sky is blue", ok_refs, bad_refs);
  const int b = sgame::bleu_acc("the sky is green", ok_refs, bad_refs);
  const int c = sgame::bleu_acc("the sky is blue", ok_refs, ok_refs);
  ok = ok && a == 1 && b == 0 && c == 0;
  return {ok, "6 BLEU values, max err " + fmt("%.1e", worst) + "; BLEU-Acc " + std::to_string(a) + "/" +
                  std::to_string(b) + "/" + std::to_string(c)};
}

sgame::RunConfig smoke_config(const fs::path& out) {
  sgame::RunConfig c;
  c.dataset_path = data("smoke/corpus.jsonl");
  c.dataset = sgame::Dataset::kSafetyBench;
  c.templates = fs::path(SGAME_TEMPLATE_DIR) / "manifest.json";
  c.backend.kind = sgame::BackendKind::kFixture;
  c.backend.fixture_path = data("smoke/fixture.json");
  c.out_dir = out;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sgame-acceptance-" + std::to_string(::getpid()) + "-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Margins of the smoke items straight from the design probabilities. The
// SafetyBench safety probe asks "is it safe?", so risk is log(1 - p_safe).
std::map<std::string, oracle::Instance> smoke_instances(const sgame::GameConfig& game) {
  const json design = json::parse(slurp(data("smoke/design.json")));
  std::map<std::string, oracle::Instance> out;
  for (const auto& [id, spec] : design["items"].items()) {
    const json& fb = spec.contains("fallback") ? spec["fallback"] : design["fallback"];
    const double h0 = std::log(fb["p_help"].get<double>());
    const double s0 = std::log1p(-fb["p_safe"].get<double>());
    oracle::Instance inst;
    for (std::size_t i = 0; i < spec["p_help"].size(); ++i) {
      inst.M.push_back(std::log(spec["p_help"][i].get<double>()) - h0);
      inst.D.push_back(std::log1p(-spec["p_safe"][i].get<double>()) - s0);
    }
    inst.T = game.T;
    inst.beta = game.beta;
    inst.kappa = game.kappa;
    out[id] = inst;
  }
  return out;
}

int freeze() {
  const sgame::GameConfig game;  // sigmoid, T = 1, beta = 10, kappa = 30
  json items = json::object();
  for (const auto& [id, inst] : smoke_instances(game)) {
    json e;
    const double min_risk = *std::min_element(inst.D.begin(), inst.D.end());
    if (min_risk > inst.T) {
      e["fallback"] = true;
      e["selected_index"] = nullptr;
    } else {
      const auto g = oracle::grid_search(inst, oracle::Mode::kSigmoid, 1000);
      e["fallback"] = false;
      e["selected_index"] = oracle::argmax(g.pi, inst.D);
      e["objective"] = g.best;
      e["pi"] = g.pi;
    }
    items[id] = e;
  }
  json doc{{"penalty", "sigmoid"}, {"T", game.T}, {"beta", game.beta}, {"kappa", game.kappa},
           {"grid_step", 1e-3}, {"items", items}};
  std::ofstream(data("smoke/smoke_expected.json")) << doc.dump(1) << "\n";
  std::cout << doc.dump(1) << "\n";
  return 0;
}

// 10. end-to-end determinism and SG picks
Outcome end_to_end() {
  const fs::path root = scratch("e2e");
  const fs::path out = root / "out", first = root / "first";
  const sgame::RunConfig c = smoke_config(out);
  auto run = [&] {
    sgame::cmd_score(c);
    sgame::cmd_select(c);
    sgame::cmd_report(c);
  };
  run();
  fs::copy(out, first, fs::copy_options::recursive);
  fs::remove_all(out);
  run();

  std::vector<std::string> files{"scores.jsonl", "report.txt", "report.csv"};
  for (const char* m : {"G", "D", "MI", "SC", "ER-G", "ER-D", "SG"}) files.push_back(std::string("select_") + m + ".jsonl");
  for (const auto& f : files) {
    if (!fs::exists(out / f)) return {false, f + " missing"};
    if (slurp(out / f) != slurp(first / f)) return {false, f + " differs between runs"};
  }
  json m1 = json::parse(slurp(first / "manifest.json")), m2 = json::parse(slurp(out / "manifest.json"));
  m1.erase("runtime");
  m2.erase("runtime");
  if (m1 != m2) return {false, "manifest differs outside runtime stats"};

  const json expected = json::parse(slurp(data("smoke/smoke_expected.json")));
  std::ifstream in(out / "select_SG.jsonl");
  std::string line;
  int matched = 0, total = 0;
  std::string mismatch;
  while (std::getline(in, line)) {
    const json r = json::parse(line);
    const json& e = expected["items"].at(r["id"].get<std::string>());
    ++total;
    bool good = r["is_fallback"] == e["fallback"] && r["selected_index"] == e["selected_index"];
    if (good && !e["fallback"].get<bool>()) {
      good = std::abs(r["objective"].get<double>() - e["objective"].get<double>()) <= 5e-3;
    }
    if (good) {
      ++matched;
    } else if (mismatch.empty()) {
      mismatch = ", first mismatch " + r["id"].get<std::string>();
    }
  }
  fs::remove_all(root);
  const bool ok = matched == total && total == static_cast<int>(expected["items"].size());
  return {ok, std::to_string(files.size()) + " files identical; SG picks " + std::to_string(matched) + "/" +
                  std::to_string(total) + " match the oracle" + mismatch};
}

// 11. ablation sweep behavior
Outcome ablation() {
  const fs::path root = scratch("ablate");
  sgame::RunConfig c = smoke_config(root / "out");
  sgame::cmd_score(c);
  c.game.penalty = sgame::Penalty::kLinear;
  c.sweep.T = {0.1, 1.0, 10.0, 100.0};
  const auto rows = sgame::run_ablation(c);
  bool ok = rows.size() == 4;
  std::string trace;
  for (std::size_t i = 0; ok && i < rows.size(); ++i) {
    const auto& r = rows[i];
    ok = r.sg.avg_mu_over_beta && r.sg.avg_hardcap_objective;
    if (!ok) break;
    trace += fmt(" T=%g", r.T) + fmt(":%.3f", *r.sg.avg_mu_over_beta) + fmt("/%.3f", *r.sg.avg_hardcap_objective);
    if (i > 0) {
      ok = *r.sg.avg_mu_over_beta <= *rows[i - 1].sg.avg_mu_over_beta + 1e-12 &&
           *r.sg.avg_hardcap_objective >= *rows[i - 1].sg.avg_hardcap_objective - 1e-12;
    }
  }

  // penalty sweep: every cell carries the full metric set
  sgame::RunConfig p = c;
  p.sweep.T.clear();
  p.sweep.penalty = {sgame::Penalty::kSigmoid, sgame::Penalty::kLinear};
  p.sweep.include_safe = {false, true};
  sgame::cmd_ablate(p);
  std::ifstream csv(p.out_dir / "ablation.csv");
  std::string header, line;
  std::getline(csv, header);
  const auto columns = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.push_back("");
    return out;
  };
  const auto head = columns(header);
  int cells = 0;
  bool full = true;
  for (const char* need : {"accuracy_sg", "accuracy_original", "fallback_rate", "feasible_rate",
                           "avg_mu_over_beta", "delta_vs_original"}) {
    full = full && std::find(head.begin(), head.end(), need) != head.end();
  }
  while (std::getline(csv, line)) {
    const auto row = columns(line);
    ++cells;
    full = full && row.size() == head.size();
    for (const auto& v : row) full = full && !v.empty();
  }
  fs::remove_all(root);
  ok = ok && full && cells == 4;
  return {ok, "T sweep (mu/beta / hardcap objective):" + trace + "; penalty sweep " + std::to_string(cells) +
                  " cells, full rows " + (full ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1 && std::string(argv[1]) == "--freeze") return freeze();

  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"solver matches simplex grid search", solver_oracle},
      {"hard-cap optimum sits on the cap under a tradeoff", boundary_selection},
      {"sensitivity witnesses verify", witnesses},
      {"sigmoid penalty anchors", sigmoid_anchors},
      {"multiplier reports", multipliers},
      {"penalized and branch objectives agree up to scale", scaling_bridge},
      {"never worse than the fallback", fallback_dominance},
      {"yes/no normalization", normalization},
      {"BLEU and BLEU-Acc hand values", bleu_hand},
      {"end-to-end determinism and SG picks", end_to_end},
      {"ablation sweep behavior", ablation},
  };
  int failures = 0, n = 0;
  for (const auto& [name, fn] : criteria) {
    ++n;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << n << "] " << name << ": " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  return failures == 0 ? 0 : 1;
}
