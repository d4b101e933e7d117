#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "sgame/baselines.hpp"
#include "sgame/error.hpp"
#include "sgame/game.hpp"
#include "sgame/harness.hpp"
#include "sgame/metrics.hpp"
#include "sgame/probe.hpp"

namespace py = pybind11;

namespace {

sgame::MarginSet margins(std::vector<double> M, std::vector<double> delta, std::optional<std::size_t> fallback) {
  sgame::MarginSet m;
  m.M = std::move(M);
  m.Delta = std::move(delta);
  m.fallback_index = fallback;
  return m;
}

sgame::GameConfig game(const std::string& penalty, double T, double beta, double kappa) {
  sgame::GameConfig c;
  const auto p = sgame::parse_penalty(penalty);
  if (!p) throw sgame::ConfigError("unknown penalty '" + penalty + "'");
  c.penalty = *p;
  c.T = T;
  c.beta = beta;
  c.kappa = kappa;
  c.validate();
  return c;
}

py::dict solution_dict(const sgame::GameSolution& s) {
  py::dict d;
  d["pi"] = s.pi;
  d["mu"] = s.mu;
  d["lambda"] = s.lambda;
  d["objective"] = s.objective;
  d["expected_lift"] = s.expected_lift;
  d["expected_risk"] = s.expected_risk;
  d["feasible"] = s.feasible;
  d["selected_index"] = s.selected_index;
  d["support"] = s.support;
  return d;
}

sgame::BleuConfig bleu_config(std::size_t max_n, const std::string& smoothing) {
  sgame::BleuConfig c;
  c.max_n = max_n;
  if (smoothing == "epsilon") {
    c.smoothing = sgame::Smoothing::kEpsilon;
  } else if (smoothing != "none") {
    throw sgame::ConfigError("smoothing must be none or epsilon");
  }
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "safety_game core bindings";
  m.attr("__version__") = sgame::kToolVersion;

  auto base = py::register_exception<sgame::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<sgame::ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<sgame::DataError>(m, "DataError", base.ptr());
  py::register_exception<sgame::BackendError>(m, "BackendError", base.ptr());
  py::register_exception<sgame::IntegrityError>(m, "IntegrityError", base.ptr());

  m.def("log_p_normalize", &sgame::log_p_normalize, py::arg("yes_loglik"), py::arg("no_loglik"),
        "y - log(e^y + e^n)");

  m.def(
      "solve",
      [](std::vector<double> M, std::vector<double> delta, std::optional<std::size_t> fallback_index,
         const std::string& penalty, double T, double beta, double kappa) {
        return solution_dict(sgame::solve(margins(std::move(M), std::move(delta), fallback_index),
                                          game(penalty, T, beta, kappa)));
      },
      py::arg("M"), py::arg("delta"), py::arg("fallback_index") = py::none(), py::arg("penalty") = "sigmoid",
      py::arg("T") = 1.0, py::arg("beta") = 10.0, py::arg("kappa") = 30.0);

  m.def(
      "select",
      [](std::vector<double> M, std::vector<double> delta, std::optional<std::size_t> fallback_index,
         const std::string& penalty, double T, double beta, double kappa) {
        const auto s = sgame::select(margins(std::move(M), std::move(delta), fallback_index),
                                     game(penalty, T, beta, kappa));
        return py::make_tuple(s.index, s.is_fallback);
      },
      py::arg("M"), py::arg("delta"), py::arg("fallback_index") = py::none(), py::arg("penalty") = "sigmoid",
      py::arg("T") = 1.0, py::arg("beta") = 10.0, py::arg("kappa") = 30.0,
      "(index or None, is_fallback)");

  m.def(
      "normalized_objective",
      [](std::vector<double> pi, double lambda, std::vector<double> M, std::vector<double> delta, double T,
         double beta, double kappa) {
        return sgame::normalized_objective(pi, lambda, margins(std::move(M), std::move(delta), std::nullopt),
                                           game("sigmoid", T, beta, kappa));
      },
      py::arg("pi"), py::arg("lam"), py::arg("M"), py::arg("delta"), py::arg("T") = 1.0, py::arg("beta") = 10.0,
      py::arg("kappa") = 30.0);

  m.def(
      "bleu",
      [](const std::string& candidate, const std::vector<std::string>& refs, std::size_t max_n,
         const std::string& smoothing) { return sgame::bleu(candidate, refs, bleu_config(max_n, smoothing)); },
      py::arg("candidate"), py::arg("references"), py::arg("max_n") = 4, py::arg("smoothing") = "none");

  m.def(
      "bleu_acc",
      [](const std::string& candidate, const std::vector<std::string>& correct,
         const std::vector<std::string>& incorrect) { return sgame::bleu_acc(candidate, correct, incorrect); },
      py::arg("candidate"), py::arg("correct"), py::arg("incorrect"));

  m.def(
      "select_baseline",
      [](const std::string& method, std::vector<double> gen, std::vector<double> disc) {
        const auto meth = sgame::parse_method(method);
        if (!meth || *meth == sgame::Method::kSG) throw sgame::ConfigError("unknown baseline '" + method + "'");
        sgame::SelectorScores s;
        s.gen_loglik = std::move(gen);
        s.disc_correct = std::move(disc);
        return sgame::select_baseline(*meth, s);
      },
      py::arg("method"), py::arg("gen_loglik"), py::arg("disc_correct"));

  m.def(
      "run",
      [](const std::string& command, const std::string& config_json) {
        sgame::RunConfig config;
        sgame::apply_config(config, nlohmann::json::parse(config_json));
        py::gil_scoped_release release;
        if (command == "score") {
          sgame::cmd_score(config);
        } else if (command == "select") {
          sgame::cmd_select(config);
        } else if (command == "ablate") {
          sgame::cmd_ablate(config);
        } else if (command == "report") {
          sgame::cmd_report(config);
        } else {
          throw sgame::ConfigError("unknown command '" + command + "'");
        }
      },
      py::arg("command"), py::arg("config_json"));
}
