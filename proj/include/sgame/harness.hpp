#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "sgame/backend.hpp"
#include "sgame/baselines.hpp"
#include "sgame/game.hpp"
#include "sgame/metrics.hpp"
#include "sgame/types.hpp"

namespace sgame {

inline constexpr const char* kToolVersion = "0.1.0";

/// Axes of an ablation sweep; an empty axis takes the base config's value.
struct SweepAxes {
  std::vector<double> T;
  std::vector<double> beta;
  std::vector<double> kappa;
  std::vector<Penalty> penalty;
  std::vector<bool> include_safe;

  bool empty() const;
};

struct RunConfig {
  std::filesystem::path dataset_path;
  Dataset dataset = Dataset::kSafetyBench;
  std::filesystem::path templates;  // template manifest; defaults to the installed set
  BackendConfig backend;
  GameConfig game;
  GenParams gen;
  EquilibriumConfig er;
  BleuConfig bleu;
  std::vector<Method> methods{Method::kG,   Method::kD,   Method::kMI, Method::kSC,
                              Method::kERG, Method::kERD, Method::kSG};
  std::size_t k = 10;
  std::uint64_t seed = 0;
  std::optional<bool> include_safe;  // unset: on for free-form data, off for multiple choice
  std::string fallback{kDefaultFallback};
  bool filter_unambiguous = false;
  std::filesystem::path out_dir = "out";
  SweepAxes sweep;
  bool parallel_cells = false;
  std::vector<std::string> dev_slice;
  std::filesystem::path rewards;
  double reward_threshold = 0.0;

  bool safe_candidate() const;
  /// Throws ConfigError on an empty method list, bad ranges, or a missing dataset path.
  void validate() const;
};

/// Keys mirror the CLI flags with dashes turned into underscores
/// (e.g. "cap_T", "sweep_beta", "no_safe_candidate"). Unknown keys raise ConfigError.
void apply_config(RunConfig& config, const nlohmann::json& overrides);
RunConfig load_run_config(const std::filesystem::path& file);
nlohmann::json config_snapshot(const RunConfig& config);

std::filesystem::path default_template_manifest();

/// Per-item probe scores for every candidate and the fallback -> scores.jsonl.
void cmd_score(const RunConfig& config);
/// One select_<METHOD>.jsonl per configured method.
void cmd_select(const RunConfig& config);
/// Cartesian sweep -> ablation.txt and ablation.csv.
void cmd_ablate(const RunConfig& config);
/// Verifies hashes, then writes report.txt and report.csv.
void cmd_report(const RunConfig& config);

/// Overrides the backend used by the commands (tests); pass nullptr to reset.
void set_backend_override(Backend* backend);

/// One ablation cell with the Table-5 style metric set.
struct AblationRow {
  double T = 0.0;
  double beta = 0.0;
  double kappa = 0.0;
  Penalty penalty = Penalty::kSigmoid;
  bool include_safe = false;
  EvalReport sg;
  EvalReport original;
  double delta_vs_original = 0.0;  // percentage points of the headline metric
};

/// Runs the sweep over an existing scores file without writing anything.
std::vector<AblationRow> run_ablation(const RunConfig& config);

}  // namespace sgame
