// sgame: score candidates, run selectors, sweep ablations and print reports.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "sgame/error.hpp"
#include "sgame/harness.hpp"

namespace {

// Flag name (without dashes) -> config key. Flags mirror config keys.
const std::pair<const char*, const char*> kValueFlags[] = {
    {"dataset", "path to the corpus (JSONL)"},
    {"kind", "hhh | truthfulqa | safetybench | custom"},
    {"templates", "template manifest"},
    {"backend", "fixture | http"},
    {"endpoint", "completions endpoint URL"},
    {"model", "model name sent to the endpoint"},
    {"fixture", "fixture file for the fixture backend"},
    {"yes-token", "probe completion for Yes"},
    {"no-token", "probe completion for No"},
    {"max-parallel", "concurrent backend requests"},
    {"retries", "retries on transient backend errors"},
    {"timeout-ms", "request timeout"},
    {"backoff-ms", "first retry delay"},
    {"cache-dir", "persistent score cache directory"},
    {"api-key-env", "env var holding the bearer token"},
    {"logprob-mode", "echo | top"},
    {"methods", "comma list of G,D,MI,SC,ER-G,ER-D,SG"},
    {"penalty", "hardcap | linear | sigmoid"},
    {"cap-T", "risk cap T"},
    {"beta", "multiplier bound"},
    {"kappa", "sigmoid steepness"},
    {"grid-points", "sigmoid search grid per frontier segment"},
    {"k", "generated candidates per free-form item"},
    {"seed", "sampling seed"},
    {"fallback", "safe fallback text"},
    {"out", "output directory"},
    {"sweep-T", "comma list of caps"},
    {"sweep-beta", "comma list of multiplier bounds"},
    {"sweep-kappa", "comma list of steepness values"},
    {"sweep-penalty", "comma list of penalties"},
    {"sweep-safe", "comma list of on/off"},
    {"dev-slice", "comma list of dev item ids (recorded only)"},
    {"rewards", "reward score file for the report"},
    {"reward-threshold", "left-tail threshold"},
    {"temperature", "sampling temperature"},
    {"top-p", "nucleus mass"},
    {"repetition-penalty", "repetition penalty"},
    {"max-tokens", "generation length cap"},
    {"er-iterations", "equilibrium ranking iterations"},
    {"bleu-smoothing", "none | epsilon"},
};

const std::pair<const char*, const char*> kSwitchFlags[] = {
    {"safe-candidate", "add the fallback to the selectable pool"},
    {"no-safe-candidate", "keep the fallback out of the selectable pool"},
    {"filter-unambiguous", "keep free-form items whose best answer has BLEU-Acc 1"},
    {"parallel-cells", "run sweep cells in parallel"},
};

std::string config_key(std::string flag) {
  for (auto& c : flag) {
    if (c == '-') c = '_';
  }
  return flag;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safety Game answer selection"};
  app.require_subcommand(1);

  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> switches;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "JSON config file; flags take precedence");
    for (const auto& [flag, help] : kValueFlags) sub->add_option(std::string("--") + flag, values[flag], help);
    for (const auto& [flag, help] : kSwitchFlags) sub->add_flag(std::string("--") + flag, switches[flag], help);
  };
  CLI::App* score = app.add_subcommand("score", "score every candidate with the probes");
  CLI::App* select = app.add_subcommand("select", "run the configured selectors over the scores");
  CLI::App* ablate = app.add_subcommand("ablate", "sweep cap, bound, steepness, penalty and safe candidate");
  CLI::App* report = app.add_subcommand("report", "aggregate selections into tables");
  for (auto* sub : {score, select, ablate, report}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    sgame::RunConfig config = config_file.empty() ? sgame::RunConfig{} : sgame::load_run_config(config_file);
    nlohmann::json overrides = nlohmann::json::object();
    CLI::App* active = app.get_subcommands().front();
    for (const auto& [flag, help] : kValueFlags) {
      if (active->count(std::string("--") + flag) > 0) overrides[config_key(flag)] = values[flag];
    }
    for (const auto& [flag, help] : kSwitchFlags) {
      if (active->count(std::string("--") + flag) > 0) overrides[config_key(flag)] = true;
    }
    sgame::apply_config(config, overrides);

    if (active == score) {
      sgame::cmd_score(config);
    } else if (active == select) {
      sgame::cmd_select(config);
    } else if (active == ablate) {
      sgame::cmd_ablate(config);
    } else {
      sgame::cmd_report(config);
      std::ifstream txt(config.out_dir / "report.txt");
      std::cout << txt.rdbuf();
    }
  } catch (const sgame::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sgame::exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
