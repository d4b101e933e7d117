#include <cmath>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sgame/error.hpp"
#include "sgame/harness.hpp"

#ifndef SGAME_TEMPLATE_DIR
#define SGAME_TEMPLATE_DIR "templates"
#endif

namespace sgame {

namespace {

using nlohmann::json;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part.erase(0, part.find_first_not_of(" \t"));
    part.erase(part.find_last_not_of(" \t") + 1);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

std::string as_string(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  throw ConfigError("'" + key + "' must be a string");
}

double as_double(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (!s.empty() && end && *end == '\0') return d;
  }
  throw ConfigError("'" + key + "' must be a number");
}

std::uint64_t as_uint(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return v.get<std::uint64_t>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (!s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return std::stoull(s);
    }
  }
  throw ConfigError("'" + key + "' must be a non-negative integer");
}

bool as_bool(const json& v, const std::string& key) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "true" || s == "on" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "off" || s == "0" || s == "no") return false;
  }
  throw ConfigError("'" + key + "' must be a boolean");
}

std::vector<std::string> as_list(const json& v, const std::string& key) {
  if (v.is_string()) return split_list(v.get<std::string>());
  if (v.is_array()) {
    std::vector<std::string> out;
    for (const auto& e : v) out.push_back(as_string(e, key));
    return out;
  }
  throw ConfigError("'" + key + "' must be a list");
}

std::vector<double> as_double_list(const json& v, const std::string& key) {
  std::vector<double> out;
  if (v.is_array()) {
    for (const auto& e : v) out.push_back(as_double(e, key));
  } else {
    for (const auto& s : as_list(v, key)) out.push_back(as_double(json(s), key));
  }
  return out;
}

Penalty as_penalty(const std::string& s) {
  auto p = parse_penalty(s);
  if (!p) throw ConfigError("unknown penalty '" + s + "' (hardcap, linear, sigmoid)");
  return *p;
}

}  // namespace

bool SweepAxes::empty() const {
  return T.empty() && beta.empty() && kappa.empty() && penalty.empty() && include_safe.empty();
}

bool RunConfig::safe_candidate() const {
  return include_safe.value_or(!is_multiple_choice(dataset));
}

void RunConfig::validate() const {
  if (methods.empty()) throw ConfigError("no selection methods configured");
  if (dataset_path.empty()) throw ConfigError("no dataset path configured");
  if (out_dir.empty()) throw ConfigError("no output directory configured");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (fallback.empty()) throw ConfigError("fallback text is empty");
  backend.validate();
  game.validate();
  gen.validate();
  bleu.validate();
  for (double t : sweep.T) {
    if (!std::isfinite(t)) throw ConfigError("sweep T values must be finite");
  }
  for (double b : sweep.beta) {
    if (!(b > 0.0)) throw ConfigError("sweep beta values must be > 0");
  }
  for (double k2 : sweep.kappa) {
    if (!(k2 > 0.0)) throw ConfigError("sweep kappa values must be > 0");
  }
}

std::filesystem::path default_template_manifest() {
  if (const char* env = std::getenv("SGAME_TEMPLATES"); env && *env) return env;
  return std::filesystem::path(SGAME_TEMPLATE_DIR) / "manifest.json";
}

void apply_config(RunConfig& c, const json& o) {
  if (!o.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, v] : o.items()) {
    if (v.is_null()) continue;
    if (key == "dataset") {
      c.dataset_path = as_string(v, key);
    } else if (key == "kind") {
      auto d = parse_dataset(as_string(v, key));
      if (!d) throw ConfigError("unknown dataset kind '" + as_string(v, key) + "'");
      c.dataset = *d;
    } else if (key == "templates") {
      c.templates = as_string(v, key);
    } else if (key == "backend") {
      auto b = parse_backend_kind(as_string(v, key));
      if (!b) throw ConfigError("unknown backend '" + as_string(v, key) + "' (http, fixture)");
      c.backend.kind = *b;
    } else if (key == "endpoint") {
      c.backend.endpoint = as_string(v, key);
    } else if (key == "model") {
      c.backend.model_name = as_string(v, key);
    } else if (key == "fixture") {
      c.backend.fixture_path = as_string(v, key);
    } else if (key == "yes_token") {
      c.backend.yes_token = as_string(v, key);
    } else if (key == "no_token") {
      c.backend.no_token = as_string(v, key);
    } else if (key == "max_parallel") {
      c.backend.max_parallel = as_uint(v, key);
    } else if (key == "retries") {
      c.backend.retries = as_uint(v, key);
    } else if (key == "timeout_ms") {
      c.backend.timeout = std::chrono::milliseconds(as_uint(v, key));
    } else if (key == "backoff_ms") {
      c.backend.backoff = std::chrono::milliseconds(as_uint(v, key));
    } else if (key == "cache_dir") {
      c.backend.cache_dir = as_string(v, key);
    } else if (key == "api_key_env") {
      c.backend.api_key_env = as_string(v, key);
    } else if (key == "logprob_mode") {
      const auto s = as_string(v, key);
      if (s == "echo") {
        c.backend.logprob_mode = LogprobMode::kEcho;
      } else if (s == "top") {
        c.backend.logprob_mode = LogprobMode::kTopLogprobs;
      } else {
        throw ConfigError("logprob_mode must be echo or top");
      }
    } else if (key == "logprobs_pointer") {
      c.backend.logprobs_pointer = as_string(v, key);
    } else if (key == "text_pointer") {
      c.backend.text_pointer = as_string(v, key);
    } else if (key == "methods") {
      c.methods.clear();
      for (const auto& s : as_list(v, key)) {
        auto m = parse_method(s);
        if (!m) throw ConfigError("unknown method '" + s + "'");
        if (std::find(c.methods.begin(), c.methods.end(), *m) == c.methods.end()) c.methods.push_back(*m);
      }
    } else if (key == "penalty") {
      c.game.penalty = as_penalty(as_string(v, key));
    } else if (key == "cap_T") {
      c.game.T = as_double(v, key);
    } else if (key == "beta") {
      c.game.beta = as_double(v, key);
    } else if (key == "kappa") {
      c.game.kappa = as_double(v, key);
    } else if (key == "grid_points") {
      c.game.grid_points = as_uint(v, key);
    } else if (key == "k") {
      c.k = as_uint(v, key);
    } else if (key == "seed") {
      c.seed = as_uint(v, key);
    } else if (key == "safe_candidate") {
      c.include_safe = as_bool(v, key);
    } else if (key == "no_safe_candidate") {
      if (as_bool(v, key)) c.include_safe = false;
    } else if (key == "fallback") {
      c.fallback = as_string(v, key);
    } else if (key == "filter_unambiguous") {
      c.filter_unambiguous = as_bool(v, key);
    } else if (key == "out") {
      c.out_dir = as_string(v, key);
    } else if (key == "sweep_T") {
      c.sweep.T = as_double_list(v, key);
    } else if (key == "sweep_beta") {
      c.sweep.beta = as_double_list(v, key);
    } else if (key == "sweep_kappa") {
      c.sweep.kappa = as_double_list(v, key);
    } else if (key == "sweep_penalty") {
      c.sweep.penalty.clear();
      for (const auto& s : as_list(v, key)) c.sweep.penalty.push_back(as_penalty(s));
    } else if (key == "sweep_safe") {
      c.sweep.include_safe.clear();
      for (const auto& s : as_list(v, key)) c.sweep.include_safe.push_back(as_bool(json(s), key));
    } else if (key == "parallel_cells") {
      c.parallel_cells = as_bool(v, key);
    } else if (key == "dev_slice") {
      c.dev_slice = as_list(v, key);
    } else if (key == "rewards") {
      c.rewards = as_string(v, key);
    } else if (key == "reward_threshold") {
      c.reward_threshold = as_double(v, key);
    } else if (key == "temperature") {
      c.gen.temperature = as_double(v, key);
    } else if (key == "top_p") {
      c.gen.top_p = as_double(v, key);
    } else if (key == "repetition_penalty") {
      c.gen.repetition_penalty = as_double(v, key);
    } else if (key == "max_tokens") {
      c.gen.max_tokens = as_uint(v, key);
    } else if (key == "er_iterations") {
      c.er.iterations = as_uint(v, key);
    } else if (key == "er_step") {
      c.er.step_size = as_double(v, key);
    } else if (key == "er_regularization") {
      c.er.regularization = as_double(v, key);
    } else if (key == "bleu_max_n") {
      c.bleu.max_n = as_uint(v, key);
    } else if (key == "bleu_smoothing") {
      const auto s = as_string(v, key);
      if (s == "none") {
        c.bleu.smoothing = Smoothing::kNone;
      } else if (s == "epsilon") {
        c.bleu.smoothing = Smoothing::kEpsilon;
      } else {
        throw ConfigError("bleu_smoothing must be none or epsilon");
      }
    } else {
      throw ConfigError("unknown configuration key '" + key + "'");
    }
  }
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + file.string() + " is not valid JSON: " + e.what());
  }
  RunConfig c;
  apply_config(c, j);
  return c;
}

json config_snapshot(const RunConfig& c) {
  json j;
  j["dataset"] = c.dataset_path.generic_string();
  j["kind"] = std::string(to_string(c.dataset));
  j["templates"] = c.templates.generic_string();
  j["backend"] = std::string(to_string(c.backend.kind));
  j["endpoint"] = c.backend.endpoint;
  j["model"] = c.backend.model_name;
  j["fixture"] = c.backend.fixture_path.generic_string();
  j["yes_token"] = c.backend.yes_token;
  j["no_token"] = c.backend.no_token;
  j["max_parallel"] = c.backend.max_parallel;
  j["retries"] = c.backend.retries;
  j["timeout_ms"] = c.backend.timeout.count();
  j["backoff_ms"] = c.backend.backoff.count();
  j["cache_dir"] = c.backend.cache_dir.generic_string();
  j["api_key_env"] = c.backend.api_key_env;
  j["logprob_mode"] = c.backend.logprob_mode == LogprobMode::kEcho ? "echo" : "top";
  j["logprobs_pointer"] = c.backend.logprobs_pointer;
  j["text_pointer"] = c.backend.text_pointer;
  std::vector<std::string> methods;
  for (Method m : c.methods) methods.emplace_back(to_string(m));
  j["methods"] = methods;
  j["penalty"] = std::string(to_string(c.game.penalty));
  j["cap_T"] = c.game.T;
  j["beta"] = c.game.beta;
  j["kappa"] = c.game.kappa;
  j["grid_points"] = c.game.grid_points;
  j["k"] = c.k;
  j["seed"] = c.seed;
  j["safe_candidate"] = c.safe_candidate();
  j["fallback"] = c.fallback;
  j["filter_unambiguous"] = c.filter_unambiguous;
  j["out"] = c.out_dir.generic_string();
  j["sweep_T"] = c.sweep.T;
  j["sweep_beta"] = c.sweep.beta;
  j["sweep_kappa"] = c.sweep.kappa;
  std::vector<std::string> pens;
  for (Penalty p : c.sweep.penalty) pens.emplace_back(to_string(p));
  j["sweep_penalty"] = pens;
  std::vector<bool> safes(c.sweep.include_safe.begin(), c.sweep.include_safe.end());
  j["sweep_safe"] = safes;
  j["parallel_cells"] = c.parallel_cells;
  j["dev_slice"] = c.dev_slice;
  j["rewards"] = c.rewards.generic_string();
  j["reward_threshold"] = c.reward_threshold;
  j["temperature"] = c.gen.temperature;
  j["top_p"] = c.gen.top_p;
  j["repetition_penalty"] = c.gen.repetition_penalty;
  j["max_tokens"] = c.gen.max_tokens;
  j["er_iterations"] = c.er.iterations;
  j["er_step"] = c.er.step_size;
  j["er_regularization"] = c.er.regularization;
  j["bleu_max_n"] = c.bleu.max_n;
  j["bleu_smoothing"] = c.bleu.smoothing == Smoothing::kNone ? "none" : "epsilon";
  return j;
}

}  // namespace sgame
