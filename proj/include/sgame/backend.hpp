#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sgame/error.hpp"
#include "sgame/probe.hpp"

namespace sgame {

class ScoreCache;

/// Two completion strings scored against the same prompt.
struct TokenPair {
  std::string first;
  std::string second;
};

enum class BackendKind { kHttp, kFixture };
enum class LogprobMode { kEcho, kTopLogprobs };

std::optional<BackendKind> parse_backend_kind(std::string_view s);
std::string_view to_string(BackendKind k);

struct BackendConfig {
  BackendKind kind = BackendKind::kFixture;
  std::string endpoint = "http://127.0.0.1:8000/v1/completions";
  std::string model_name = "fixture";
  std::string yes_token = " Yes";
  std::string no_token = " No";
  std::size_t max_parallel = 4;
  std::size_t retries = 3;
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds backoff{500};  // first retry delay, doubled per attempt
  std::filesystem::path cache_dir;         // empty disables the persistent cache
  std::filesystem::path fixture_path;
  std::string api_key_env = "SGAME_API_KEY";

  // Completions-endpoint response mapping (JSON pointers).
  LogprobMode logprob_mode = LogprobMode::kEcho;
  std::string logprobs_pointer = "/choices/0/logprobs";
  std::string text_pointer = "/choices/0/text";

  /// Throws ConfigError for max_parallel < 1 or empty probe tokens.
  void validate() const;
};

/// Sampling parameters for free-form candidate generation.
struct GenParams {
  double temperature = 0.7;
  double top_p = 0.9;
  double repetition_penalty = 1.1;
  std::vector<std::string> stop{"\n", "<|return|>"};
  std::size_t max_tokens = 48;

  void validate() const;
};

/// Retriable transport failure (connection refused, timeout, HTTP 429/5xx).
class TransientBackendError : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Black-box model transport. Implementations must be safe to call concurrently.
class Backend {
 public:
  virtual ~Backend() = default;

  /// Log-likelihoods of two completions of `prompt`.
  virtual RawProbeResult logprob_pair(std::string_view prompt, const TokenPair& tokens) = 0;

  /// One raw sample; `draw` counts samples already requested for this prompt.
  /// Returns nullopt when a scripted source has no more samples.
  virtual std::optional<std::string> sample(std::string_view prompt, const GenParams& params, std::uint64_t seed,
                                            std::size_t draw) = 0;
};

/// Scripted backend keyed by prompt hash.
///
/// File layout: {"logprobs": {<sha256(prompt)>: {<completion>: loglik, ...}},
///               "generations": {<sha256(prompt)>: [raw sample, ...]}}.
/// The completion keys "yes" and "no" stand for the configured probe tokens.
class FixtureBackend : public Backend {
 public:
  FixtureBackend(const std::filesystem::path& path, std::string yes_token, std::string no_token);

  RawProbeResult logprob_pair(std::string_view prompt, const TokenPair& tokens) override;
  std::optional<std::string> sample(std::string_view prompt, const GenParams& params, std::uint64_t seed,
                                    std::size_t draw) override;

 private:
  double lookup(const std::unordered_map<std::string, double>& entry, const std::string& completion,
                std::string_view hash) const;

  std::string yes_token_;
  std::string no_token_;
  std::unordered_map<std::string, std::unordered_map<std::string, double>> logprobs_;
  std::unordered_map<std::string, std::vector<std::string>> generations_;
};

/// OpenAI-style completions endpoint.
///
/// Echo mode posts prompt + completion with echo=true, max_tokens=0 and sums
/// the log-probabilities of the tokens that reach past the prompt. Top mode
/// asks for one token and reads the completion from top_logprobs.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendConfig config);

  RawProbeResult logprob_pair(std::string_view prompt, const TokenPair& tokens) override;
  std::optional<std::string> sample(std::string_view prompt, const GenParams& params, std::uint64_t seed,
                                    std::size_t draw) override;

 private:
  double completion_loglik(std::string_view prompt, const std::string& completion);
  std::string post(const std::string& body);

  BackendConfig config_;
  std::string base_;  // scheme://host:port
  std::string path_;
};

std::unique_ptr<Backend> make_backend(const BackendConfig& config);

/// Post-processing for sampled answers: keep the span before the first
/// "<|return|>" or newline, then trim surrounding whitespace and punctuation
/// (a terminal . ! or ? is kept).
std::string postprocess_generation(std::string_view raw);

/// Cache-aware, retrying, concurrency-bounded front end over a Backend.
class ScoringClient {
 public:
  struct Stats {
    std::size_t backend_calls = 0;
    std::size_t cache_hits = 0;
    std::size_t retries = 0;
  };

  /// `cache` may be null; both referents must outlive the client.
  ScoringClient(Backend& backend, BackendConfig config, ScoreCache* cache = nullptr);

  /// Yes/No log-likelihoods with the configured probe tokens.
  RawProbeResult logprob_pair(std::string_view prompt);
  RawProbeResult logprob_pair(std::string_view prompt, const TokenPair& tokens);

  /// Concurrent batch; results keep the order of `prompts`.
  std::vector<RawProbeResult> logprob_pairs(std::span<const std::string> prompts);

  /// Log-likelihood of each completion, queried two per request.
  std::vector<double> completion_logliks(std::string_view prompt, std::span<const std::string> completions);

  /// Up to k unique post-processed samples; each slot resamples at most
  /// 3 times on empty or duplicate output. Throws GenerationError if none survive.
  std::vector<std::string> generate(std::string_view prompt, const GenParams& params, std::size_t k,
                                    std::uint64_t seed);

  Stats stats() const;
  const BackendConfig& config() const { return config_; }

 private:
  template <typename F>
  auto with_retries(F&& call) -> decltype(call());

  Backend& backend_;
  BackendConfig config_;
  ScoreCache* cache_;
  std::counting_semaphore<1024> slots_;
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> retries_{0};
};

}  // namespace sgame
