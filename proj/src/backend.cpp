#include "sgame/backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "json.hpp"

#include "sgame/cache.hpp"
#include "sgame/hash.hpp"

namespace sgame {

std::optional<BackendKind> parse_backend_kind(std::string_view s) {
  if (s == "http") return BackendKind::kHttp;
  if (s == "fixture") return BackendKind::kFixture;
  return std::nullopt;
}

std::string_view to_string(BackendKind k) {
  return k == BackendKind::kHttp ? "http" : "fixture";
}

void BackendConfig::validate() const {
  if (max_parallel < 1) throw ConfigError("max_parallel must be >= 1");
  if (max_parallel > 1024) throw ConfigError("max_parallel must be <= 1024");
  if (yes_token.empty() || no_token.empty()) throw ConfigError("probe tokens must be non-empty");
  if (timeout.count() <= 0) throw ConfigError("timeout must be positive");
  if (backoff.count() < 0) throw ConfigError("backoff must be >= 0");
  if (kind == BackendKind::kFixture && fixture_path.empty()) throw ConfigError("fixture backend needs a fixture path");
  if (kind == BackendKind::kHttp && endpoint.empty()) throw ConfigError("http backend needs an endpoint");
}

void GenParams::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
  if (!(repetition_penalty > 0.0)) throw ConfigError("repetition_penalty must be > 0");
  if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
}

// ---------------------------------------------------------------- fixture

FixtureBackend::FixtureBackend(const std::filesystem::path& path, std::string yes_token, std::string no_token)
    : yes_token_(std::move(yes_token)), no_token_(std::move(no_token)) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open fixture " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("fixture " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    if (j.contains("logprobs")) {
      for (const auto& [hash, entry] : j.at("logprobs").items()) {
        auto& row = logprobs_[hash];
        for (const auto& [completion, value] : entry.items()) row[completion] = value.get<double>();
      }
    }
    if (j.contains("generations")) {
      for (const auto& [hash, samples] : j.at("generations").items()) {
        generations_[hash] = samples.get<std::vector<std::string>>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("fixture " + path.string() + " has the wrong shape: " + e.what());
  }
}

double FixtureBackend::lookup(const std::unordered_map<std::string, double>& entry, const std::string& completion,
                              std::string_view hash) const {
  if (auto it = entry.find(completion); it != entry.end()) return it->second;
  const char* alias = completion == yes_token_ ? "yes" : completion == no_token_ ? "no" : nullptr;
  if (alias) {
    if (auto it = entry.find(alias); it != entry.end()) return it->second;
  }
  throw BackendError("fixture has no log-likelihood for completion '" + completion + "' of prompt " +
                     std::string(hash));
}

RawProbeResult FixtureBackend::logprob_pair(std::string_view prompt, const TokenPair& tokens) {
  const std::string hash = prompt_hash(prompt);
  auto it = logprobs_.find(hash);
  if (it == logprobs_.end()) throw BackendError("fixture has no entry for prompt " + hash);
  return {lookup(it->second, tokens.first, hash), lookup(it->second, tokens.second, hash)};
}

std::optional<std::string> FixtureBackend::sample(std::string_view prompt, const GenParams&, std::uint64_t,
                                                  std::size_t draw) {
  auto it = generations_.find(prompt_hash(prompt));
  if (it == generations_.end() || draw >= it->second.size()) return std::nullopt;
  return it->second[draw];
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  config.validate();
  if (config.kind == BackendKind::kFixture) {
    return std::make_unique<FixtureBackend>(config.fixture_path, config.yes_token, config.no_token);
  }
  return std::make_unique<HttpBackend>(config);
}

// ---------------------------------------------------------- post-processing

std::string postprocess_generation(std::string_view raw) {
  std::size_t cut = raw.size();
  if (auto p = raw.find("<|return|>"); p != std::string_view::npos) cut = std::min(cut, p);
  if (auto p = raw.find('\n'); p != std::string_view::npos) cut = std::min(cut, p);
  std::string_view span = raw.substr(0, cut);

  auto is_trim = [](unsigned char c) { return std::isspace(c) || std::ispunct(c); };
  while (!span.empty() && is_trim(static_cast<unsigned char>(span.front()))) span.remove_prefix(1);
  while (!span.empty()) {
    const unsigned char c = static_cast<unsigned char>(span.back());
    if (std::isspace(c)) {
      span.remove_suffix(1);
      continue;
    }
    if (!std::ispunct(c)) break;
    // keep one sentence terminator when what precedes it is a word
    if ((c == '.' || c == '!' || c == '?') && span.size() >= 2) {
      const unsigned char prev = static_cast<unsigned char>(span[span.size() - 2]);
      if (!is_trim(prev)) break;
    }
    span.remove_suffix(1);
  }
  return std::string(span);
}

// ---------------------------------------------------------- scoring client

namespace {

// Holds one concurrency slot for the lifetime of the guard.
class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1024>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1024>& sem_;
};

std::int64_t unix_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

ScoringClient::ScoringClient(Backend& backend, BackendConfig config, ScoreCache* cache)
    : backend_(backend),
      config_(std::move(config)),
      cache_(cache),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_parallel, 1, 1024))) {
  config_.validate();
}

template <typename F>
auto ScoringClient::with_retries(F&& call) -> decltype(call()) {
  for (std::size_t attempt = 0;; ++attempt) {
    try {
      SlotGuard slot(slots_);
      backend_calls_.fetch_add(1, std::memory_order_relaxed);
      return call();
    } catch (const TransientBackendError& e) {
      if (attempt >= config_.retries) {
        throw BackendError(std::string(e.what()) + " (gave up after " + std::to_string(attempt + 1) + " attempts)");
      }
    }
    retries_.fetch_add(1, std::memory_order_relaxed);
    std::this_thread::sleep_for(config_.backoff * (1LL << std::min<std::size_t>(attempt, 20)));
  }
}

RawProbeResult ScoringClient::logprob_pair(std::string_view prompt) {
  return logprob_pair(prompt, TokenPair{config_.yes_token, config_.no_token});
}

RawProbeResult ScoringClient::logprob_pair(std::string_view prompt, const TokenPair& tokens) {
  std::string key;
  if (cache_) {
    key = cache_key(config_.model_name, prompt, tokens);
    if (auto hit = cache_->lookup(key)) {
      cache_hits_.fetch_add(1, std::memory_order_relaxed);
      return {hit->yes_loglik, hit->no_loglik};
    }
  }
  const RawProbeResult r = with_retries([&] { return backend_.logprob_pair(prompt, tokens); });
  if (!std::isfinite(r.yes_loglik) || !std::isfinite(r.no_loglik)) {
    throw InvalidScoreError("backend returned a non-finite log-likelihood");
  }
  if (cache_) cache_->insert(CacheRecord{key, r.yes_loglik, r.no_loglik, unix_now()});
  return r;
}

std::vector<RawProbeResult> ScoringClient::logprob_pairs(std::span<const std::string> prompts) {
  std::vector<RawProbeResult> out(prompts.size());
  if (prompts.empty()) return out;
  const std::size_t workers = std::min(prompts.size(), config_.max_parallel);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= prompts.size()) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        out[i] = logprob_pair(prompts[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<double> ScoringClient::completion_logliks(std::string_view prompt,
                                                      std::span<const std::string> completions) {
  std::vector<double> out(completions.size());
  for (std::size_t i = 0; i < completions.size(); i += 2) {
    const std::string& second = i + 1 < completions.size() ? completions[i + 1] : completions[i];
    const RawProbeResult r = logprob_pair(prompt, TokenPair{completions[i], second});
    out[i] = r.yes_loglik;
    if (i + 1 < completions.size()) out[i + 1] = r.no_loglik;
  }
  return out;
}

std::vector<std::string> ScoringClient::generate(std::string_view prompt, const GenParams& params, std::size_t k,
                                                 std::uint64_t seed) {
  if (k < 1) throw ConfigError("generate needs k >= 1");
  params.validate();
  constexpr std::size_t kMaxResamples = 3;

  std::vector<std::string> out;
  std::set<std::string> seen;
  std::size_t draw = 0;
  bool exhausted = false;
  for (std::size_t slot = 0; slot < k && !exhausted; ++slot) {
    for (std::size_t attempt = 0; attempt <= kMaxResamples; ++attempt) {
      const std::size_t d = draw++;
      auto raw = with_retries([&] { return backend_.sample(prompt, params, seed, d); });
      if (!raw) {
        exhausted = true;
        break;
      }
      std::string text = postprocess_generation(*raw);
      if (text.empty() || seen.count(text)) continue;
      seen.insert(text);
      out.push_back(std::move(text));
      break;
    }
  }
  if (out.empty()) throw GenerationError("no usable candidate after resampling");
  return out;
}

ScoringClient::Stats ScoringClient::stats() const {
  return {backend_calls_.load(), cache_hits_.load(), retries_.load()};
}

}  // namespace sgame
