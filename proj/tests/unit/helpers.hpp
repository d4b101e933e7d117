#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>

#include "sgame/backend.hpp"

namespace testutil {

inline std::filesystem::path data(const std::string& rel) { return std::filesystem::path(SGAME_TEST_DATA) / rel; }

inline std::filesystem::path template_manifest() {
  return std::filesystem::path(SGAME_TEMPLATE_DIR) / "manifest.json";
}

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("sgame-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Backend driven by a callback; counts calls.
class FakeBackend : public sgame::Backend {
 public:
  using PairFn = std::function<sgame::RawProbeResult(std::string_view, const sgame::TokenPair&)>;
  using SampleFn = std::function<std::optional<std::string>(std::string_view, std::size_t)>;

  explicit FakeBackend(PairFn pair, SampleFn sample = {}) : pair_(std::move(pair)), sample_(std::move(sample)) {}

  sgame::RawProbeResult logprob_pair(std::string_view prompt, const sgame::TokenPair& tokens) override {
    ++calls;
    return pair_(prompt, tokens);
  }
  std::optional<std::string> sample(std::string_view prompt, const sgame::GenParams&, std::uint64_t,
                                    std::size_t draw) override {
    ++calls;
    if (!sample_) return std::nullopt;
    return sample_(prompt, draw);
  }

  std::atomic<int> calls{0};

 private:
  PairFn pair_;
  SampleFn sample_;
};

inline sgame::BackendConfig fake_config(std::size_t max_parallel = 4) {
  sgame::BackendConfig c;
  c.kind = sgame::BackendKind::kFixture;
  c.fixture_path = "unused";
  c.max_parallel = max_parallel;
  c.backoff = std::chrono::milliseconds(1);
  return c;
}

}  // namespace testutil
