#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sgame {

struct TokenPair;

struct CacheRecord {
  std::string key;
  double yes_loglik = 0.0;
  double no_loglik = 0.0;
  std::int64_t created_at = 0;  // unix seconds

  bool operator==(const CacheRecord&) const = default;
};

/// SHA-256 over (model, prompt, both completions), NUL-separated.
std::string cache_key(std::string_view model, std::string_view prompt, const TokenPair& tokens);

/// Append-only line-delimited score store (`scores.jsonl` in the cache dir).
///
/// Loading indexes every record by key; corrupt lines are skipped with a
/// warning. Reads may run concurrently; appends are serialized.
class ScoreCache {
 public:
  explicit ScoreCache(std::filesystem::path dir);

  std::optional<CacheRecord> lookup(std::string_view key) const;

  /// Appends unless the key is already present. Throws CacheError on I/O failure.
  void insert(const CacheRecord& record);

  /// Rewrites the file with one line per key, in first-insertion order.
  void compact();

  std::size_t size() const;
  std::size_t skipped_lines() const { return skipped_; }
  const std::filesystem::path& file() const { return file_; }

 private:
  std::filesystem::path file_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, CacheRecord> index_;
  std::vector<std::string> order_;
  std::size_t skipped_ = 0;
};

/// Writes `record` to a cache in `dir` and reads it back through a fresh load.
CacheRecord cache_roundtrip(const CacheRecord& record, const std::filesystem::path& dir);

}  // namespace sgame
