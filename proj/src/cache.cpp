#include "sgame/cache.hpp"

#include <fstream>

#include "json.hpp"

#include "sgame/backend.hpp"
#include "sgame/error.hpp"
#include "sgame/hash.hpp"
#include "sgame/log.hpp"

namespace sgame {

namespace {

constexpr const char* kCacheFile = "scores.jsonl";

std::string encode(const CacheRecord& r) {
  nlohmann::json j;
  j["key"] = r.key;
  j["yes"] = r.yes_loglik;
  j["no"] = r.no_loglik;
  j["created_at"] = r.created_at;
  return j.dump();
}

CacheRecord decode(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  CacheRecord r;
  r.key = j.at("key").get<std::string>();
  r.yes_loglik = j.at("yes").get<double>();
  r.no_loglik = j.at("no").get<double>();
  r.created_at = j.at("created_at").get<std::int64_t>();
  if (r.key.empty()) throw std::runtime_error("empty key");
  return r;
}

}  // namespace

std::string cache_key(std::string_view model, std::string_view prompt, const TokenPair& tokens) {
  std::string material;
  material.reserve(model.size() + prompt.size() + tokens.first.size() + tokens.second.size() + 4);
  material.append(model).push_back('\0');
  material.append(prompt).push_back('\0');
  material.append(tokens.first).push_back('\0');
  material.append(tokens.second);
  return sha256_hex(material);
}

ScoreCache::ScoreCache(std::filesystem::path dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw CacheError("cannot create cache dir " + dir.string() + ": " + ec.message());
  file_ = dir / kCacheFile;

  std::ifstream in(file_, std::ios::binary);
  if (!in) return;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      CacheRecord r = decode(line);
      if (!index_.count(r.key)) order_.push_back(r.key);
      index_[r.key] = std::move(r);
    } catch (const std::exception& e) {
      ++skipped_;
      warn(file_.string() + ":" + std::to_string(lineno) + ": corrupt cache record skipped (" + e.what() + ")");
    }
  }
}

std::optional<CacheRecord> ScoreCache::lookup(std::string_view key) const {
  std::shared_lock lock(mutex_);
  auto it = index_.find(std::string(key));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void ScoreCache::insert(const CacheRecord& record) {
  std::unique_lock lock(mutex_);
  if (index_.count(record.key)) return;
  std::ofstream out(file_, std::ios::binary | std::ios::app);
  out << encode(record) << '\n';
  out.flush();
  if (!out) throw CacheError("cannot append to " + file_.string());
  index_.emplace(record.key, record);
  order_.push_back(record.key);
}

void ScoreCache::compact() {
  std::unique_lock lock(mutex_);
  const auto tmp = file_.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    for (const auto& key : order_) out << encode(index_.at(key)) << '\n';
    out.flush();
    if (!out) throw CacheError("cannot write " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, file_, ec);
  if (ec) throw CacheError("cannot replace " + file_.string() + ": " + ec.message());
  skipped_ = 0;
}

std::size_t ScoreCache::size() const {
  std::shared_lock lock(mutex_);
  return index_.size();
}

CacheRecord cache_roundtrip(const CacheRecord& record, const std::filesystem::path& dir) {
  {
    ScoreCache writer(dir);
    writer.insert(record);
  }
  ScoreCache reader(dir);
  auto got = reader.lookup(record.key);
  if (!got) throw CacheError("record " + record.key + " missing after write");
  return *got;
}

}  // namespace sgame
