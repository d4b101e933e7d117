#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "helpers.hpp"
#include "sgame/backend.hpp"
#include "sgame/cache.hpp"

using namespace sgame;

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("cache keys separate every field") {
  const TokenPair yn{" Yes", " No"};
  const std::string k = cache_key("m", "prompt", yn);
  CHECK(k.size() == 64);
  CHECK(cache_key("m", "prompt", yn) == k);
  CHECK(cache_key("m2", "prompt", yn) != k);
  CHECK(cache_key("m", "prompt ", yn) != k);
  CHECK(cache_key("m", "prompt", {" No", " Yes"}) != k);
  // the separator keeps field boundaries apart
  CHECK(cache_key("ab", "c", yn) != cache_key("a", "bc", yn));
}

TEST_CASE("cache round trip is exact") {
  testutil::TempDir tmp;
  const CacheRecord rec{"k1", -0.123456789012345, -7.25e-5, 1700000000};
  CHECK(cache_roundtrip(rec, tmp.path()) == rec);
}

TEST_CASE("corrupt lines are skipped on load") {
  testutil::TempDir tmp;
  {
    ScoreCache cache(tmp.path());
    cache.insert({"a", -1.0, -2.0, 1});
    cache.insert({"b", -3.0, -4.0, 2});
    cache.insert({"c", -5.0, -6.0, 3});
  }
  auto lines = read_lines(tmp.path() / "scores.jsonl");
  REQUIRE(lines.size() == 3);
  lines[1] = lines[1].substr(0, lines[1].size() / 2);
  {
    std::ofstream out(tmp.path() / "scores.jsonl", std::ios::trunc);
    for (const auto& l : lines) out << l << "\n";
  }
  ScoreCache cache(tmp.path());
  CHECK(cache.size() == 2);
  CHECK(cache.skipped_lines() == 1);
  CHECK(cache.lookup("a")->yes_loglik == -1.0);
  CHECK_FALSE(cache.lookup("b").has_value());
  CHECK(cache.lookup("c")->no_loglik == -6.0);
}

TEST_CASE("insert is idempotent per key and compact keeps first-insertion order") {
  testutil::TempDir tmp;
  ScoreCache cache(tmp.path());
  cache.insert({"z", -1.0, -2.0, 1});
  cache.insert({"a", -3.0, -4.0, 2});
  cache.insert({"z", -9.0, -9.0, 3});
  CHECK(cache.size() == 2);
  CHECK(cache.lookup("z")->yes_loglik == -1.0);
  CHECK(read_lines(cache.file()).size() == 2);

  // duplicate lines written by another process collapse on compaction
  {
    std::ofstream out(cache.file(), std::ios::app);
    out << read_lines(cache.file()).front() << "\n";
  }
  ScoreCache reloaded(tmp.path());
  CHECK(read_lines(reloaded.file()).size() == 3);
  reloaded.compact();
  const auto lines = read_lines(reloaded.file());
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].find("\"z\"") != std::string::npos);
  CHECK(lines[1].find("\"a\"") != std::string::npos);
  CHECK(ScoreCache(tmp.path()).size() == 2);
}

TEST_CASE("lookups stay fast with ten thousand records") {
  testutil::TempDir tmp;
  {
    ScoreCache cache(tmp.path());
    for (int i = 0; i < 10000; ++i) cache.insert({"key-" + std::to_string(i), -i * 1e-3, -1.0, i});
  }
  ScoreCache cache(tmp.path());
  REQUIRE(cache.size() == 10000);

  auto time_lookups = [&](int n) {
    const auto t0 = std::chrono::steady_clock::now();
    int found = 0;
    for (int r = 0; r < 20; ++r) {
      for (int i = 0; i < n; ++i) found += cache.lookup("key-" + std::to_string(i * (10000 / n))).has_value();
    }
    CHECK(found == 20 * n);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  // per-lookup cost must not grow with position in the file
  const double first = time_lookups(100) / 100.0;
  const double all = time_lookups(10000) / 10000.0;
  CHECK(all < first * 20 + 1e-6);
  CHECK(cache.lookup("key-9999")->yes_loglik == doctest::Approx(-9.999));
}

TEST_CASE("concurrent readers and writers") {
  testutil::TempDir tmp;
  ScoreCache cache(tmp.path());
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 200; ++i) {
        const std::string key = "t" + std::to_string(t) + "-" + std::to_string(i);
        cache.insert({key, -1.0 * i, -2.0, 0});
        CHECK(cache.lookup(key).has_value());
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(cache.size() == 800);
  CHECK(ScoreCache(tmp.path()).size() == 800);
}
