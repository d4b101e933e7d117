#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "sgame/error.hpp"
#include "sgame/harness.hpp"

using namespace sgame;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json manifest_without_runtime(const fs::path& dir) {
  json m = json::parse(slurp(dir / "manifest.json"));
  m.erase("runtime");
  return m;
}

RunConfig smoke_config(const fs::path& out) {
  RunConfig c;
  c.dataset_path = testutil::data("smoke/corpus.jsonl");
  c.dataset = Dataset::kSafetyBench;
  c.templates = testutil::template_manifest();
  c.backend.kind = BackendKind::kFixture;
  c.backend.fixture_path = testutil::data("smoke/fixture.json");
  c.out_dir = out;
  return c;
}

RunConfig tqa_config(const fs::path& out) {
  RunConfig c = smoke_config(out);
  c.dataset_path = testutil::data("tqa/corpus.jsonl");
  c.dataset = Dataset::kTruthfulQa;
  c.backend.fixture_path = testutil::data("tqa/fixture.json");
  c.fallback = "I cannot provide a response to that request.";
  c.k = 4;
  return c;
}

void pipeline(const RunConfig& c) {
  cmd_score(c);
  cmd_select(c);
  cmd_report(c);
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::vector<json> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SGAME_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("the smoke pipeline is byte-for-byte repeatable") {
  testutil::TempDir tmp;
  const fs::path out = tmp.path() / "out";
  const RunConfig c = smoke_config(out);
  pipeline(c);
  const fs::path first = tmp.path() / "first";
  fs::copy(out, first, fs::copy_options::recursive);
  fs::remove_all(out);
  pipeline(c);

  std::vector<std::string> files{"scores.jsonl", "report.txt", "report.csv"};
  for (const char* m : {"G", "D", "MI", "SC", "ER-G", "ER-D", "SG"}) files.push_back(std::string("select_") + m + ".jsonl");
  for (const auto& f : files) {
    INFO(f);
    REQUIRE(fs::exists(out / f));
    CHECK(slurp(out / f) == slurp(first / f));
  }
  CHECK(manifest_without_runtime(out) == manifest_without_runtime(first));

  const json m = json::parse(slurp(out / "manifest.json"));
  CHECK(m["tool_version"] == kToolVersion);
  CHECK(m["corpus"]["loaded"] == 10);
  CHECK(m["corpus"]["padded"] == 2);
  CHECK(m["files"].contains("select_SG.jsonl"));
  CHECK(m["runtime"]["score"]["backend_calls"].get<int>() > 0);

  const auto sg = read_jsonl(out / "select_SG.jsonl");
  REQUIRE(sg.size() == 10);
  const std::string report = slurp(out / "report.txt");
  CHECK(report.find("SG") != std::string::npos);
  CHECK(report.find("Accuracy") != std::string::npos);
}

TEST_CASE("a warm cache answers a repeated score run without backend calls") {
  testutil::TempDir tmp;
  RunConfig c = smoke_config(tmp.path() / "out");
  c.backend.cache_dir = tmp.path() / "cache";
  cmd_score(c);
  const json cold = json::parse(slurp(c.out_dir / "manifest.json"));
  const std::string scores = slurp(c.out_dir / "scores.jsonl");
  cmd_score(c);
  const json warm = json::parse(slurp(c.out_dir / "manifest.json"));
  CHECK(cold["runtime"]["score"]["backend_calls"].get<int>() > 0);
  CHECK(warm["runtime"]["score"]["backend_calls"] == 0);
  CHECK(warm["runtime"]["score"]["cache_hits"] == cold["runtime"]["score"]["backend_calls"]);
  CHECK(slurp(c.out_dir / "scores.jsonl") == scores);
}

TEST_CASE("a missing template manifest fails before any backend call") {
  testutil::TempDir tmp;
  testutil::FakeBackend backend([](std::string_view, const TokenPair&) { return RawProbeResult{-1.0, -1.0}; });
  set_backend_override(&backend);
  RunConfig c = smoke_config(tmp.path() / "out");
  c.templates = tmp.path() / "nope" / "manifest.json";
  CHECK_THROWS_AS(cmd_score(c), ConfigError);
  CHECK(backend.calls.load() == 0);
  set_backend_override(nullptr);
}

TEST_CASE("backend failures name the item") {
  testutil::TempDir tmp;
  testutil::FakeBackend backend([](std::string_view, const TokenPair&) -> RawProbeResult {
    throw BackendError("boom");
  });
  set_backend_override(&backend);
  try {
    cmd_score(smoke_config(tmp.path() / "out"));
    FAIL("expected a scoring error");
  } catch (const ScoringError& e) {
    CHECK(e.item_id() == "sb-001");
  }
  set_backend_override(nullptr);
  CHECK_FALSE(fs::exists(tmp.path() / "out" / "scores.jsonl"));
}

TEST_CASE("tampered outputs are refused") {
  testutil::TempDir tmp;
  const RunConfig c = smoke_config(tmp.path() / "out");
  pipeline(c);
  SUBCASE("scores") {
    std::ofstream(c.out_dir / "scores.jsonl", std::ios::app) << "\n";
    CHECK_THROWS_AS(cmd_select(c), IntegrityError);
    CHECK_THROWS_AS(cmd_report(c), IntegrityError);
  }
  SUBCASE("a selection file") {
    std::ofstream(c.out_dir / "select_G.jsonl", std::ios::app) << " ";
    CHECK_THROWS_AS(cmd_report(c), IntegrityError);
  }
  SUBCASE("a different corpus") {
    RunConfig other = c;
    other.dataset_path = testutil::data("tqa/corpus.jsonl");
    CHECK_THROWS_AS(cmd_report(other), IntegrityError);
  }
}

TEST_CASE("config parsing") {
  RunConfig c;
  apply_config(c, json{{"methods", "G,SG"}, {"cap_T", "0.25"}, {"beta", 4}, {"penalty", "linear"},
                       {"sweep_T", "0.1,1"}, {"no_safe_candidate", true}, {"kind", "truthfulqa"}});
  CHECK(c.methods == std::vector<Method>{Method::kG, Method::kSG});
  CHECK(c.game.T == 0.25);
  CHECK(c.game.beta == 4.0);
  CHECK(c.game.penalty == Penalty::kLinear);
  CHECK(c.sweep.T == std::vector<double>{0.1, 1.0});
  CHECK_FALSE(c.safe_candidate());

  RunConfig d;
  d.dataset = Dataset::kTruthfulQa;
  CHECK(d.safe_candidate());
  d.dataset = Dataset::kHhh;
  CHECK_FALSE(d.safe_candidate());

  CHECK_THROWS_AS(apply_config(c, json{{"methods", "G,XYZ"}}), ConfigError);
  CHECK_THROWS_AS(apply_config(c, json{{"no_such_key", 1}}), ConfigError);
  CHECK_THROWS_AS(apply_config(c, json{{"beta", "ten"}}), ConfigError);
  CHECK_THROWS_AS(apply_config(c, json{{"penalty", "cubic"}}), ConfigError);

  // snapshot feeds back into the same config
  RunConfig e;
  apply_config(e, config_snapshot(c));
  CHECK(config_snapshot(e) == config_snapshot(c));
}

TEST_CASE("free-form pipeline scores generations and BLEU-Acc") {
  testutil::TempDir tmp;
  const RunConfig c = tqa_config(tmp.path() / "out");
  pipeline(c);
  const auto scores = read_jsonl(c.out_dir / "scores.jsonl");
  REQUIRE(scores.size() == 4);
  // duplicates and empty samples are dropped; the fallback is scored alongside
  for (const auto& s : scores) {
    CHECK(s["origin"] == "generated");
    CHECK(s["fallback"]["text"] == c.fallback);
  }
  CHECK(scores[0]["candidates"].size() == 3);
  CHECK(scores[0]["candidates"][0]["text"] == "It passes through your digestive system.");
  CHECK(scores[0]["candidates"][2]["text"] == "It is excreted within a few days");

  const auto sg = read_jsonl(c.out_dir / "select_SG.jsonl");
  REQUIRE(sg.size() == 4);
  for (const auto& r : sg) CHECK(r.contains("bleu_acc"));
  const std::string report = slurp(c.out_dir / "report.txt");
  CHECK(report.find("BLEU-Acc") != std::string::npos);
}

TEST_CASE("ablation sweeps every cell") {
  testutil::TempDir tmp;
  RunConfig c = smoke_config(tmp.path() / "out");
  cmd_score(c);
  c.sweep.T = {0.1, 1.0, 10.0};
  c.sweep.penalty = {Penalty::kHardcap, Penalty::kLinear, Penalty::kSigmoid};
  c.sweep.include_safe = {false, true};
  const auto rows = run_ablation(c);
  CHECK(rows.size() == 18);
  for (const auto& r : rows) {
    CHECK(r.sg.items == 10);
    CHECK(r.original.method == "Original");
    REQUIRE(r.sg.accuracy.has_value());
    CHECK(r.delta_vs_original == doctest::Approx(*r.sg.accuracy - *r.original.accuracy));
  }
  c.parallel_cells = true;
  const auto par = run_ablation(c);
  REQUIRE(par.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(par[i].T == rows[i].T);
    CHECK(par[i].sg.accuracy == rows[i].sg.accuracy);
  }
  cmd_ablate(c);
  CHECK(fs::exists(c.out_dir / "ablation.csv"));
  CHECK(slurp(c.out_dir / "ablation.txt").find("sigmoid") != std::string::npos);
}

TEST_CASE("command line exit codes") {
  testutil::TempDir tmp;
  const fs::path log = tmp.path() / "log.txt";
  const fs::path out = tmp.path() / "out";
  const std::string common = "--kind safetybench --backend fixture --templates " +
                             testutil::template_manifest().string() + " --out " + out.string();
  const std::string base = common + " --fixture " + testutil::data("smoke/fixture.json").string();
  const std::string dataset = " --dataset " + testutil::data("smoke/corpus.jsonl").string();

  CHECK(run_cli("", log) == 1);
  CHECK(run_cli("score --no-such-flag", log) == 1);
  CHECK(run_cli("score " + base, log) == 1);  // no dataset
  CHECK(run_cli("score " + base + " --dataset " + (tmp.path() / "missing.jsonl").string(), log) == 2);
  CHECK(run_cli("score " + base + dataset + " --cap-T abc", log) == 1);

  REQUIRE(run_cli("score " + base + dataset, log) == 0);
  REQUIRE(run_cli("select " + base + dataset + " --methods G,SG", log) == 0);
  REQUIRE(run_cli("report " + base + dataset, log) == 0);
  CHECK(slurp(log).find("SG") != std::string::npos);

  std::ofstream(out / "scores.jsonl", std::ios::app) << "\n";
  CHECK(run_cli("report " + base + dataset, log) == 4);
  CHECK(slurp(log).find("error:") != std::string::npos);

  const fs::path bad_fixture = tmp.path() / "empty_fixture.json";
  std::ofstream(bad_fixture) << R"({"logprobs":{},"generations":{}})";
  CHECK(run_cli("score " + common + dataset + " --fixture " + bad_fixture.string(), log) == 3);
}
