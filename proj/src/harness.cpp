#include "sgame/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "sgame/cache.hpp"
#include "sgame/dataset.hpp"
#include "sgame/error.hpp"
#include "sgame/hash.hpp"
#include "sgame/margin.hpp"
#include "sgame/probe.hpp"

namespace sgame {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kScoresFile = "scores.jsonl";
constexpr const char* kManifestFile = "manifest.json";

std::atomic<Backend*> g_backend_override{nullptr};

struct ScoredCandidate {
  std::string text;
  double gen_loglik = 0.0;
  ProbeScore score;
};

struct ScoredItem {
  std::string id;
  Dataset dataset = Dataset::kCustom;
  std::optional<std::size_t> gold;
  std::vector<std::string> correct_refs;
  std::vector<std::string> incorrect_refs;
  std::vector<ScoredCandidate> candidates;
  ScoredCandidate fallback;
};

// ------------------------------------------------------------------ files

void write_file(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw ConfigError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("output directory " + dir.string() + " is not writable");
}

json load_manifest(const fs::path& dir) {
  const fs::path p = dir / kManifestFile;
  if (!fs::exists(p)) throw DataError("no " + std::string(kManifestFile) + " in " + dir.string() + "; run score first");
  try {
    return json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw IntegrityError(p.string() + " is not valid JSON: " + e.what());
  }
}

void save_manifest(const fs::path& dir, const json& manifest) {
  write_file(dir / kManifestFile, manifest.dump(2) + "\n");
}

// Fails closed if `name` is missing or differs from the hash the manifest recorded.
void verify_file(const fs::path& dir, const json& manifest, const std::string& name) {
  const auto& files = manifest.value("files", json::object());
  if (!files.contains(name)) throw IntegrityError(name + " is not listed in the run manifest");
  const fs::path p = dir / name;
  if (!fs::exists(p)) throw IntegrityError(name + " is listed in the run manifest but missing");
  if (sha256_file(p) != files.at(name).get<std::string>()) {
    throw IntegrityError(name + " does not match the hash recorded in the run manifest");
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string opt_fmt(const std::optional<double>& v, const char* f = "%.2f") {
  return v ? fmt(f, *v) : std::string("-");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ----------------------------------------------------------- scores file

json raw_json(const RawProbeResult& r) { return json::array({r.yes_loglik, r.no_loglik}); }

RawProbeResult raw_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json candidate_json(const ScoredCandidate& c, bool with_gen) {
  json j;
  j["text"] = c.text;
  if (with_gen) j["gen_loglik"] = c.gen_loglik;
  j["h"] = c.score.h;
  j["s"] = c.score.s;
  j["raw_h"] = raw_json(c.score.raw_h);
  j["raw_s"] = raw_json(c.score.raw_s);
  return j;
}

ScoredCandidate candidate_from(const json& j) {
  ScoredCandidate c;
  c.text = j.at("text").get<std::string>();
  c.gen_loglik = j.value("gen_loglik", 0.0);
  c.score.h = j.at("h").get<double>();
  c.score.s = j.at("s").get<double>();
  c.score.raw_h = raw_from(j.at("raw_h"));
  c.score.raw_s = raw_from(j.at("raw_s"));
  return c;
}

std::string item_line(const ScoredItem& item, CandidateOrigin origin) {
  json j;
  j["id"] = item.id;
  j["dataset"] = std::string(to_string(item.dataset));
  j["origin"] = std::string(to_string(origin));
  j["gold"] = item.gold ? json(*item.gold) : json(nullptr);
  j["correct_answers"] = item.correct_refs;
  j["incorrect_answers"] = item.incorrect_refs;
  json cands = json::array();
  for (const auto& c : item.candidates) cands.push_back(candidate_json(c, true));
  j["candidates"] = std::move(cands);
  j["fallback"] = candidate_json(item.fallback, false);
  return j.dump();
}

std::vector<ScoredItem> load_scores(const fs::path& path) {
  std::vector<ScoredItem> items;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      ScoredItem item;
      item.id = j.at("id").get<std::string>();
      auto d = parse_dataset(j.at("dataset").get<std::string>());
      if (!d) throw std::invalid_argument("unknown dataset");
      item.dataset = *d;
      if (!j.at("gold").is_null()) item.gold = j.at("gold").get<std::size_t>();
      item.correct_refs = j.at("correct_answers").get<std::vector<std::string>>();
      item.incorrect_refs = j.at("incorrect_answers").get<std::vector<std::string>>();
      for (const auto& c : j.at("candidates")) item.candidates.push_back(candidate_from(c));
      item.fallback = candidate_from(j.at("fallback"));
      if (item.candidates.empty()) throw std::invalid_argument("no candidates");
      items.push_back(std::move(item));
    } catch (const std::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return items;
}

// ------------------------------------------------------------- selection

void mark_outcome(ItemRecord& rec, const ScoredItem& item, const BleuConfig& bleu_cfg) {
  if (item.dataset == Dataset::kTruthfulQa) {
    rec.bleu_acc = bleu_acc(rec.selected_text, item.correct_refs, item.incorrect_refs, bleu_cfg);
  } else if (item.gold) {
    rec.correct = !rec.is_fallback && rec.selected_index && *rec.selected_index == *item.gold;
  }
}

CandidateSet scored_set(const ScoredItem& item, bool include_safe) {
  CandidateSet set;
  for (const auto& c : item.candidates) set.items.push_back(Candidate{c.text, c.score});
  set.reference_fallback = Candidate{item.fallback.text, item.fallback.score};
  if (include_safe) set = inject_fallback(std::move(set), item.fallback.text);
  return set;
}

ItemRecord sg_record(const ScoredItem& item, const GameConfig& game, bool include_safe, const BleuConfig& bleu_cfg,
                     json* detail) {
  const CandidateSet set = scored_set(item, include_safe);
  const MarginSet margins = build_margins(set);
  const Selection sel = select(margins, game);
  const GameSolution& sol = sel.solution;
  GameConfig hard = game;
  hard.penalty = Penalty::kHardcap;

  ItemRecord rec;
  rec.item_id = item.id;
  rec.is_fallback = sel.is_fallback;
  if (sel.index) {
    rec.selected_index = *sel.index;
    rec.selected_text = set.items[*sel.index].text;
  } else {
    rec.selected_text = item.fallback.text;
    rec.is_fallback = true;
  }
  rec.feasible = sol.feasible;
  rec.mu = sol.mu;
  rec.lambda = sol.lambda;
  rec.objective = sol.objective;
  rec.hardcap_objective = solve_hardcap(margins, hard).objective;
  mark_outcome(rec, item, bleu_cfg);
  if (detail) {
    (*detail)["pi"] = sol.pi;
    (*detail)["expected_lift"] = sol.expected_lift;
    (*detail)["expected_risk"] = sol.expected_risk;
  }
  return rec;
}

ItemRecord baseline_record(const ScoredItem& item, Method method, const EquilibriumConfig& er,
                           const BleuConfig& bleu_cfg) {
  SelectorScores scores;
  for (const auto& c : item.candidates) {
    scores.gen_loglik.push_back(c.gen_loglik);
    scores.disc_correct.push_back(c.score.h);
  }
  const std::size_t idx = select_baseline(method, scores, er);
  ItemRecord rec;
  rec.item_id = item.id;
  rec.selected_index = idx;
  rec.selected_text = item.candidates[idx].text;
  mark_outcome(rec, item, bleu_cfg);
  return rec;
}

json record_json(const ItemRecord& r, std::string_view method, const json& detail) {
  json j;
  j["id"] = r.item_id;
  j["method"] = std::string(method);
  j["selected_index"] = r.selected_index ? json(*r.selected_index) : json(nullptr);
  j["selected_text"] = r.selected_text;
  j["is_fallback"] = r.is_fallback;
  j["correct"] = r.correct ? json(*r.correct) : json(nullptr);
  j["bleu_acc"] = r.bleu_acc ? json(*r.bleu_acc) : json(nullptr);
  if (r.feasible) {
    j["feasible"] = *r.feasible;
    j["mu"] = *r.mu;
    j["lambda"] = *r.lambda;
    j["objective"] = *r.objective;
    j["hardcap_objective"] = *r.hardcap_objective;
    for (const auto& [k, v] : detail.items()) j[k] = v;
  }
  return j;
}

ItemRecord record_from(const json& j) {
  ItemRecord r;
  r.item_id = j.at("id").get<std::string>();
  if (!j.at("selected_index").is_null()) r.selected_index = j.at("selected_index").get<std::size_t>();
  r.selected_text = j.at("selected_text").get<std::string>();
  r.is_fallback = j.at("is_fallback").get<bool>();
  if (!j.at("correct").is_null()) r.correct = j.at("correct").get<bool>();
  if (!j.at("bleu_acc").is_null()) r.bleu_acc = j.at("bleu_acc").get<int>();
  if (j.contains("feasible")) {
    r.feasible = j.at("feasible").get<bool>();
    r.mu = j.at("mu").get<double>();
    r.lambda = j.at("lambda").get<double>();
    r.objective = j.at("objective").get<double>();
    r.hardcap_objective = j.at("hardcap_objective").get<double>();
  }
  return r;
}

std::string select_file(Method m) { return "select_" + std::string(to_string(m)) + ".jsonl"; }

std::optional<double> headline(const EvalReport& r) { return r.bleu_acc ? r.bleu_acc : r.accuracy; }

std::unique_ptr<Backend> owned_backend(const RunConfig& config, Backend*& use) {
  if (Backend* b = g_backend_override.load()) {
    use = b;
    return nullptr;
  }
  auto owned = make_backend(config.backend);
  use = owned.get();
  return owned;
}

std::vector<ScoredItem> scores_for(const RunConfig& config, json& manifest) {
  manifest = load_manifest(config.out_dir);
  verify_file(config.out_dir, manifest, kScoresFile);
  return load_scores(config.out_dir / kScoresFile);
}

}  // namespace

void set_backend_override(Backend* backend) { g_backend_override.store(backend); }

// ------------------------------------------------------------------ score

void cmd_score(const RunConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  const fs::path tpl_path = config.templates.empty() ? default_template_manifest() : config.templates;
  const TemplateSet templates = TemplateSet::load(tpl_path);
  for (ProbeKind k : {ProbeKind::kHelpfulness, ProbeKind::kSafety, ProbeKind::kGenerator}) {
    if (!templates.contains(config.dataset, k)) {
      throw ConfigError("template manifest has no " + std::string(to_string(k)) + " template for " +
                        std::string(to_string(config.dataset)));
    }
  }
  const ProbeTemplate& help = templates.get(config.dataset, ProbeKind::kHelpfulness);
  const ProbeTemplate& safety = templates.get(config.dataset, ProbeKind::kSafety);
  const ProbeTemplate& gen = templates.get(config.dataset, ProbeKind::kGenerator);
  ensure_out_dir(config.out_dir);

  Corpus corpus = load_corpus(config.dataset_path, config.dataset);
  if (config.filter_unambiguous) {
    const BleuConfig bcfg = config.bleu;
    corpus = filter_unambiguous(corpus, [&](const std::string& c, const std::vector<std::string>& good,
                                            const std::vector<std::string>& bad) { return bleu_acc(c, good, bad, bcfg); });
  }

  Backend* backend = nullptr;
  auto owned = owned_backend(config, backend);
  std::unique_ptr<ScoreCache> cache;
  if (!config.backend.cache_dir.empty()) cache = std::make_unique<ScoreCache>(config.backend.cache_dir);
  ScoringClient client(*backend, config.backend, cache.get());

  std::string out;
  for (std::size_t n = 0; n < corpus.items.size(); ++n) {
    const QAItem& qa = corpus.items[n];
    try {
      const std::string gen_prompt = render_probe(gen, qa.question, "", qa.options);
      std::vector<std::string> pool;
      if (is_multiple_choice(qa.dataset)) {
        pool = qa.options;
      } else {
        pool = client.generate(gen_prompt, config.gen, config.k, config.seed + n);
      }
      const CandidateSet set = assemble_candidates(qa, pool, config.fallback, false);

      std::vector<std::string> prompts;
      prompts.reserve(2 * (pool.size() + 1));
      for (const auto& text : pool) {
        prompts.push_back(render_probe(help, qa.question, text, qa.options));
        prompts.push_back(render_probe(safety, qa.question, text, qa.options));
      }
      prompts.push_back(render_probe(help, qa.question, config.fallback, qa.options));
      prompts.push_back(render_probe(safety, qa.question, config.fallback, qa.options));
      const auto raw = client.logprob_pairs(prompts);

      std::vector<std::string> completions;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (is_multiple_choice(qa.dataset)) {
          completions.push_back(std::string(" ") + static_cast<char>('A' + i));
        } else {
          completions.push_back(" " + pool[i]);
        }
      }
      const auto gen_ll = client.completion_logliks(gen_prompt, completions);

      ScoredItem item;
      item.id = qa.id;
      item.dataset = qa.dataset;
      item.gold = qa.gold_index;
      item.correct_refs = qa.correct_refs;
      item.incorrect_refs = qa.incorrect_refs;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        item.candidates.push_back(
            {pool[i], gen_ll[i], make_probe_score(raw[2 * i], raw[2 * i + 1], safety.yes_means_risk())});
      }
      item.fallback = {config.fallback, 0.0,
                       make_probe_score(raw[2 * pool.size()], raw[2 * pool.size() + 1], safety.yes_means_risk())};
      out += item_line(item, set.origin);
      out += '\n';
    } catch (const CacheError&) {
      throw;
    } catch (const ScoringError&) {
      throw;
    } catch (const BackendError& e) {
      throw ScoringError(qa.id, e.what());
    } catch (const InvalidScoreError& e) {
      throw InvalidScoreError("item '" + qa.id + "': " + e.what());
    }
  }

  const fs::path scores_path = config.out_dir / kScoresFile;
  write_file(scores_path, out);

  json manifest;
  manifest["tool_version"] = kToolVersion;
  manifest["commands"]["score"] = config_snapshot(config);
  json corpus_j;
  corpus_j["path"] = config.dataset_path.generic_string();
  corpus_j["sha256"] = sha256_file(config.dataset_path);
  corpus_j["dataset"] = std::string(to_string(config.dataset));
  corpus_j["lines"] = corpus.manifest.lines;
  corpus_j["loaded"] = corpus.manifest.loaded;
  corpus_j["malformed"] = corpus.manifest.malformed;
  corpus_j["padded"] = corpus.manifest.padded;
  corpus_j["errors"] = corpus.manifest.errors;
  if (corpus.manifest.filter) {
    corpus_j["filter"] = {{"rule", corpus.manifest.filter->rule},
                          {"retained", corpus.manifest.filter->retained},
                          {"total", corpus.manifest.filter->total}};
  }
  manifest["corpus"] = corpus_j;
  manifest["dev_slice"] = config.dev_slice;
  manifest["templates"] = {{"manifest", tpl_path.generic_string()},
                           {"helpfulness", help.name()},
                           {"safety", safety.name()},
                           {"generator", gen.name()}};
  manifest["bleu_tokenization"] = "lowercase, whitespace split, punctuation split";
  manifest["files"] = {{kScoresFile, sha256_file(scores_path)}};
  const auto st = client.stats();
  manifest["runtime"]["score"] = {{"backend_calls", st.backend_calls},
                                  {"cache_hits", st.cache_hits},
                                  {"retries", st.retries},
                                  {"wall_clock_seconds", seconds_since(t0)}};
  save_manifest(config.out_dir, manifest);
}

// ----------------------------------------------------------------- select

void cmd_select(const RunConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  json manifest;
  const auto items = scores_for(config, manifest);
  const bool include_safe = config.safe_candidate();

  json& files = manifest["files"];
  for (auto it = files.begin(); it != files.end();) {
    if (it.key().rfind("select_", 0) == 0) {
      it = files.erase(it);
    } else {
      ++it;
    }
  }
  std::vector<std::string> names;
  for (Method m : config.methods) {
    std::string out;
    for (const auto& item : items) {
      json detail = json::object();
      const ItemRecord rec = m == Method::kSG ? sg_record(item, config.game, include_safe, config.bleu, &detail)
                                              : baseline_record(item, m, config.er, config.bleu);
      out += record_json(rec, to_string(m), detail).dump();
      out += '\n';
    }
    const std::string name = select_file(m);
    write_file(config.out_dir / name, out);
    files[name] = sha256_file(config.out_dir / name);
    names.emplace_back(to_string(m));
  }
  manifest["methods"] = names;
  manifest["commands"]["select"] = config_snapshot(config);
  manifest["runtime"]["select"] = {{"wall_clock_seconds", seconds_since(t0)}};
  save_manifest(config.out_dir, manifest);
}

// ----------------------------------------------------------------- ablate

std::vector<AblationRow> run_ablation(const RunConfig& config) {
  if (config.sweep.empty()) throw ConfigError("ablation needs at least one sweep axis");
  config.validate();
  json manifest;
  const auto items = scores_for(config, manifest);
  if (items.empty()) throw DataError("scores file has no items");

  auto axis = [](const auto& values, auto base) {
    using V = std::decay_t<decltype(base)>;
    return values.empty() ? std::vector<V>{base} : std::vector<V>(values.begin(), values.end());
  };
  const auto Ts = axis(config.sweep.T, config.game.T);
  const auto betas = axis(config.sweep.beta, config.game.beta);
  const auto kappas = axis(config.sweep.kappa, config.game.kappa);
  const auto pens = axis(config.sweep.penalty, config.game.penalty);
  const auto safes = axis(config.sweep.include_safe, config.safe_candidate());

  std::vector<ItemRecord> orig_rows;
  for (const auto& item : items) orig_rows.push_back(baseline_record(item, Method::kG, config.er, config.bleu));
  const EvalReport original = aggregate("Original", orig_rows);

  std::vector<AblationRow> rows;
  for (double T : Ts) {
    for (double beta : betas) {
      for (double kappa : kappas) {
        for (Penalty p : pens) {
          for (bool safe : safes) {
            AblationRow r;
            r.T = T;
            r.beta = beta;
            r.kappa = kappa;
            r.penalty = p;
            r.include_safe = safe;
            r.original = original;
            rows.push_back(std::move(r));
          }
        }
      }
    }
  }

  auto run_cell = [&](AblationRow& row) {
    GameConfig g = config.game;
    g.T = row.T;
    g.beta = row.beta;
    g.kappa = row.kappa;
    g.penalty = row.penalty;
    g.validate();
    std::vector<ItemRecord> recs;
    recs.reserve(items.size());
    for (const auto& item : items) recs.push_back(sg_record(item, g, row.include_safe, config.bleu, nullptr));
    row.sg = aggregate("SG", recs);
    row.delta_vs_original = headline(row.sg).value_or(0.0) - headline(original).value_or(0.0);
  };

  if (config.parallel_cells && rows.size() > 1) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    const std::size_t workers = std::min<std::size_t>(rows.size(), std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
          try {
            run_cell(rows[i]);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  } else {
    for (auto& row : rows) run_cell(row);
  }
  return rows;
}

void cmd_ablate(const RunConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = run_ablation(config);
  json manifest = load_manifest(config.out_dir);
  const bool free_form = !rows.empty() && rows.front().sg.bleu_acc.has_value();
  const std::string metric = free_form ? "BLEU-Acc" : "Accuracy";

  std::string csv = "T,beta,kappa,penalty,safe_candidate," + std::string(free_form ? "bleu_acc_sg" : "accuracy_sg") +
                    "," + (free_form ? "bleu_acc_original" : "accuracy_original") +
                    ",fallback_rate,feasible_rate,avg_mu_over_beta,avg_hardcap_objective,delta_vs_original\n";
  std::ostringstream txt;
  char line[512];
  std::snprintf(line, sizeof line, "%-10s %-8s %-8s %-8s %-5s %12s %12s %9s %9s %8s %10s %8s\n", "T", "beta", "kappa",
                "penalty", "safe", (metric + " SG").c_str(), (metric + " Orig").c_str(), "Fallback", "Feasible",
                "mu/beta", "HardcapObj", "Delta");
  txt << line;
  for (const auto& r : rows) {
    const auto sg_h = headline(r.sg);
    const auto or_h = headline(r.original);
    std::snprintf(line, sizeof line, "%-10g %-8g %-8g %-8s %-5s %12s %12s %9s %9s %8s %10s %+8.2f\n", r.T, r.beta,
                  r.kappa, std::string(to_string(r.penalty)).c_str(), r.include_safe ? "on" : "off",
                  opt_fmt(sg_h).c_str(), opt_fmt(or_h).c_str(), fmt("%.2f", r.sg.fallback_rate).c_str(),
                  opt_fmt(r.sg.feasible_rate).c_str(), opt_fmt(r.sg.avg_mu_over_beta, "%.3f").c_str(),
                  opt_fmt(r.sg.avg_hardcap_objective, "%.4f").c_str(), r.delta_vs_original);
    txt << line;
    csv += fmt("%.17g", r.T) + "," + fmt("%.17g", r.beta) + "," + fmt("%.17g", r.kappa) + "," +
           std::string(to_string(r.penalty)) + "," + (r.include_safe ? "on" : "off") + "," +
           opt_fmt(sg_h, "%.6f") + "," + opt_fmt(or_h, "%.6f") + "," + fmt("%.6f", r.sg.fallback_rate) + "," +
           opt_fmt(r.sg.feasible_rate, "%.6f") + "," + opt_fmt(r.sg.avg_mu_over_beta, "%.6f") + "," +
           opt_fmt(r.sg.avg_hardcap_objective, "%.9f") + "," + fmt("%.6f", r.delta_vs_original) + "\n";
  }
  write_file(config.out_dir / "ablation.txt", txt.str());
  write_file(config.out_dir / "ablation.csv", csv);
  manifest["files"]["ablation.txt"] = sha256_file(config.out_dir / "ablation.txt");
  manifest["files"]["ablation.csv"] = sha256_file(config.out_dir / "ablation.csv");
  manifest["commands"]["ablate"] = config_snapshot(config);
  manifest["runtime"]["ablate"] = {{"wall_clock_seconds", seconds_since(t0)}, {"cells", rows.size()}};
  save_manifest(config.out_dir, manifest);
}

// ----------------------------------------------------------------- report

void cmd_report(const RunConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  json manifest = load_manifest(config.out_dir);
  const std::string recorded = manifest.at("corpus").at("sha256").get<std::string>();
  if (!config.dataset_path.empty()) {
    if (!fs::exists(config.dataset_path)) throw DataError("cannot read corpus " + config.dataset_path.string());
    if (sha256_file(config.dataset_path) != recorded) {
      throw IntegrityError("corpus " + config.dataset_path.string() + " does not match the scored corpus");
    }
  }
  verify_file(config.out_dir, manifest, kScoresFile);
  if (!manifest.contains("methods") || manifest.at("methods").empty()) throw DataError("no selections; run select first");

  std::vector<EvalReport> reports;
  for (const auto& name : manifest.at("methods")) {
    const auto m = parse_method(name.get<std::string>());
    if (!m) throw IntegrityError("manifest lists unknown method " + name.dump());
    const std::string file = select_file(*m);
    verify_file(config.out_dir, manifest, file);
    std::vector<ItemRecord> rows;
    std::istringstream in(read_file(config.out_dir / file));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        rows.push_back(record_from(json::parse(line)));
      } catch (const std::exception& e) {
        throw DataError(file + ": " + e.what());
      }
    }
    reports.push_back(aggregate(std::string(to_string(*m)), rows));
  }

  const auto& cmd = manifest.at("commands");
  const json& sel = cmd.contains("select") ? cmd.at("select") : cmd.at("score");
  std::ostringstream txt;
  txt << "Safety Game selection report\n";
  txt << "corpus      " << manifest.at("corpus").at("path").get<std::string>() << " (" << recorded << ")\n";
  txt << "dataset     " << manifest.at("corpus").at("dataset").get<std::string>() << ", "
      << manifest.at("corpus").at("loaded").get<std::size_t>() << " items\n";
  txt << "game        penalty=" << sel.at("penalty").get<std::string>() << " T=" << fmt("%g", sel.at("cap_T").get<double>())
      << " beta=" << fmt("%g", sel.at("beta").get<double>()) << " kappa=" << fmt("%g", sel.at("kappa").get<double>())
      << " safe_candidate=" << (sel.at("safe_candidate").get<bool>() ? "on" : "off") << "\n";
  txt << "scores      " << manifest.at("files").at(kScoresFile).get<std::string>() << "\n\n";

  char line[512];
  std::snprintf(line, sizeof line, "%-6s %6s %9s %9s %9s %9s %8s %10s\n", "Method", "Items", "Accuracy", "BLEU-Acc",
                "Fallback", "Feasible", "mu/beta", "HardcapObj");
  txt << line;
  std::string csv =
      "method,items,labeled,accuracy,bleu_acc,fallback_rate,feasible_rate,avg_mu_over_beta,avg_hardcap_objective\n";
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-6s %6zu %9s %9s %9s %9s %8s %10s\n", r.method.c_str(), r.items,
                  opt_fmt(r.accuracy).c_str(), opt_fmt(r.bleu_acc).c_str(), fmt("%.2f", r.fallback_rate).c_str(),
                  opt_fmt(r.feasible_rate).c_str(), opt_fmt(r.avg_mu_over_beta, "%.3f").c_str(),
                  opt_fmt(r.avg_hardcap_objective, "%.4f").c_str());
    txt << line;
    csv += r.method + "," + std::to_string(r.items) + "," + std::to_string(r.labeled) + "," +
           opt_fmt(r.accuracy, "%.6f") + "," + opt_fmt(r.bleu_acc, "%.6f") + "," + fmt("%.6f", r.fallback_rate) + "," +
           opt_fmt(r.feasible_rate, "%.6f") + "," + opt_fmt(r.avg_mu_over_beta, "%.6f") + "," +
           opt_fmt(r.avg_hardcap_objective, "%.9f") + "\n";
  }

  json& files = manifest["files"];
  files.erase("rewards_hist.csv");
  if (!config.rewards.empty()) {
    const auto records = load_rewards(config.rewards);
    std::map<std::string, std::vector<double>> by_method;
    for (const auto& r : records) by_method[r.method].push_back(r.score);
    txt << "\nReward distribution (threshold " << fmt("%g", config.reward_threshold) << ")\n";
    std::snprintf(line, sizeof line, "%-8s %6s %10s %10s %10s\n", "Method", "N", "Mean", "Skewness", "LeftTail");
    txt << line;
    std::string hist = "method,bin,lo,hi,count\n";
    for (const auto& [method, values] : by_method) {
      const RewardSummary s = reward_summary(values, config.reward_threshold);
      std::snprintf(line, sizeof line, "%-8s %6zu %10.4f %10.4f %10.4f\n", method.c_str(), s.count, s.mean, s.skewness,
                    s.left_tail_mass);
      txt << line;
      const double width = (s.hi - s.lo) / static_cast<double>(s.histogram.size());
      for (std::size_t b = 0; b < s.histogram.size(); ++b) {
        hist += method + "," + std::to_string(b) + "," + fmt("%.9g", s.lo + width * static_cast<double>(b)) + "," +
                fmt("%.9g", s.lo + width * static_cast<double>(b + 1)) + "," + std::to_string(s.histogram[b]) + "\n";
      }
    }
    write_file(config.out_dir / "rewards_hist.csv", hist);
    files["rewards_hist.csv"] = sha256_file(config.out_dir / "rewards_hist.csv");
  }

  write_file(config.out_dir / "report.txt", txt.str());
  write_file(config.out_dir / "report.csv", csv);
  files["report.txt"] = sha256_file(config.out_dir / "report.txt");
  files["report.csv"] = sha256_file(config.out_dir / "report.csv");
  manifest["commands"]["report"] = config_snapshot(config);
  manifest["runtime"]["report"] = {{"wall_clock_seconds", seconds_since(t0)}};
  save_manifest(config.out_dir, manifest);
}

}  // namespace sgame
