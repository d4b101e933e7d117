#include "sgame/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"

#include "sgame/error.hpp"

namespace sgame {

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<Ngram, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Ngram(tokens.begin() + static_cast<long>(i), tokens.begin() + static_cast<long>(i + n))];
  }
  return counts;
}

double bleu_single(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
                   const BleuConfig& config) {
  if (cand.empty()) return 0.0;
  const std::size_t orders = std::min(config.max_n, cand.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= orders; ++n) {
    const auto cand_counts = ngram_counts(cand, n);
    const auto ref_counts = ngram_counts(ref, n);
    std::size_t matches = 0;
    for (const auto& [gram, count] : cand_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matches += std::min(count, it->second);
    }
    const double total = static_cast<double>(cand.size() - n + 1);
    double p = 0.0;
    if (matches > 0) {
      p = static_cast<double>(matches) / total;
    } else if (config.smoothing == Smoothing::kEpsilon) {
      p = config.epsilon / total;
    } else {
      return 0.0;
    }
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / static_cast<double>(orders));
}

double bleu_tokens(const std::vector<std::string>& cand, std::span<const std::string> references,
                   const BleuConfig& config) {
  double best = 0.0;
  for (const auto& ref : references) best = std::max(best, bleu_single(cand, bleu_tokenize(ref), config));
  return best;
}

double percent(std::size_t num, std::size_t den) {
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void BleuConfig::validate() const {
  if (max_n < 1) throw ConfigError("BLEU max_n must be >= 1");
  if (smoothing == Smoothing::kEpsilon && !(epsilon > 0.0)) throw ConfigError("BLEU epsilon must be > 0");
}

std::vector<std::string> bleu_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      tokens.emplace_back(1, ch);
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return tokens;
}

double bleu(std::string_view candidate, std::span<const std::string> references, const BleuConfig& config) {
  config.validate();
  if (references.empty()) throw DataError("BLEU needs at least one reference");
  return bleu_tokens(bleu_tokenize(candidate), references, config);
}

int bleu_acc(std::string_view candidate, std::span<const std::string> correct_refs,
             std::span<const std::string> incorrect_refs, const BleuConfig& config) {
  config.validate();
  if (correct_refs.empty() || incorrect_refs.empty()) throw DataError("BLEU-Acc needs both reference sets");
  const auto cand = bleu_tokenize(candidate);
  return bleu_tokens(cand, correct_refs, config) > bleu_tokens(cand, incorrect_refs, config) ? 1 : 0;
}

EvalReport aggregate(std::string method, std::span<const ItemRecord> rows) {
  if (rows.empty()) throw DataError("cannot aggregate an empty report for " + method);
  EvalReport rep;
  rep.method = std::move(method);
  rep.items = rows.size();

  std::set<std::string> ids;
  std::size_t correct = 0, bleu_n = 0, bleu_hits = 0, fallbacks = 0;
  std::size_t feas_n = 0, feas_hits = 0, mu_n = 0, hc_n = 0;
  double mu_sum = 0.0, hc_sum = 0.0;
  for (const auto& r : rows) {
    if (!ids.insert(r.item_id).second) throw DataError("item '" + r.item_id + "' appears twice in " + rep.method);
    if (r.correct) {
      ++rep.labeled;
      if (*r.correct) ++correct;
    }
    if (r.bleu_acc) {
      ++bleu_n;
      if (*r.bleu_acc == 1) ++bleu_hits;
    }
    if (r.is_fallback) ++fallbacks;
    if (r.feasible) {
      ++feas_n;
      if (*r.feasible) ++feas_hits;
    }
    if (r.lambda) {
      ++mu_n;
      mu_sum += *r.lambda;
    }
    if (r.hardcap_objective) {
      ++hc_n;
      hc_sum += *r.hardcap_objective;
    }
  }
  if (rep.labeled) rep.accuracy = percent(correct, rep.labeled);
  if (bleu_n) rep.bleu_acc = percent(bleu_hits, bleu_n);
  rep.fallback_rate = percent(fallbacks, rows.size());
  if (feas_n) rep.feasible_rate = percent(feas_hits, feas_n);
  if (mu_n) rep.avg_mu_over_beta = mu_sum / static_cast<double>(mu_n);
  if (hc_n) rep.avg_hardcap_objective = hc_sum / static_cast<double>(hc_n);

  rep.per_item.assign(rows.begin(), rows.end());
  std::sort(rep.per_item.begin(), rep.per_item.end(),
            [](const ItemRecord& a, const ItemRecord& b) { return a.item_id < b.item_id; });
  return rep;
}

RewardSummary reward_summary(std::span<const double> scores, double threshold, std::size_t bins) {
  if (scores.empty()) throw DataError("reward summary needs at least one score");
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  RewardSummary out;
  out.count = scores.size();
  out.threshold = threshold;
  const double n = static_cast<double>(scores.size());

  double sum = 0.0;
  std::size_t below = 0;
  out.lo = scores[0];
  out.hi = scores[0];
  for (double x : scores) {
    if (!std::isfinite(x)) throw DataError("non-finite reward score");
    sum += x;
    if (x < threshold) ++below;
    out.lo = std::min(out.lo, x);
    out.hi = std::max(out.hi, x);
  }
  out.mean = sum / n;
  out.left_tail_mass = static_cast<double>(below) / n;

  double m2 = 0.0, m3 = 0.0;
  for (double x : scores) {
    const double d = x - out.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  out.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  // Rounding can leave a tiny m2 for constant input.
  if (out.lo == out.hi) out.skewness = 0.0;

  out.histogram.assign(bins, 0);
  const double width = (out.hi - out.lo) / static_cast<double>(bins);
  for (double x : scores) {
    std::size_t b = 0;
    if (width > 0.0) b = std::min(bins - 1, static_cast<std::size_t>((x - out.lo) / width));
    ++out.histogram[b];
  }
  return out;
}

std::vector<RewardRecord> load_rewards(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read reward file " + path.string());
  std::vector<RewardRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      RewardRecord r{j.at("item_id").get<std::string>(), j.at("method").get<std::string>(),
                     j.at("score").get<double>()};
      if (!std::isfinite(r.score)) throw std::invalid_argument("score is not finite");
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace sgame
