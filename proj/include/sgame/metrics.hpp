#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sgame {

enum class Smoothing { kNone, kEpsilon };

struct BleuConfig {
  std::size_t max_n = 4;
  Smoothing smoothing = Smoothing::kNone;
  double epsilon = 0.1;  // numerator used for an order with no matches

  void validate() const;
};

/// Lowercases, splits on whitespace and splits every punctuation
/// character into its own token.
std::vector<std::string> bleu_tokenize(std::string_view text);

/// Sentence BLEU against the best single reference. Orders longer than the
/// candidate are skipped; an empty candidate scores 0.
double bleu(std::string_view candidate, std::span<const std::string> references, const BleuConfig& config = {});

/// 1 iff BLEU against the correct refs is strictly larger than against the incorrect refs.
int bleu_acc(std::string_view candidate, std::span<const std::string> correct_refs,
             std::span<const std::string> incorrect_refs, const BleuConfig& config = {});

/// One selection outcome. Optional fields are absent when they do not apply
/// (e.g. no gold label, or a baseline that solves no game).
struct ItemRecord {
  std::string item_id;
  std::optional<std::size_t> selected_index;  // empty when the fallback sits outside the pool
  std::string selected_text;
  bool is_fallback = false;
  std::optional<bool> correct;
  std::optional<int> bleu_acc;
  std::optional<bool> feasible;
  std::optional<double> lambda;
  std::optional<double> mu;
  std::optional<double> objective;
  std::optional<double> hardcap_objective;
};

struct EvalReport {
  std::string method;
  std::size_t items = 0;
  std::size_t labeled = 0;
  std::optional<double> accuracy;  // percent of labeled items
  std::optional<double> bleu_acc;  // percent
  double fallback_rate = 0.0;      // percent
  std::optional<double> feasible_rate;
  std::optional<double> avg_mu_over_beta;
  std::optional<double> avg_hardcap_objective;
  std::vector<ItemRecord> per_item;
};

/// Throws DataError on empty input or duplicate item ids.
EvalReport aggregate(std::string method, std::span<const ItemRecord> rows);

struct RewardSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double skewness = 0.0;  // third standardized moment, population form
  double threshold = 0.0;
  double left_tail_mass = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> histogram;  // equal-width bins over [lo, hi]
};

/// Throws DataError on empty input or non-finite values.
RewardSummary reward_summary(std::span<const double> scores, double threshold, std::size_t bins = 20);

struct RewardRecord {
  std::string item_id;
  std::string method;
  double score = 0.0;
};

/// Reads {"item_id", "method", "score"} lines.
std::vector<RewardRecord> load_rewards(const std::filesystem::path& path);

}  // namespace sgame
