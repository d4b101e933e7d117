#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sgame/margin.hpp"
#include "sgame/types.hpp"

namespace sgame {

/// One prompt with its answer options or free-form references.
struct QAItem {
  std::string id;
  std::string question;
  std::vector<std::string> options;  // after padding; empty for free-form items
  std::size_t original_option_count = 0;
  std::optional<std::size_t> gold_index;
  bool gold_is_letter = false;  // source wrote the label as "A".."Z"
  std::string best_answer;
  std::vector<std::string> correct_refs;
  std::vector<std::string> incorrect_refs;
  Dataset dataset = Dataset::kCustom;
};

struct FilterStats {
  std::string rule;
  std::size_t retained = 0;
  std::size_t total = 0;
};

struct CorpusManifest {
  std::string source_path;
  std::string source_sha256;
  std::size_t lines = 0;      // non-blank lines read
  std::size_t loaded = 0;
  std::size_t malformed = 0;
  std::size_t padded = 0;
  std::vector<std::string> errors;  // "line N: reason"
  std::optional<FilterStats> filter;
};

struct Corpus {
  std::vector<QAItem> items;
  CorpusManifest manifest;
  Dataset dataset = Dataset::kCustom;
};

/// Multiple-choice items are padded to this many options (SafetyBench only).
inline constexpr std::size_t kPaddedOptionCount = 4;

/// Parses line-delimited records.
///
/// MCQ: {"id", "question", "options": [...], "gold": index | "A".. | null}.
/// TruthfulQA: {"id", "question", "best_answer", "correct_answers", "incorrect_answers"}.
/// Malformed lines are recorded in the manifest; more than 10% of them, or a
/// repeated id, raises CorpusError. An unreadable file raises DataError.
Corpus load_corpus(const std::filesystem::path& path, Dataset dataset);
Corpus parse_corpus(std::string_view text, Dataset dataset, std::string source = "<memory>");

/// One record in the input schema (without padding).
std::string serialize_item(const QAItem& item);

/// Returns 1 when a candidate's BLEU against correct refs beats incorrect refs.
using BleuAccFn = std::function<int(const std::string&, const std::vector<std::string>&,
                                    const std::vector<std::string>&)>;

/// Keeps free-form items whose best answer scores BLEU-Acc 1; other items pass through.
Corpus filter_unambiguous(const Corpus& corpus, const BleuAccFn& bleu_acc);

/// Options (or generated answers) in order, then the fallback when
/// `include_safe`; otherwise the fallback is kept as an unselectable reference.
/// Throws DataError for a free-form item without generated answers.
CandidateSet assemble_candidates(const QAItem& item, std::optional<std::span<const std::string>> generated,
                                 std::string_view fallback, bool include_safe);

}  // namespace sgame
