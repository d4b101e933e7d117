#include "sgame/dataset.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "sgame/error.hpp"
#include "sgame/hash.hpp"

namespace sgame {

namespace {

using nlohmann::json;

std::vector<std::string> string_list(const json& j, const char* field) {
  const json& v = j.at(field);
  if (!v.is_array()) throw std::invalid_argument(std::string(field) + " is not a list");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& s : v) out.push_back(s.get<std::string>());
  return out;
}

std::string required_text(const json& j, const char* field) {
  std::string s = j.at(field).get<std::string>();
  if (s.empty()) throw std::invalid_argument(std::string(field) + " is empty");
  return s;
}

QAItem parse_mcq(const json& j, Dataset dataset, bool& padded) {
  QAItem item;
  item.dataset = dataset;
  item.id = required_text(j, "id");
  item.question = required_text(j, "question");
  item.options = string_list(j, "options");
  item.original_option_count = item.options.size();
  if (j.contains("gold") && !j.at("gold").is_null()) {
    const json& g = j.at("gold");
    std::size_t gold = 0;
    if (g.is_string()) {
      const std::string s = g.get<std::string>();
      if (s.size() != 1 || s[0] < 'A' || s[0] > 'Z') throw std::invalid_argument("gold letter '" + s + "'");
      gold = static_cast<std::size_t>(s[0] - 'A');
      item.gold_is_letter = true;
    } else if (g.is_number_integer() && g.get<long long>() >= 0) {
      gold = g.get<std::size_t>();
    } else {
      throw std::invalid_argument("gold must be an index or a letter");
    }
    if (gold >= item.original_option_count) throw std::invalid_argument("gold index out of range");
    item.gold_index = gold;
  }
  padded = false;
  if (dataset == Dataset::kSafetyBench && item.options.size() < kPaddedOptionCount) {
    item.options = pad_options(std::move(item.options), kPaddedOptionCount);
    padded = true;
  }
  if (item.options.size() < 2) throw std::invalid_argument("fewer than 2 options");
  return item;
}

QAItem parse_freeform(const json& j) {
  QAItem item;
  item.dataset = Dataset::kTruthfulQa;
  item.id = required_text(j, "id");
  item.question = required_text(j, "question");
  item.best_answer = required_text(j, "best_answer");
  item.correct_refs = string_list(j, "correct_answers");
  item.incorrect_refs = string_list(j, "incorrect_answers");
  if (item.correct_refs.empty()) throw std::invalid_argument("correct_answers is empty");
  if (item.incorrect_refs.empty()) throw std::invalid_argument("incorrect_answers is empty");
  return item;
}

}  // namespace

Corpus parse_corpus(std::string_view text, Dataset dataset, std::string source) {
  Corpus corpus;
  corpus.dataset = dataset;
  corpus.manifest.source_path = std::move(source);
  corpus.manifest.source_sha256 = sha256_hex(text);

  std::unordered_set<std::string> ids;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    ++corpus.manifest.lines;

    QAItem item;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw std::invalid_argument("record is not an object");
      bool padded = false;
      item = is_multiple_choice(dataset) ? parse_mcq(j, dataset, padded) : parse_freeform(j);
      if (padded) ++corpus.manifest.padded;
    } catch (const std::exception& e) {
      ++corpus.manifest.malformed;
      corpus.manifest.errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
      continue;
    }
    if (!ids.insert(item.id).second) {
      throw CorpusError("duplicate item id '" + item.id + "' at line " + std::to_string(lineno));
    }
    corpus.items.push_back(std::move(item));
  }
  corpus.manifest.loaded = corpus.items.size();
  if (corpus.manifest.malformed * 10 > corpus.manifest.lines) {
    std::string msg = std::to_string(corpus.manifest.malformed) + " of " + std::to_string(corpus.manifest.lines) +
                      " records in " + corpus.manifest.source_path + " are malformed";
    if (!corpus.manifest.errors.empty()) msg += " (first: " + corpus.manifest.errors.front() + ")";
    throw CorpusError(msg);
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, Dataset dataset) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read corpus " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw DataError("error reading corpus " + path.string());
  return parse_corpus(buf.str(), dataset, path.string());
}

std::string serialize_item(const QAItem& item) {
  json j;
  j["id"] = item.id;
  j["question"] = item.question;
  if (is_multiple_choice(item.dataset)) {
    const auto n = std::min(item.original_option_count, item.options.size());
    j["options"] = std::vector<std::string>(item.options.begin(), item.options.begin() + static_cast<long>(n));
    if (!item.gold_index) {
      j["gold"] = nullptr;
    } else if (item.gold_is_letter) {
      j["gold"] = std::string(1, static_cast<char>('A' + *item.gold_index));
    } else {
      j["gold"] = *item.gold_index;
    }
  } else {
    j["best_answer"] = item.best_answer;
    j["correct_answers"] = item.correct_refs;
    j["incorrect_answers"] = item.incorrect_refs;
  }
  return j.dump();
}

Corpus filter_unambiguous(const Corpus& corpus, const BleuAccFn& bleu_acc) {
  Corpus out;
  out.dataset = corpus.dataset;
  out.manifest = corpus.manifest;
  std::size_t total = 0;
  for (const auto& item : corpus.items) {
    if (item.dataset != Dataset::kTruthfulQa) {
      out.items.push_back(item);
      continue;
    }
    ++total;
    if (bleu_acc(item.best_answer, item.correct_refs, item.incorrect_refs) == 1) out.items.push_back(item);
  }
  // Repeated filtering keeps the original denominator.
  const std::size_t denom = corpus.manifest.filter ? corpus.manifest.filter->total : total;
  out.manifest.filter = FilterStats{"best_answer BLEU-Acc = 1", out.items.size(), denom};
  out.manifest.loaded = out.items.size();
  return out;
}

CandidateSet assemble_candidates(const QAItem& item, std::optional<std::span<const std::string>> generated,
                                 std::string_view fallback, bool include_safe) {
  CandidateSet set;
  if (is_multiple_choice(item.dataset)) {
    for (const auto& o : item.options) set.items.push_back(Candidate{o, std::nullopt});
    set.origin = item.options.size() > item.original_option_count ? CandidateOrigin::kPadded
                                                                   : CandidateOrigin::kDatasetOptions;
  } else {
    if (!generated || generated->empty()) {
      throw DataError("item '" + item.id + "' has no generated candidates");
    }
    for (const auto& g : *generated) set.items.push_back(Candidate{g, std::nullopt});
    set.origin = CandidateOrigin::kGenerated;
  }
  if (include_safe) {
    set = inject_fallback(std::move(set), fallback);
  } else {
    if (fallback.empty()) throw ConfigError("fallback text is empty");
    set.reference_fallback = Candidate{std::string(fallback), std::nullopt};
  }
  return set;
}

}  // namespace sgame
