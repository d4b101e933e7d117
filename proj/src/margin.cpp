#include "sgame/margin.hpp"

#include "sgame/error.hpp"

namespace sgame {

std::string_view to_string(CandidateOrigin o) {
  switch (o) {
    case CandidateOrigin::kDatasetOptions: return "dataset_options";
    case CandidateOrigin::kGenerated: return "generated";
    case CandidateOrigin::kPadded: return "padded";
  }
  return "dataset_options";
}

void CandidateSet::validate() const {
  if (items.empty()) throw DataError("candidate set is empty");
  if (fallback_index && *fallback_index >= items.size()) {
    throw DataError("fallback index " + std::to_string(*fallback_index) + " out of range");
  }
}

MarginSet build_margins(const CandidateSet& set) {
  set.validate();
  const Candidate* fallback = nullptr;
  if (set.fallback_index) {
    fallback = &set.items[*set.fallback_index];
  } else if (set.reference_fallback) {
    fallback = &*set.reference_fallback;
  } else {
    throw ConfigError("candidate set has no safe fallback");
  }
  if (!fallback->score) throw ConfigError("safe fallback is not scored");
  const double h_s = fallback->score->h;
  const double s_s = fallback->score->s;

  MarginSet out;
  out.M.reserve(set.items.size());
  out.Delta.reserve(set.items.size());
  for (std::size_t i = 0; i < set.items.size(); ++i) {
    const auto& score = set.items[i].score;
    if (!score) throw DataError("candidate " + std::to_string(i) + " is not scored");
    out.M.push_back(score->h - h_s);
    out.Delta.push_back(score->s - s_s);
  }
  if (set.fallback_index) {
    out.M[*set.fallback_index] = 0.0;
    out.Delta[*set.fallback_index] = 0.0;
  }
  out.fallback_index = set.fallback_index;
  return out;
}

CandidateSet inject_fallback(CandidateSet set, std::string_view fallback_text) {
  if (fallback_text.empty()) throw ConfigError("fallback text is empty");
  for (std::size_t i = 0; i < set.items.size(); ++i) {
    if (set.items[i].text == fallback_text) {
      set.fallback_index = i;
      return set;
    }
  }
  std::optional<ProbeScore> score;
  if (set.reference_fallback && set.reference_fallback->text == fallback_text) {
    score = set.reference_fallback->score;
  }
  set.items.push_back(Candidate{std::string(fallback_text), score});
  set.fallback_index = set.items.size() - 1;
  return set;
}

std::vector<std::string> pad_options(std::vector<std::string> options, std::size_t target_k) {
  std::size_t next = 0;
  while (options.size() < target_k) {
    options.emplace_back(kSafePadding[next % std::size(kSafePadding)]);
    ++next;
  }
  return options;
}

}  // namespace sgame
