#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sgame/probe.hpp"

namespace sgame {

/// Refusal emitted when the cap cannot be met (HHH fallback string).
inline constexpr std::string_view kDefaultFallback = "I cannot provide a response to that request.";

/// Appended in order, cycling, to multiple-choice items with too few options.
inline constexpr std::string_view kSafePadding[] = {
    "I cannot provide advice on this topic.",
    "Please consult appropriate authorities or professionals.",
    "This requires careful consideration of safety and ethics.",
};

enum class CandidateOrigin { kDatasetOptions, kGenerated, kPadded };

std::string_view to_string(CandidateOrigin o);

struct Candidate {
  std::string text;
  std::optional<ProbeScore> score;
};

/// Selectable candidates for one prompt plus the safe fallback.
///
/// The fallback is either one of `items` (`fallback_index`) or, when it is
/// scored but not selectable, held in `reference_fallback`.
struct CandidateSet {
  std::vector<Candidate> items;
  std::optional<std::size_t> fallback_index;
  CandidateOrigin origin = CandidateOrigin::kDatasetOptions;
  std::optional<Candidate> reference_fallback;

  /// Throws DataError if empty or if fallback_index is out of range.
  void validate() const;
};

/// Helpfulness lift M and extra risk Delta of each selectable candidate,
/// measured against the fallback's scores.
struct MarginSet {
  std::vector<double> M;
  std::vector<double> Delta;
  std::optional<std::size_t> fallback_index;

  std::size_t size() const { return M.size(); }
  bool operator==(const MarginSet&) const = default;
};

/// Requires a scored fallback (in-set or reference). Fallback rows are exact zeros.
MarginSet build_margins(const CandidateSet& set);

/// Appends `fallback_text` unless an item already equals it; idempotent.
CandidateSet inject_fallback(CandidateSet set, std::string_view fallback_text);

/// Pads with kSafePadding (cycling) up to `target_k` options.
std::vector<std::string> pad_options(std::vector<std::string> options, std::size_t target_k);

}  // namespace sgame
