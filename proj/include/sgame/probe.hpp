#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sgame/types.hpp"

namespace sgame {

class ScoringClient;

enum class ProbeKind { kHelpfulness, kSafety, kGenerator };

std::string_view to_string(ProbeKind k);
std::optional<ProbeKind> parse_probe_kind(std::string_view s);

/// Yes/No log-likelihoods returned for one rendered probe, in nats.
struct RawProbeResult {
  double yes_loglik = 0.0;
  double no_loglik = 0.0;

  bool operator==(const RawProbeResult&) const = default;
};

/// Normalized Yes log-probabilities for one candidate.
///
/// `h` is the helpfulness score and `s` the safety-risk score; both are
/// recomputable as log_p_normalize(raw.yes_loglik, raw.no_loglik). For safety
/// templates whose Yes answer means "safe", `raw_s` holds the pair already
/// oriented so that its `yes_loglik` is the risky answer.
struct ProbeScore {
  double h = 0.0;
  double s = 0.0;
  RawProbeResult raw_h;
  RawProbeResult raw_s;

  bool operator==(const ProbeScore&) const = default;
};

/// y - log(exp(y) + exp(n)), evaluated without overflow. Result is <= 0.
/// Throws InvalidScoreError on non-finite input.
double log_p_normalize(double yes, double no);

/// Build a ProbeScore from the two raw pairs as the backend returned them.
ProbeScore make_probe_score(const RawProbeResult& helpfulness, const RawProbeResult& safety,
                            bool safety_yes_means_risk);

class ProbeTemplate {
 public:
  /// Validates that every placeholder the kind needs is present.
  static ProbeTemplate create(std::string name, std::string body, ProbeKind kind, Dataset dataset,
                              bool yes_means_risk = true);

  const std::string& name() const { return name_; }
  const std::string& body() const { return body_; }
  ProbeKind kind() const { return kind_; }
  Dataset dataset() const { return dataset_; }
  // Only meaningful for safety probes.
  bool yes_means_risk() const { return yes_means_risk_; }

  /// Number of distinct {option_X} placeholders in the body.
  std::size_t option_slots() const;

 private:
  ProbeTemplate() = default;

  std::string name_;
  std::string body_;
  ProbeKind kind_ = ProbeKind::kHelpfulness;
  Dataset dataset_ = Dataset::kCustom;
  bool yes_means_risk_ = true;
};

/// Substitutes {question}, {answer} and {option_A}.. byte-for-byte.
///
/// Braces that do not name a known placeholder are copied through. A line
/// whose only content is "X. {option_X}" is dropped when fewer options are
/// supplied; any other unresolvable placeholder raises TemplateError.
std::string render_probe(const ProbeTemplate& tpl, std::string_view question, std::string_view answer,
                         std::span<const std::string> options = {});

/// Immutable (dataset, kind) -> template table loaded from a manifest file.
class TemplateSet {
 public:
  /// Manifest: {"templates": [{"dataset", "kind", "file", "name"?, "yes_means_risk"?}]}
  /// with file paths relative to the manifest. Throws ConfigError when the
  /// manifest or any referenced file is missing.
  static TemplateSet load(const std::filesystem::path& manifest);

  void add(ProbeTemplate tpl);
  bool contains(Dataset d, ProbeKind k) const;
  const ProbeTemplate& get(Dataset d, ProbeKind k) const;

 private:
  std::map<std::pair<Dataset, ProbeKind>, ProbeTemplate> table_;
};

/// Scores one candidate with the helpfulness and safety probes.
ProbeScore score_candidate(ScoringClient& client, std::string_view question, std::string_view candidate,
                           const ProbeTemplate& helpfulness, const ProbeTemplate& safety,
                           std::string_view item_id = {});

}  // namespace sgame
