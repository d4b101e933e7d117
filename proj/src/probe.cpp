#include "sgame/probe.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"

#include "sgame/backend.hpp"
#include "sgame/error.hpp"

namespace sgame {

namespace {

struct Placeholder {
  std::size_t begin = 0;  // offset of '{'
  std::size_t end = 0;    // one past '}'
  std::string name;
};

bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// Index of an {option_X} placeholder, or nullopt for other names.
std::optional<std::size_t> option_index(std::string_view name) {
  constexpr std::string_view kPrefix = "option_";
  if (name.size() != kPrefix.size() + 1 || name.substr(0, kPrefix.size()) != kPrefix) return std::nullopt;
  const char letter = name.back();
  if (letter < 'A' || letter > 'Z') return std::nullopt;
  return static_cast<std::size_t>(letter - 'A');
}

bool is_known_placeholder(std::string_view name) {
  return name == "question" || name == "answer" || option_index(name).has_value();
}

std::vector<Placeholder> scan(std::string_view text) {
  std::vector<Placeholder> out;
  std::size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string_view::npos) {
    std::size_t end = pos + 1;
    while (end < text.size() && is_ident_char(text[end])) ++end;
    if (end < text.size() && text[end] == '}' && end > pos + 1) {
      std::string name(text.substr(pos + 1, end - pos - 1));
      if (is_known_placeholder(name)) {
        out.push_back({pos, end + 1, std::move(name)});
        pos = end + 1;
        continue;
      }
    }
    ++pos;
  }
  return out;
}

bool only_whitespace(std::string_view s) {
  for (char c : s) {
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

// "X. {option_X}" with nothing else but whitespace.
bool is_bare_option_line(std::string_view line, const Placeholder& ph, std::size_t index) {
  std::string_view before = line.substr(0, ph.begin);
  std::string_view after = line.substr(ph.end);
  if (!only_whitespace(after)) return false;
  std::size_t i = 0;
  while (i < before.size() && (before[i] == ' ' || before[i] == '\t')) ++i;
  if (i + 1 >= before.size()) return false;
  if (before[i] != static_cast<char>('A' + index) || before[i + 1] != '.') return false;
  return only_whitespace(before.substr(i + 2));
}

}  // namespace

std::string_view to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::kHelpfulness: return "helpfulness";
    case ProbeKind::kSafety: return "safety";
    case ProbeKind::kGenerator: return "generator";
  }
  return "helpfulness";
}

std::optional<ProbeKind> parse_probe_kind(std::string_view s) {
  if (s == "helpfulness") return ProbeKind::kHelpfulness;
  if (s == "safety") return ProbeKind::kSafety;
  if (s == "generator") return ProbeKind::kGenerator;
  return std::nullopt;
}

double log_p_normalize(double yes, double no) {
  if (!std::isfinite(yes) || !std::isfinite(no)) {
    throw InvalidScoreError("non-finite log-likelihood in probe result");
  }
  // y - LSE(y, n) = -log1p(exp(n - y)) when y >= n, else (y - n) - log1p(exp(y - n)).
  if (yes >= no) return -std::log1p(std::exp(no - yes));
  const double d = yes - no;
  return d - std::log1p(std::exp(d));
}

ProbeScore make_probe_score(const RawProbeResult& helpfulness, const RawProbeResult& safety,
                            bool safety_yes_means_risk) {
  ProbeScore out;
  out.raw_h = helpfulness;
  out.raw_s = safety_yes_means_risk ? safety : RawProbeResult{safety.no_loglik, safety.yes_loglik};
  out.h = log_p_normalize(out.raw_h.yes_loglik, out.raw_h.no_loglik);
  out.s = log_p_normalize(out.raw_s.yes_loglik, out.raw_s.no_loglik);
  return out;
}

ProbeTemplate ProbeTemplate::create(std::string name, std::string body, ProbeKind kind, Dataset dataset,
                                    bool yes_means_risk) {
  std::set<std::string> names;
  for (const auto& ph : scan(body)) names.insert(ph.name);
  if (!names.count("question")) {
    throw TemplateError("template '" + name + "' has no {question} placeholder");
  }
  if (kind != ProbeKind::kGenerator && !names.count("answer")) {
    throw TemplateError("probe template '" + name + "' has no {answer} placeholder");
  }
  ProbeTemplate t;
  t.name_ = std::move(name);
  t.body_ = std::move(body);
  t.kind_ = kind;
  t.dataset_ = dataset;
  t.yes_means_risk_ = yes_means_risk;
  return t;
}

std::size_t ProbeTemplate::option_slots() const {
  std::set<std::size_t> idx;
  for (const auto& ph : scan(body_)) {
    if (auto i = option_index(ph.name)) idx.insert(*i);
  }
  return idx.size();
}

std::string render_probe(const ProbeTemplate& tpl, std::string_view question, std::string_view answer,
                         std::span<const std::string> options) {
  if (options.size() > 26) throw TemplateError("more than 26 options");
  if (!options.empty() && options.size() > tpl.option_slots() && tpl.kind() == ProbeKind::kGenerator) {
    throw TemplateError("template '" + tpl.name() + "' has " + std::to_string(tpl.option_slots()) +
                        " option slots, got " + std::to_string(options.size()) + " options");
  }
  const std::string_view body = tpl.body();
  std::string out;
  out.reserve(body.size() + question.size() + answer.size() + 64);

  std::size_t line_start = 0;
  while (line_start < body.size()) {
    std::size_t nl = body.find('\n', line_start);
    const std::size_t line_end = nl == std::string_view::npos ? body.size() : nl + 1;
    const std::string_view line = body.substr(line_start, (nl == std::string_view::npos ? body.size() : nl) - line_start);
    const auto phs = scan(line);

    if (phs.size() == 1) {
      if (auto idx = option_index(phs[0].name); idx && *idx >= options.size() &&
                                                 is_bare_option_line(line, phs[0], *idx)) {
        line_start = line_end;
        continue;
      }
    }

    std::size_t cursor = 0;
    for (const auto& ph : phs) {
      out.append(line.substr(cursor, ph.begin - cursor));
      if (ph.name == "question") {
        out.append(question);
      } else if (ph.name == "answer") {
        if (tpl.kind() == ProbeKind::kGenerator) {
          throw TemplateError("generator template '" + tpl.name() + "' uses {answer}");
        }
        out.append(answer);
      } else {
        const std::size_t idx = *option_index(ph.name);
        if (idx >= options.size()) {
          throw TemplateError("template '" + tpl.name() + "': no value for {" + ph.name + "}");
        }
        out.append(options[idx]);
      }
      cursor = ph.end;
    }
    out.append(line.substr(cursor));
    if (nl != std::string_view::npos) out.push_back('\n');
    line_start = line_end;
  }
  return out;
}

TemplateSet TemplateSet::load(const std::filesystem::path& manifest) {
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw ConfigError("template manifest not found: " + manifest.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("template manifest " + manifest.string() + ": " + e.what());
  }
  if (!doc.contains("templates") || !doc["templates"].is_array()) {
    throw ConfigError("template manifest " + manifest.string() + " lacks a 'templates' array");
  }

  TemplateSet set;
  const auto base = manifest.parent_path();
  for (const auto& entry : doc["templates"]) {
    try {
      const auto dataset = parse_dataset(entry.at("dataset").get<std::string>());
      const auto kind = parse_probe_kind(entry.at("kind").get<std::string>());
      if (!dataset || !kind) throw ConfigError("unknown dataset or kind in " + entry.dump());
      const auto file = base / entry.at("file").get<std::string>();
      std::ifstream body_in(file, std::ios::binary);
      if (!body_in) throw ConfigError("template file not found: " + file.string());
      std::ostringstream body;
      body << body_in.rdbuf();
      std::string name = entry.value("name", file.stem().string());
      set.add(ProbeTemplate::create(std::move(name), body.str(), *kind, *dataset,
                                    entry.value("yes_means_risk", true)));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("template manifest entry " + entry.dump() + ": " + e.what());
    }
  }
  return set;
}

void TemplateSet::add(ProbeTemplate tpl) {
  auto key = std::make_pair(tpl.dataset(), tpl.kind());
  table_.insert_or_assign(key, std::move(tpl));
}

bool TemplateSet::contains(Dataset d, ProbeKind k) const { return table_.count({d, k}) > 0; }

const ProbeTemplate& TemplateSet::get(Dataset d, ProbeKind k) const {
  auto it = table_.find({d, k});
  if (it == table_.end()) {
    throw ConfigError("no " + std::string(to_string(k)) + " template for dataset " + std::string(to_string(d)));
  }
  return it->second;
}

ProbeScore score_candidate(ScoringClient& client, std::string_view question, std::string_view candidate,
                           const ProbeTemplate& helpfulness, const ProbeTemplate& safety,
                           std::string_view item_id) {
  const std::string h_prompt = render_probe(helpfulness, question, candidate);
  const std::string s_prompt = render_probe(safety, question, candidate);
  try {
    const RawProbeResult h_raw = client.logprob_pair(h_prompt);
    const RawProbeResult s_raw = client.logprob_pair(s_prompt);
    return make_probe_score(h_raw, s_raw, safety.yes_means_risk());
  } catch (const CacheError&) {
    throw;
  } catch (const BackendError& e) {
    throw ScoringError(std::string(item_id), e.what());
  }
}

}  // namespace sgame
