#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>
#include <regex>

#include "json.hpp"

#include "sgame/backend.hpp"

namespace sgame {

namespace {

using nlohmann::json;

// Completions APIs report text offsets in characters, not bytes.
std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

const json* find_pointer(const json& doc, const std::string& pointer) {
  try {
    const json& v = doc.at(json::json_pointer(pointer));
    return v.is_null() ? nullptr : &v;
  } catch (const json::exception&) {
    return nullptr;
  }
}

}  // namespace

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, url)) throw ConfigError("bad endpoint URL: " + config_.endpoint);
  base_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
}

std::string HttpBackend::post(const std::string& body) {
  httplib::Client cli(base_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  if (const char* token = std::getenv(config_.api_key_env.c_str()); token && *token) {
    cli.set_bearer_token_auth(token);
  }
  auto res = cli.Post(path_, body, "application/json");
  if (!res) throw TransientBackendError("request to " + config_.endpoint + " failed: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500) {
    throw TransientBackendError("endpoint returned HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw BackendError("endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }
  return res->body;
}

double HttpBackend::completion_loglik(std::string_view prompt, const std::string& completion) {
  json req{{"model", config_.model_name}, {"temperature", 0}};
  if (config_.logprob_mode == LogprobMode::kEcho) {
    req["prompt"] = std::string(prompt) + completion;
    req["max_tokens"] = 0;
    req["echo"] = true;
    req["logprobs"] = 1;
  } else {
    req["prompt"] = std::string(prompt);
    req["max_tokens"] = 1;
    req["logprobs"] = 20;
  }

  json doc;
  try {
    doc = json::parse(post(req.dump()));
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("endpoint returned invalid JSON: ") + e.what());
  }
  const json* lp = find_pointer(doc, config_.logprobs_pointer);
  if (!lp) throw CapabilityError("endpoint response carries no log-probabilities");

  try {
    if (config_.logprob_mode == LogprobMode::kTopLogprobs) {
      const json& top = lp->at("top_logprobs").at(0);
      if (!top.contains(completion)) {
        throw CapabilityError("completion '" + completion + "' is not among the returned top log-probabilities");
      }
      return top.at(completion).get<double>();
    }
    const json& tokens = lp->at("tokens");
    const json& values = lp->at("token_logprobs");
    const json& offsets = lp->at("text_offset");
    const std::size_t prompt_chars = utf8_length(prompt);
    double total = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto start = offsets.at(i).get<std::size_t>();
      const auto end = start + utf8_length(tokens.at(i).get<std::string>());
      if (end <= prompt_chars) continue;
      if (values.at(i).is_null()) throw CapabilityError("null log-probability on a completion token");
      total += values.at(i).get<double>();
      any = true;
    }
    if (!any) throw CapabilityError("echoed tokens do not cover the completion");
    return total;
  } catch (const json::exception& e) {
    throw CapabilityError(std::string("unexpected log-probability layout: ") + e.what());
  }
}

RawProbeResult HttpBackend::logprob_pair(std::string_view prompt, const TokenPair& tokens) {
  return {completion_loglik(prompt, tokens.first), completion_loglik(prompt, tokens.second)};
}

std::optional<std::string> HttpBackend::sample(std::string_view prompt, const GenParams& params, std::uint64_t seed,
                                               std::size_t draw) {
  json req{{"model", config_.model_name},
           {"prompt", std::string(prompt)},
           {"max_tokens", params.max_tokens},
           {"temperature", params.temperature},
           {"top_p", params.top_p},
           {"repetition_penalty", params.repetition_penalty},
           {"stop", params.stop},
           {"seed", seed + draw}};
  json doc;
  try {
    doc = json::parse(post(req.dump()));
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("endpoint returned invalid JSON: ") + e.what());
  }
  const json* text = find_pointer(doc, config_.text_pointer);
  if (!text || !text->is_string()) throw BackendError("endpoint response has no completion text");
  return text->get<std::string>();
}

}  // namespace sgame
