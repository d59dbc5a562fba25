#pragma once

#include <string>

#include "fungi/captions.hpp"
#include "fungi/types.hpp"

namespace fungi {

// Generic chat-completion endpoint. Any server speaking the common
// /chat/completions JSON shape works; the API key comes from the named
// environment variable, never from flags or config files.
struct EndpointConfig {
  std::string base_url;  // e.g. "https://api.example.com" or "http://localhost:8089"
  std::string path = "/v1/chat/completions";
  std::string model = "default";
  std::string api_key_env = "FUNGI_API_KEY";
  int max_attempts = 3;  // total tries per request, backoff between them
  int backoff_ms = 250;  // doubles per retry
  int max_inflight = 4;  // concurrent batch requests
  int timeout_s = 30;

  void validate() const;
};

// Class-description request sent for each caption batch.
std::string class_description_prompt(StageClass stage);

// Requests ceil(N/B) batches of B completions each and assembles a
// CaptionSet. Length bounds are enforced by sentence-boundary truncation and
// then by resampling; the provider id records the responding model.
CaptionSet fetch_remote_captions(StageClass stage, const EndpointConfig& endpoint,
                                 const CaptionConstraints& constraints);

// Truncates at the last sentence boundary that fits max_tokens; returns the
// original text when it already fits, or an empty string when no boundary
// yields a caption within bounds.
std::string truncate_at_sentence(const std::string& text, int min_tokens, int max_tokens);

}  // namespace fungi
