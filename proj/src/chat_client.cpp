#include "fungi/chat_client.hpp"

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "fungi/error.hpp"
#include "fungi/parallel.hpp"
#include "fungi/util.hpp"

namespace fungi {

namespace {

using nlohmann::json;

struct BatchResult {
  std::vector<std::string> captions;
  std::string provider;
};

std::string api_key(const EndpointConfig& endpoint) {
  const char* key = std::getenv(endpoint.api_key_env.c_str());
  return key ? key : "";
}

bool retryable_status(int status) {
  return status == 429 || status >= 500 || status == 401 || status == 403;
}

// One chat-completion call asking for `n` completions; retries with
// exponential backoff up to endpoint.max_attempts total tries.
BatchResult request_batch(const EndpointConfig& endpoint, const std::string& prompt,
                          double temperature, int n) {
  const json body = {
      {"model", endpoint.model},
      {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
      {"temperature", temperature},
      {"n", n},
  };
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 1; attempt <= endpoint.max_attempts; ++attempt) {
    if (attempt > 1) {
      const int delay = endpoint.backoff_ms << (attempt - 2);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    httplib::Client client(endpoint.base_url);
    client.set_connection_timeout(endpoint.timeout_s);
    client.set_read_timeout(endpoint.timeout_s);
    httplib::Headers headers;
    const std::string key = api_key(endpoint);
    if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

    auto res = client.Post(endpoint.path, headers, payload, "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      if (retryable_status(res->status)) continue;
      throw ProviderError("chat endpoint rejected request (" + last_error + ")");
    }

    json parsed;
    try {
      parsed = json::parse(res->body);
    } catch (const json::exception& e) {
      throw ParseError(std::string("unparseable chat response: ") + e.what(), res->body);
    }
    BatchResult out;
    out.provider = parsed.value("model", endpoint.model);
    if (!parsed.contains("choices") || !parsed["choices"].is_array())
      throw ParseError("chat response has no choices array", res->body);
    for (const auto& choice : parsed["choices"]) {
      if (!choice.contains("message") || !choice["message"].contains("content"))
        throw ParseError("chat choice has no message content", res->body);
      out.captions.push_back(choice["message"]["content"].get<std::string>());
    }
    return out;
  }
  throw ProviderError("chat endpoint failed after " + std::to_string(endpoint.max_attempts) +
                      " attempts (" + last_error + ")");
}

}  // namespace

void EndpointConfig::validate() const {
  if (base_url.empty()) throw ConfigError("remote caption provider requires endpoint.base_url");
  if (path.empty() || path.front() != '/')
    throw ConfigError("endpoint.path must start with '/'");
  if (max_attempts < 1) throw ConfigError("endpoint.max_attempts must be >= 1");
  if (max_inflight < 1) throw ConfigError("endpoint.max_inflight must be >= 1");
}

std::string class_description_prompt(StageClass stage) {
  return std::string("Describe the fungal growth stage ") + stage_name(stage) +
         ", focusing on its key biological characteristics.";
}

std::string truncate_at_sentence(const std::string& text, int min_tokens, int max_tokens) {
  if (token_count(text) <= max_tokens) return text;
  std::string best;
  std::string prefix;
  for (std::size_t i = 0; i < text.size(); ++i) {
    prefix.push_back(text[i]);
    const char c = text[i];
    if (c == '.' || c == '!' || c == '?') {
      const int tokens = token_count(prefix);
      if (tokens > max_tokens) break;
      if (tokens >= min_tokens) best = prefix;
    }
  }
  return best;
}

CaptionSet fetch_remote_captions(StageClass stage, const EndpointConfig& endpoint,
                                 const CaptionConstraints& constraints) {
  endpoint.validate();
  constraints.validate();
  const std::string prompt = class_description_prompt(stage);
  const int batches = constraints.batch_count();

  std::vector<BatchResult> results(static_cast<std::size_t>(batches));
  parallel_for(static_cast<std::size_t>(batches), endpoint.max_inflight, [&](std::size_t k) {
    results[k] = request_batch(endpoint, prompt, constraints.sampling_temperature,
                               constraints.batch_size);
  });

  CaptionSet set;
  set.stage = stage;
  set.provider = batches > 0 ? results[0].provider : endpoint.model;
  for (int k = 0; k < batches; ++k) {
    for (const auto& raw : results[static_cast<std::size_t>(k)].captions) {
      std::string caption = truncate_at_sentence(raw, constraints.min_tokens,
                                                 constraints.max_tokens);
      int retries = 0;
      while ((caption.empty() || token_count(caption) < constraints.min_tokens ||
              token_count(caption) > constraints.max_tokens) &&
             retries < endpoint.max_attempts) {
        // Resample a single replacement completion for an out-of-bounds caption.
        auto replacement = request_batch(endpoint, prompt, constraints.sampling_temperature, 1);
        if (replacement.captions.empty())
          throw ProviderError("chat endpoint returned an empty replacement batch");
        caption = truncate_at_sentence(replacement.captions.front(), constraints.min_tokens,
                                       constraints.max_tokens);
        ++retries;
      }
      if (caption.empty() || token_count(caption) < constraints.min_tokens ||
          token_count(caption) > constraints.max_tokens) {
        throw ProviderError("endpoint completions cannot satisfy caption length bounds");
      }
      set.captions.push_back(std::move(caption));
      set.batch_index.push_back(k + 1);
    }
  }
  return set;
}

}  // namespace fungi
