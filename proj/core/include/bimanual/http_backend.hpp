#pragma once

#include <cstdint>
#include <string>

#include "bimanual/llm_gateway.hpp"

namespace bimanual {

struct HttpBackendOptions {
  /// Full endpoint, e.g. http://127.0.0.1:8000/v1/chat/completions.
  std::string url;
  std::string model;
  /// Environment variable holding the bearer token; no header when unset.
  std::string api_key_env = "OPENAI_API_KEY";
  std::int64_t timeout_ms = 60000;
};

/// Chat-completions client. Sends {model, messages: [system, user],
/// temperature} and returns choices[0].message.content.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions options);
  std::string complete(const ChatRequest& req) override;

  const HttpBackendOptions& options() const { return options_; }

 private:
  HttpBackendOptions options_;
  std::string origin_;
  std::string path_;
};

/// Request body as sent on the wire.
std::string chat_request_body(const std::string& model, const ChatRequest& req);
/// Extracts choices[0].message.content; throws TransportError otherwise.
std::string chat_response_content(const std::string& body);

}  // namespace bimanual
