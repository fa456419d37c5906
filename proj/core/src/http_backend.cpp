#include "bimanual/http_backend.hpp"

#include <chrono>
#include <cstdlib>
#include <regex>

#include <httplib.h>
#include <json.hpp>

namespace bimanual {

std::string chat_request_body(const std::string& model, const ChatRequest& req) {
  nlohmann::ordered_json body;
  body["model"] = model;
  body["messages"] = nlohmann::ordered_json::array({
      {{"role", "system"}, {"content", req.system}},
      {{"role", "user"}, {"content", req.user}},
  });
  body["temperature"] = req.temperature;
  return body.dump();
}

std::string chat_response_content(const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("response is not JSON: ") + e.what());
  }
  const auto ptr = nlohmann::json::json_pointer("/choices/0/message/content");
  if (!doc.contains(ptr) || !doc[ptr].is_string()) {
    throw TransportError("response lacks choices[0].message.content");
  }
  return doc[ptr].get<std::string>();
}

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(options_.url, m, kUrl)) {
    throw ConfigError("invalid endpoint url '" + options_.url + "'");
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (options_.url.rfind("https://", 0) == 0) {
    throw ConfigError("https endpoints need a build with OpenSSL");
  }
#endif
  origin_ = m[1];
  path_ = m[2].matched ? std::string(m[2]) : "/";
  if (options_.timeout_ms <= 0) throw ConfigError("timeout must be positive");
}

std::string HttpBackend::complete(const ChatRequest& req) {
  httplib::Client client(origin_);
  const auto timeout = std::chrono::milliseconds(options_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  if (!options_.api_key_env.empty()) {
    if (const char* key = std::getenv(options_.api_key_env.c_str()); key && *key) {
      client.set_bearer_token_auth(key);
    }
  }

  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(path_, chat_request_body(options_.model, req), "application/json");
  const auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
          .count();

  if (!res) {
    const auto err = res.error();
    // httplib reports an expired read deadline as a plain read error.
    const bool deadline = err == httplib::Error::ConnectionTimeout ||
                          ((err == httplib::Error::Read || err == httplib::Error::Write) &&
                           elapsed + 50 >= options_.timeout_ms);
    if (deadline) {
      throw TimeoutError("request to " + options_.url + " timed out after " +
                             std::to_string(elapsed) + " ms",
                         elapsed);
    }
    throw TransportError("request to " + options_.url + " failed: " + httplib::to_string(err));
  }
  if (res->status >= 400) {
    std::string snippet = res->body.substr(0, 200);
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + options_.url + ": " +
                         snippet);
  }
  return chat_response_content(res->body);
}

}  // namespace bimanual
