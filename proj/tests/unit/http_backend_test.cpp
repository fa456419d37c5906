#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "bimanual/errors.hpp"
#include "bimanual/http_backend.hpp"

// After Eigen: httplib pulls in system headers that clash with it.
#include <httplib.h>
#include <json.hpp>

namespace bimanual {
namespace {

// Local chat-completions stub. Records the last request it saw.
class StubServer {
 public:
  StubServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mu_);
        last_body_ = req.body;
        last_auth_ = req.get_header_value("Authorization");
        last_path_ = req.path;
      }
      const auto doc = nlohmann::json::parse(req.body);
      const std::string user = doc["messages"][1]["content"];
      nlohmann::json reply = {{"id", "stub"},
                              {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", "echo:" + user}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    server_.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(800));
      res.set_content("{}", "application/json");
    });
    server_.Post("/limited", [](const httplib::Request&, httplib::Response& res) {
      res.status = 429;
      res.set_content(R"({"error": "rate limited"})", "application/json");
    });
    server_.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
      res.status = 500;
      res.set_content("internal", "text/plain");
    });
    server_.Post("/malformed", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"choices": []})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }
  std::string last_body() {
    std::lock_guard lock(mu_);
    return last_body_;
  }
  std::string last_auth() {
    std::lock_guard lock(mu_);
    return last_auth_;
  }
  std::string last_path() {
    std::lock_guard lock(mu_);
    return last_path_;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::string last_body_, last_auth_, last_path_;
};

HttpBackendOptions options_for(const std::string& url, std::int64_t timeout_ms = 5000) {
  HttpBackendOptions o;
  o.url = url;
  o.model = "stub-model";
  o.api_key_env = "BIMANUAL_TEST_API_KEY";
  o.timeout_ms = timeout_ms;
  return o;
}

TEST(HttpBackend, RequestAndResponseMapping) {
  StubServer stub;
  ::unsetenv("BIMANUAL_TEST_API_KEY");
  HttpBackend backend(options_for(stub.url("/v1/chat/completions")));
  const auto text = backend.complete({"be terse", "{'a': [1, 2, 3]}>", 0.7, "leader"});
  EXPECT_EQ(text, "echo:{'a': [1, 2, 3]}>");
  EXPECT_EQ(stub.last_path(), "/v1/chat/completions");

  const auto body = nlohmann::json::parse(stub.last_body());
  EXPECT_EQ(body["model"], "stub-model");
  ASSERT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][0]["content"], "be terse");
  EXPECT_EQ(body["messages"][1]["role"], "user");
  EXPECT_EQ(body["messages"][1]["content"], "{'a': [1, 2, 3]}>");
  EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.7);
  EXPECT_EQ(stub.last_auth(), "");
}

TEST(HttpBackend, BearerTokenFromEnvironment) {
  StubServer stub;
  ::setenv("BIMANUAL_TEST_API_KEY", "sk-test-123", 1);
  HttpBackend backend(options_for(stub.url("/v1/chat/completions")));
  backend.complete({"s", "u", 0.0, "t"});
  ::unsetenv("BIMANUAL_TEST_API_KEY");
  EXPECT_EQ(stub.last_auth(), "Bearer sk-test-123");
}

TEST(HttpBackend, TimeoutCarriesElapsed) {
  StubServer stub;
  HttpBackend backend(options_for(stub.url("/slow"), 200));
  try {
    backend.complete({"s", "u", 0.0, "t"});
    FAIL() << "expected a timeout";
  } catch (const TimeoutError& e) {
    EXPECT_GE(e.elapsed_ms(), 150);
    EXPECT_LT(e.elapsed_ms(), 800);
  }
}

TEST(HttpBackend, ErrorStatusPropagates) {
  StubServer stub;
  for (const char* path : {"/limited", "/broken"}) {
    HttpBackend backend(options_for(stub.url(path)));
    try {
      backend.complete({"s", "u", 0.0, "t"});
      FAIL() << path;
    } catch (const TransportError& e) {
      const std::string what = e.what();
      EXPECT_NE(what.find(std::string(path) == "/limited" ? "HTTP 429" : "HTTP 500"), std::string::npos) << what;
    }
  }
  HttpBackend malformed(options_for(stub.url("/malformed")));
  EXPECT_THROW(malformed.complete({"s", "u", 0.0, "t"}), TransportError);
}

TEST(HttpBackend, GatewayLogsTransportFailures) {
  StubServer stub;
  Gateway gw(std::make_shared<HttpBackend>(options_for(stub.url("/broken"))));
  EXPECT_THROW(gw.complete_parsed({"s", "u", 0.0, "leader"}, 7, 3), TransportError);
  const auto log = gw.log().snapshot();
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].outcome, CallOutcome::kTransportFail);
}

TEST(HttpBackend, UnreachableServer) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  HttpBackend backend(options_for("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions", 1000));
  EXPECT_THROW(backend.complete({"s", "u", 0.0, "t"}), Error);
}

TEST(HttpBackend, RejectsBadConfiguration) {
  EXPECT_THROW(HttpBackend(options_for("not a url")), ConfigError);
  EXPECT_THROW(HttpBackend(options_for("http://127.0.0.1:1/x", 0)), ConfigError);
}

TEST(ChatWireFormat, BodyAndContent) {
  const auto body = nlohmann::json::parse(chat_request_body("m", {"sys", "usr", 1.0, "tag"}));
  EXPECT_EQ(body.size(), 3u);
  EXPECT_EQ(body["messages"][1]["content"], "usr");
  EXPECT_EQ(chat_response_content(R"({"choices":[{"message":{"content":"hi"}}]})"), "hi");
  EXPECT_THROW(chat_response_content("nope"), TransportError);
  EXPECT_THROW(chat_response_content(R"({"choices":[{"message":{}}]})"), TransportError);
}

}  // namespace
}  // namespace bimanual
