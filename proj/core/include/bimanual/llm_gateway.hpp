#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "bimanual/errors.hpp"
#include "bimanual/prompt_codec.hpp"

namespace bimanual {

struct ChatRequest {
  std::string system;
  std::string user;
  double temperature = 0.0;
  std::string tag;
  /// 1-based attempt within Gateway::complete_validated; not part of the
  /// fingerprint.
  int attempt = 1;
};

enum class CallOutcome { kOk, kParseFail, kTransportFail };
std::string to_string(CallOutcome outcome);
CallOutcome call_outcome_from_string(const std::string& name);

/// Accounting entry for one backend round trip.
struct CallRecord {
  std::string tag;
  std::int64_t prompt_chars = 0;
  std::int64_t completion_chars = 0;
  std::int64_t wall_ms = 0;
  int attempt = 1;
  CallOutcome outcome = CallOutcome::kOk;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public Error {
 public:
  TimeoutError(const std::string& what, std::int64_t elapsed_ms)
      : Error(what), elapsed_ms_(elapsed_ms) {}
  std::int64_t elapsed_ms() const { return elapsed_ms_; }

 private:
  std::int64_t elapsed_ms_;
};

class ExhaustedRetries : public Error {
 public:
  ExhaustedRetries(const std::string& what, std::vector<CallRecord> records)
      : Error(what), records_(std::move(records)) {}
  const std::vector<CallRecord>& records() const { return records_; }

 private:
  std::vector<CallRecord> records_;
};

/// Stable hex digest of (system, user); keys scripted responses.
std::string request_fingerprint(const ChatRequest& req);

class Backend {
 public:
  virtual ~Backend() = default;
  /// Raw completion text. May throw TransportError or TimeoutError.
  virtual std::string complete(const ChatRequest& req) = 0;
};

/// Append-only call log shared by concurrent callers.
class CallLog {
 public:
  void append(const CallRecord& r);
  std::vector<CallRecord> snapshot() const;
  std::size_t size() const;
  void clear();

 private:
  mutable std::mutex mu_;
  std::vector<CallRecord> records_;
};

class Gateway {
 public:
  explicit Gateway(std::shared_ptr<Backend> backend,
                   std::shared_ptr<CallLog> log = std::make_shared<CallLog>());

  /// One backend call, logged with outcome ok or transport_fail.
  std::string complete(const ChatRequest& req);

  /// Calls and parses, retrying the identical request on any CompletionError
  /// up to `max_retries` times. Transport errors propagate immediately.
  ParsedCompletion complete_parsed(const ChatRequest& req, int arity, int max_retries);

  /// Same retry loop with a caller-supplied check; `validate` throws a
  /// CompletionError to reject a completion. Returns the accepted text.
  std::string complete_validated(const ChatRequest& req, int max_retries,
                                 const std::function<void(const std::string&)>& validate);

  CallLog& log() { return *log_; }
  const std::shared_ptr<CallLog>& shared_log() const { return log_; }

 private:
  std::shared_ptr<Backend> backend_;
  std::shared_ptr<CallLog> log_;
};

/// Canned responses keyed by request fingerprint or by tag. Each key serves
/// its list in order and then keeps repeating the last entry. Requests with
/// no script go to the fallback, which by default throws TransportError.
class ScriptedBackend : public Backend {
 public:
  using Fallback = std::function<std::string(const ChatRequest&)>;

  void on_fingerprint(const std::string& fingerprint, std::vector<std::string> responses);
  void on_tag(const std::string& tag, std::vector<std::string> responses);
  void set_fallback(Fallback fallback);

  std::string complete(const ChatRequest& req) override;
  int calls() const;

 private:
  struct Script {
    std::vector<std::string> responses;
    std::size_t served = 0;
  };
  mutable std::mutex mu_;
  std::map<std::string, Script> by_fingerprint_;
  std::map<std::string, Script> by_tag_;
  Fallback fallback_;
  int calls_ = 0;
};

/// Returns unparseable text for attempts 1..failures of every call, then
/// delegates to the wrapped backend.
class FailFirstBackend : public Backend {
 public:
  FailFirstBackend(std::shared_ptr<Backend> inner, int failures);
  std::string complete(const ChatRequest& req) override;

 private:
  std::shared_ptr<Backend> inner_;
  int failures_;
};

}  // namespace bimanual
