#include "bimanual/llm_gateway.hpp"

#include <chrono>
#include <cstdio>
#include <optional>

#include "bimanual/random.hpp"

namespace bimanual {
namespace {

std::int64_t elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                               start)
      .count();
}

std::int64_t prompt_chars(const ChatRequest& req) {
  return static_cast<std::int64_t>(req.system.size() + req.user.size());
}

}  // namespace

std::string to_string(CallOutcome outcome) {
  switch (outcome) {
    case CallOutcome::kOk: return "ok";
    case CallOutcome::kParseFail: return "parse_fail";
    case CallOutcome::kTransportFail: return "transport_fail";
  }
  return "ok";
}

CallOutcome call_outcome_from_string(const std::string& name) {
  if (name == "ok") return CallOutcome::kOk;
  if (name == "parse_fail") return CallOutcome::kParseFail;
  if (name == "transport_fail") return CallOutcome::kTransportFail;
  throw RangeError("unknown call outcome '" + name + "'");
}

std::string request_fingerprint(const ChatRequest& req) {
  std::uint64_t h = fnv1a(req.system);
  h = fnv1a(std::string_view("\x1f", 1), h);
  h = fnv1a(req.user, h);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void CallLog::append(const CallRecord& r) {
  std::lock_guard lock(mu_);
  records_.push_back(r);
}

std::vector<CallRecord> CallLog::snapshot() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t CallLog::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

void CallLog::clear() {
  std::lock_guard lock(mu_);
  records_.clear();
}

Gateway::Gateway(std::shared_ptr<Backend> backend, std::shared_ptr<CallLog> log)
    : backend_(std::move(backend)), log_(std::move(log)) {
  if (!backend_) throw ConfigError("gateway needs a backend");
  if (!log_) log_ = std::make_shared<CallLog>();
}

std::string Gateway::complete(const ChatRequest& req) {
  CallRecord rec{req.tag, prompt_chars(req), 0, 0, 1, CallOutcome::kOk};
  const auto start = std::chrono::steady_clock::now();
  try {
    std::string text = backend_->complete(req);
    rec.wall_ms = elapsed_ms(start);
    rec.completion_chars = static_cast<std::int64_t>(text.size());
    log_->append(rec);
    return text;
  } catch (...) {
    rec.wall_ms = elapsed_ms(start);
    rec.outcome = CallOutcome::kTransportFail;
    log_->append(rec);
    throw;
  }
}

ParsedCompletion Gateway::complete_parsed(const ChatRequest& req, int arity, int max_retries) {
  std::optional<ParsedCompletion> parsed;
  complete_validated(req, max_retries,
                     [&](const std::string& text) { parsed = parse_completion(text, arity); });
  return std::move(*parsed);
}

std::string Gateway::complete_validated(const ChatRequest& req, int max_retries,
                                        const std::function<void(const std::string&)>& validate) {
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  std::vector<CallRecord> attempts;
  std::string last_error;
  for (int attempt = 1; attempt <= max_retries + 1; ++attempt) {
    CallRecord rec{req.tag, prompt_chars(req), 0, 0, attempt, CallOutcome::kOk};
    const auto start = std::chrono::steady_clock::now();
    std::string text;
    try {
      ChatRequest sent = req;
      sent.attempt = attempt;
      text = backend_->complete(sent);
    } catch (...) {
      rec.wall_ms = elapsed_ms(start);
      rec.outcome = CallOutcome::kTransportFail;
      log_->append(rec);
      throw;
    }
    rec.wall_ms = elapsed_ms(start);
    rec.completion_chars = static_cast<std::int64_t>(text.size());
    try {
      validate(text);
      log_->append(rec);
      return text;
    } catch (const CompletionError& e) {
      rec.outcome = CallOutcome::kParseFail;
      log_->append(rec);
      attempts.push_back(rec);
      last_error = e.what();
    }
  }
  throw ExhaustedRetries("'" + req.tag + "' failed after " + std::to_string(attempts.size()) +
                             " attempts: " + last_error,
                         std::move(attempts));
}

void ScriptedBackend::on_fingerprint(const std::string& fingerprint,
                                     std::vector<std::string> responses) {
  std::lock_guard lock(mu_);
  by_fingerprint_[fingerprint] = {std::move(responses), 0};
}

void ScriptedBackend::on_tag(const std::string& tag, std::vector<std::string> responses) {
  std::lock_guard lock(mu_);
  by_tag_[tag] = {std::move(responses), 0};
}

void ScriptedBackend::set_fallback(Fallback fallback) {
  std::lock_guard lock(mu_);
  fallback_ = std::move(fallback);
}

int ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::string ScriptedBackend::complete(const ChatRequest& req) {
  Fallback fallback;
  {
    std::lock_guard lock(mu_);
    ++calls_;
    auto serve = [](Script& s) {
      const std::size_t i = std::min(s.served, s.responses.size() - 1);
      ++s.served;
      return s.responses[i];
    };
    if (auto it = by_fingerprint_.find(request_fingerprint(req));
        it != by_fingerprint_.end() && !it->second.responses.empty()) {
      return serve(it->second);
    }
    if (auto it = by_tag_.find(req.tag); it != by_tag_.end() && !it->second.responses.empty()) {
      return serve(it->second);
    }
    fallback = fallback_;
  }
  if (!fallback) throw TransportError("no scripted response for tag '" + req.tag + "'");
  return fallback(req);
}

FailFirstBackend::FailFirstBackend(std::shared_ptr<Backend> inner, int failures)
    : inner_(std::move(inner)), failures_(failures) {}

std::string FailFirstBackend::complete(const ChatRequest& req) {
  if (req.attempt <= failures_) return "I am not able to produce a plan for this scene.";
  return inner_->complete(req);
}

}  // namespace bimanual
