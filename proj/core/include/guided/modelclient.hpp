#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "guided/types.hpp"

namespace guided::modelclient {

// ---------------------------------------------------------------------------
// Token counting

/// Deterministic counter, monotone under concatenation. The default counts
/// whitespace-separated words; exact model tokenizers can be plugged in.
using TokenCounter = std::function<std::int64_t(std::string_view)>;

TokenCounter whitespace_counter();

std::int64_t count_tokens(const TokenCounter& counter, std::string_view text);

// ---------------------------------------------------------------------------
// Errors

class BackendError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class TimeoutError : public BackendError {
  public:
    explicit TimeoutError(const std::string& what) : BackendError(what) {}
};

class HttpError : public BackendError {
  public:
    HttpError(int status, std::string body)
        : BackendError("http status " + std::to_string(status)), status_(status), body_(std::move(body)) {}
    int status() const { return status_; }
    const std::string& body() const { return body_; }

  private:
    int status_;
    std::string body_;
};

class BudgetExceeded : public BackendError {
  public:
    explicit BudgetExceeded(const std::string& what) : BackendError(what) {}
};

// ---------------------------------------------------------------------------
// Budget

/// Shared per-run completion-token budget. Checked conservatively before
/// dispatch: a request whose max_new_tokens no longer fits is refused.
class TokenBudget {
  public:
    explicit TokenBudget(std::int64_t limit) : limit_(limit) {}

    void reserve_or_throw(std::int64_t max_new_tokens) const {
        if (consumed_.load(std::memory_order_relaxed) + max_new_tokens > limit_)
            throw BudgetExceeded("run token budget exhausted");
    }
    void consume(std::int64_t tokens) { consumed_.fetch_add(tokens, std::memory_order_relaxed); }
    std::int64_t consumed() const { return consumed_.load(std::memory_order_relaxed); }
    std::int64_t limit() const { return limit_; }

  private:
    std::int64_t limit_;
    mutable std::atomic<std::int64_t> consumed_{0};
};

// ---------------------------------------------------------------------------
// Requests

struct GenerationRequest {
    std::vector<DialogueMessage> messages;
    double temperature = 1.0;       // clamped contract: [0, 2]
    int max_new_tokens = 1024;      // >= 1
    std::vector<std::string> images;  // opaque URI or base64 payload
};

struct GenerationResponse {
    std::string content;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::int64_t latency_ms = 0;
};

/// Generation backend. Implementations must be safe to share across rollout
/// workers; session() yields an independently-stateful handle for one rollout.
class Backend {
  public:
    virtual ~Backend() = default;
    virtual GenerationResponse generate(const GenerationRequest& request) = 0;
    virtual std::unique_ptr<Backend> session() const = 0;
};

GenerationResponse generate(Backend& backend, const GenerationRequest& request);

void validate(const GenerationRequest& request);

// ---------------------------------------------------------------------------
// Scripted backend

/// Pattern rule: response returned when the last user message contains match.
struct ScriptRule {
    std::string match;
    std::string response;
};

struct Script {
    std::vector<std::string> queue;   // consumed in order, before rules
    std::vector<ScriptRule> rules;    // first match on the last user message wins
    std::string fallback;             // used when queue is empty and no rule matches
};

/// Deterministic stand-in for a served model: content is a pure function of
/// (messages, script state). Token accounting uses the configured counter.
class ScriptedBackend : public Backend {
  public:
    explicit ScriptedBackend(Script script, TokenCounter counter = whitespace_counter(),
                             std::shared_ptr<TokenBudget> budget = nullptr);

    GenerationResponse generate(const GenerationRequest& request) override;
    std::unique_ptr<Backend> session() const override;

  private:
    Script script_;
    std::size_t next_ = 0;
    TokenCounter counter_;
    std::shared_ptr<TokenBudget> budget_;
};

// ---------------------------------------------------------------------------
// HTTP backend (chat-completions wire protocol)

struct RetryPolicy {
    int max_attempts = 4;            // 1 initial + up to 3 retries
    std::int64_t base_delay_ms = 1000;  // 1 s, 2 s, 4 s
    std::int64_t timeout_ms = 120000;
};

/// Retries apply to 429 and 5xx only.
bool is_retryable_status(int status);

std::int64_t retry_delay_ms(const RetryPolicy& policy, int attempt);

struct HttpBackendConfig {
    std::string base_url;   // e.g. http://host:port  (endpoint path appended)
    std::string model;
    std::string api_key;    // empty => no Authorization header
    RetryPolicy retry;
};

/// Environment-variable fallbacks for credentials: GUIDED_API_BASE,
/// GUIDED_API_KEY. Config files never carry the key.
HttpBackendConfig http_config_from_env(HttpBackendConfig config);

class HttpBackend : public Backend {
  public:
    explicit HttpBackend(HttpBackendConfig config, TokenCounter counter = whitespace_counter(),
                         std::shared_ptr<TokenBudget> budget = nullptr);

    GenerationResponse generate(const GenerationRequest& request) override;
    std::unique_ptr<Backend> session() const override;

  private:
    HttpBackendConfig config_;
    TokenCounter counter_;
    std::shared_ptr<TokenBudget> budget_;
};

/// Request body on the wire, exposed for tests.
std::string chat_completion_body(const std::string& model, const GenerationRequest& request);

}  // namespace guided::modelclient
