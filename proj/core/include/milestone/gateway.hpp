#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace milestone {

/// Injectable time source so rate limiting and backoff are testable under a
/// simulated clock.
class Clock {
public:
    virtual ~Clock() = default;
    virtual double now() const = 0;             // seconds, monotonic
    virtual void sleep_for(double seconds) = 0;
};

class SteadyClock : public Clock {
public:
    double now() const override;
    void sleep_for(double seconds) override;
};

/// Thread-safe simulated clock; sleep_for advances time immediately.
class SimulatedClock : public Clock {
public:
    explicit SimulatedClock(double start = 0.0) : time_(start) {}
    double now() const override;
    void sleep_for(double seconds) override;
    void advance(double seconds);

private:
    mutable std::mutex mutex_;
    double time_;
};

struct Message {
    std::string role;  // "system" or "user"
    std::string content;
};

struct CompletionRequest {
    std::string model_name;
    std::vector<Message> messages;
    double temperature = 0.0;
    int max_response_tokens = 0;
};

struct CompletionResponse {
    std::string content;
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

/// Identifies the pipeline position of a request. The mock backend keys on
/// it; the HTTP backend ignores it. `fallback_payload` is what a partial
/// mock script echoes back for a missing key (the current summary, so the
/// iteration becomes a no-op).
struct RequestContext {
    std::string team_id;
    int chunk_index = 0;
    int trial_index = 0;
    std::string fallback_payload;
};

/// Sliding 60-second token-per-minute window. Shared across concurrent team
/// pipelines; acquire() blocks the calling task only.
class RateLimiter {
public:
    RateLimiter(int tpm_budget, std::shared_ptr<Clock> clock);

    /// Returns once recording `tokens` keeps every 60 s window within
    /// budget. Throws BackendError if tokens can never fit.
    void acquire(int tokens);

    int budget() const { return tpm_budget_; }

private:
    int tpm_budget_;
    std::shared_ptr<Clock> clock_;
    std::mutex mutex_;
    std::deque<std::pair<double, int>> ledger_;  // (grant time, tokens)

    void prune(double now);
    int window_sum() const;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResponse complete(const CompletionRequest& req,
                                        const RequestContext& ctx) = 0;
};

/// Scripted offline backend: (team, chunk, trial) -> response string.
/// Lookups are pure; a missing key echoes ctx.fallback_payload.
class MockBackend : public Backend {
public:
    /// Script file: {"<team>": {"<chunk>": {"<trial>": "<response>"}}}
    static std::unique_ptr<MockBackend> from_script_file(const std::string& path);
    static std::unique_ptr<MockBackend> from_script_text(const std::string& json_text);

    CompletionResponse complete(const CompletionRequest& req, const RequestContext& ctx) override;

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
    MockBackend() = default;
};

struct HttpBackendConfig {
    std::string base_url = "https://api.openai.com";
    std::string path = "/v1/chat/completions";
    std::string api_key;  // defaults to LLM_API_KEY
    double timeout_seconds = 120.0;
};

std::unique_ptr<Backend> make_http_backend(const HttpBackendConfig& config);

struct RetryPolicy {
    int max_attempts = 5;
    double base_delay_seconds = 2.0;
    double factor = 2.0;
    std::function<double()> jitter;  // uniform [0,1); defaults to a thread-local RNG
};

/// Wraps a backend call with exponential backoff and full jitter on
/// transient failures (transport, 429, 5xx). Non-retryable statuses
/// propagate immediately; exhausted retries rethrow the last cause.
CompletionResponse complete_with_retry(Backend& backend, const CompletionRequest& req,
                                       const RequestContext& ctx, Clock& clock,
                                       const RetryPolicy& policy = {});

}  // namespace milestone
