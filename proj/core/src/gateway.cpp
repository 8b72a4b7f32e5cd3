#include "milestone/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "milestone/errors.hpp"
#include "json.hpp"

namespace milestone {

double SteadyClock::now() const {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

void SteadyClock::sleep_for(double seconds) {
    if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

double SimulatedClock::now() const {
    std::lock_guard lock(mutex_);
    return time_;
}

void SimulatedClock::sleep_for(double seconds) { advance(seconds); }

void SimulatedClock::advance(double seconds) {
    std::lock_guard lock(mutex_);
    if (seconds > 0) time_ += seconds;
}

RateLimiter::RateLimiter(int tpm_budget, std::shared_ptr<Clock> clock)
    : tpm_budget_(tpm_budget), clock_(std::move(clock)) {
    if (tpm_budget_ <= 0) throw ConfigError("TPM budget must be positive");
}

void RateLimiter::prune(double now) {
    while (!ledger_.empty() && ledger_.front().first <= now - 60.0) ledger_.pop_front();
}

int RateLimiter::window_sum() const {
    int sum = 0;
    for (const auto& [t, tokens] : ledger_) sum += tokens;
    return sum;
}

void RateLimiter::acquire(int tokens) {
    if (tokens > tpm_budget_)
        throw BackendError("request of " + std::to_string(tokens) +
                               " tokens can never fit a TPM budget of " +
                               std::to_string(tpm_budget_),
                           0, false);
    for (;;) {
        double wait;
        {
            std::lock_guard lock(mutex_);
            double now = clock_->now();
            prune(now);
            if (window_sum() + tokens <= tpm_budget_) {
                ledger_.emplace_back(now, tokens);
                return;
            }
            // wait for enough of the oldest expenditures to fall out
            int need = window_sum() + tokens - tpm_budget_;
            double release_at = now;
            int freed = 0;
            for (const auto& [t, spent] : ledger_) {
                freed += spent;
                release_at = t + 60.0;
                if (freed >= need) break;
            }
            wait = std::max(release_at - now, 1e-3);
        }
        clock_->sleep_for(wait);
    }
}

struct MockBackend::Impl {
    // team -> chunk -> trial -> response
    std::map<std::string, std::map<int, std::map<int, std::string>>> script;
};

std::unique_ptr<MockBackend> MockBackend::from_script_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mock script: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_script_text(buf.str());
}

std::unique_ptr<MockBackend> MockBackend::from_script_text(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("mock script: invalid JSON: ") + e.what());
    }
    auto impl = std::make_shared<Impl>();
    try {
        for (auto& [team, chunks] : doc.items())
            for (auto& [chunk, trials] : chunks.items())
                for (auto& [trial, response] : trials.items())
                    impl->script[team][std::stoi(chunk)][std::stoi(trial)] =
                        response.get<std::string>();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("mock script: bad structure: ") + e.what());
    }
    auto backend = std::unique_ptr<MockBackend>(new MockBackend());
    backend->impl_ = std::move(impl);
    return backend;
}

CompletionResponse MockBackend::complete(const CompletionRequest& req, const RequestContext& ctx) {
    const std::string* content = nullptr;
    if (auto team = impl_->script.find(ctx.team_id); team != impl_->script.end())
        if (auto chunk = team->second.find(ctx.chunk_index); chunk != team->second.end())
            if (auto trial = chunk->second.find(ctx.trial_index); trial != chunk->second.end())
                content = &trial->second;

    CompletionResponse resp;
    resp.content = content ? *content : ctx.fallback_payload;
    for (const auto& m : req.messages) resp.prompt_tokens += static_cast<int>(m.content.size() / 4);
    resp.completion_tokens = static_cast<int>(resp.content.size() / 4);
    return resp;
}

CompletionResponse complete_with_retry(Backend& backend, const CompletionRequest& req,
                                       const RequestContext& ctx, Clock& clock,
                                       const RetryPolicy& policy) {
    if (req.messages.empty()) throw ConfigError("completion request has no messages");
    if (req.temperature < 0) throw ConfigError("temperature must be >= 0");

    auto jitter = policy.jitter;
    if (!jitter) {
        jitter = [] {
            thread_local std::mt19937 rng{std::random_device{}()};
            return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        };
    }

    double delay = policy.base_delay_seconds;
    for (int attempt = 1;; ++attempt) {
        try {
            return backend.complete(req, ctx);
        } catch (const BackendError& e) {
            if (!e.retryable || attempt >= policy.max_attempts) throw;
            clock.sleep_for(delay * jitter());  // full jitter
            delay *= policy.factor;
        }
    }
}

}  // namespace milestone
