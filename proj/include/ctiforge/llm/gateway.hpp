#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "ctiforge/llm/request.hpp"
#include "ctiforge/llm/schemas.hpp"

namespace ctiforge::llm {

// ============================================================================
// Provider interface
// ============================================================================

/// A chat-completion backend. Implementations must tolerate concurrent
/// complete() calls.
class Provider {
public:
    virtual ~Provider() = default;
    virtual Result<ProviderReply> complete(const LlmRequest& request) = 0;
    virtual std::string name() const = 0;
};

namespace detail {

/// Counting semaphore with a runtime bound.
class Semaphore {
public:
    explicit Semaphore(int count) : count_(count) {}

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [this] { return count_ > 0; });
        --count_;
    }
    void release() {
        {
            std::lock_guard lock(mutex_);
            ++count_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int count_;
};

struct SemaphoreGuard {
    Semaphore& sem;
    explicit SemaphoreGuard(Semaphore& s) : sem(s) { sem.acquire(); }
    ~SemaphoreGuard() { sem.release(); }
};

}  // namespace detail

// ============================================================================
// Gateway
// ============================================================================

/// Wraps a provider with JSON-schema enforcement, retry policy, and bounded
/// concurrent fan-out. Safe for concurrent use.
class Gateway {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    Gateway(std::shared_ptr<Provider> provider, ProviderConfig config)
        : provider_(std::move(provider)),
          config_(std::move(config)),
          semaphore_(std::max(1, config_.max_concurrent_requests)) {
        sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }

    /// Replaces the backoff sleep; tests inject a no-op.
    void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

    const ProviderConfig& config() const { return config_; }
    Provider& provider() { return *provider_; }

    TokenUsage total_usage() const {
        std::lock_guard lock(usage_mutex_);
        return usage_;
    }

    /// Single schema-validated completion. On a schema violation the request
    /// is retried with the violation appended to the prompt; transport-level
    /// failures are retried with exponential backoff (1s base, x2, +/-20%
    /// jitter). Exhaustion surfaces the last error.
    Result<LlmResponse> complete(const LlmRequest& request) {
        if (!provider_) return Error{ErrorCode::ProviderMisconfigured, "no provider configured"};
        auto valid = request.validate();
        if (!valid) return valid.error();

        LlmRequest attempt_request = request;
        Error last_error{ErrorCode::Transport, "unreachable"};
        int retries = 0;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            Result<ProviderReply> reply = [&] {
                detail::SemaphoreGuard guard(semaphore_);
                return provider_->complete(attempt_request);
            }();
            if (!reply) {
                last_error = reply.error();
                if (last_error.code == ErrorCode::MissingFixture) return last_error;
                if (attempt < config_.max_retries) {
                    backoff(attempt);
                    ++retries;
                }
                continue;
            }
            add_usage(reply.value().usage);

            Json parsed = Json::parse(reply.value().raw_text, nullptr,
                                                          /*allow_exceptions=*/false);
            Status schema_ok = parsed.is_discarded()
                                   ? Status(Error{ErrorCode::SchemaViolation,
                                                  "response is not well-formed JSON"})
                                   : validate_schema(request.response_schema, parsed);
            if (schema_ok) {
                LlmResponse response;
                response.raw_text = reply.value().raw_text;
                response.parsed = std::move(parsed);
                response.usage = reply.value().usage;
                response.retry_count = retries;
                return response;
            }
            last_error = schema_ok.error();
            if (attempt < config_.max_retries) {
                ++retries;
                attempt_request = request;
                attempt_request.user_content.push_back(ContentPart::make_text(
                    "Your previous response was rejected: " + last_error.message +
                    ". Respond again with JSON that matches the requested shape exactly."));
            }
        }
        return last_error;
    }

    /// Concurrent fan-out; results are positionally aligned with the input
    /// and one failed element never aborts its siblings.
    std::vector<Result<LlmResponse>> complete_batch(const std::vector<LlmRequest>& requests) {
        std::vector<Result<LlmResponse>> results(
            requests.size(), Result<LlmResponse>(Error{ErrorCode::Transport, "not dispatched"}));
        if (requests.empty()) return results;

        size_t workers = std::min<size_t>(requests.size(),
                                          static_cast<size_t>(std::max(
                                              1, config_.max_concurrent_requests)));
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (true) {
                    size_t index = next.fetch_add(1);
                    if (index >= requests.size()) break;
                    results[index] = complete(requests[index]);
                }
            });
        }
        for (auto& thread : pool) thread.join();
        return results;
    }

private:
    void backoff(int attempt) {
        double base = 1000.0;
        for (int i = 0; i < attempt; ++i) base *= 2.0;
        double jitter;
        {
            std::lock_guard lock(rng_mutex_);
            jitter = std::uniform_real_distribution<double>(0.8, 1.2)(rng_);
        }
        sleeper_(std::chrono::milliseconds(static_cast<long long>(base * jitter)));
    }

    void add_usage(const TokenUsage& usage) {
        std::lock_guard lock(usage_mutex_);
        usage_.prompt += usage.prompt;
        usage_.completion += usage.completion;
    }

    std::shared_ptr<Provider> provider_;
    ProviderConfig config_;
    detail::Semaphore semaphore_;
    Sleeper sleeper_;
    mutable std::mutex usage_mutex_;
    TokenUsage usage_;
    std::mutex rng_mutex_;
    std::mt19937_64 rng_{0x5EEDF00DULL};
};

}  // namespace ctiforge::llm
