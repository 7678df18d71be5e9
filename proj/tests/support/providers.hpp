#pragma once

// Provider doubles for gateway, extraction, and pipeline tests.

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "ctiforge/llm/gateway.hpp"

namespace ctiforge::testing {

/// Answers with a user-supplied function.
class LambdaProvider : public llm::Provider {
public:
    using Fn = std::function<Result<llm::ProviderReply>(const llm::LlmRequest&)>;

    explicit LambdaProvider(Fn fn) : fn_(std::move(fn)) {}

    Result<llm::ProviderReply> complete(const llm::LlmRequest& request) override {
        ++calls_;
        return fn_(request);
    }
    std::string name() const override { return "lambda"; }

    int calls() const { return calls_.load(); }

private:
    Fn fn_;
    std::atomic<int> calls_{0};
};

/// Plays back scripted replies in call order (use max_concurrent_requests=1
/// for a deterministic order).
class SequenceProvider : public llm::Provider {
public:
    explicit SequenceProvider(std::vector<Result<llm::ProviderReply>> replies)
        : replies_(std::move(replies)) {}

    Result<llm::ProviderReply> complete(const llm::LlmRequest&) override {
        size_t index = next_.fetch_add(1);
        if (index >= replies_.size())
            return Error{ErrorCode::Transport, "sequence exhausted"};
        return replies_[index];
    }
    std::string name() const override { return "sequence"; }

    int calls() const { return static_cast<int>(next_.load()); }

private:
    std::vector<Result<llm::ProviderReply>> replies_;
    std::atomic<size_t> next_{0};
};

/// Tracks the number of simultaneously in-flight complete() calls.
class InstrumentedProvider : public llm::Provider {
public:
    explicit InstrumentedProvider(std::string reply_json,
                                  std::chrono::milliseconds delay = std::chrono::milliseconds(20))
        : reply_json_(std::move(reply_json)), delay_(delay) {}

    Result<llm::ProviderReply> complete(const llm::LlmRequest&) override {
        int now = ++in_flight_;
        int seen = max_in_flight_.load();
        while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(delay_);
        --in_flight_;
        return llm::ProviderReply{reply_json_, {10, 5}};
    }
    std::string name() const override { return "instrumented"; }

    int max_in_flight() const { return max_in_flight_.load(); }

private:
    std::string reply_json_;
    std::chrono::milliseconds delay_;
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
};

inline llm::ProviderReply reply(std::string json) {
    return llm::ProviderReply{std::move(json), {10, 5}};
}

inline std::shared_ptr<llm::Gateway> make_gateway(std::shared_ptr<llm::Provider> provider,
                                                  int max_retries = 2,
                                                  int max_concurrent = 4) {
    llm::ProviderConfig config;
    config.max_retries = max_retries;
    config.max_concurrent_requests = max_concurrent;
    auto gateway = std::make_shared<llm::Gateway>(std::move(provider), config);
    gateway->set_sleeper([](std::chrono::milliseconds) {});  // no real backoff in tests
    return gateway;
}

}  // namespace ctiforge::testing
