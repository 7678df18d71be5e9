#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "ctiforge/llm/gateway.hpp"

namespace ctiforge::llm {

// ============================================================================
// Replay fixtures
//
// A fixture file is a JSON object: request-hash -> {response, usage, meta}.
// The hash covers prompt content, temperature, and schema name (see
// request_hash), so identical request bytes always replay identically.
// ============================================================================

class FixtureStore {
public:
    struct Entry {
        std::string raw_text;
        TokenUsage usage;
        std::string schema;   // meta, for `fixtures list`
        std::string summary;  // meta, first line of user content
    };

    static Result<FixtureStore> load(const std::filesystem::path& path) {
        FixtureStore store;
        store.path_ = path;
        if (!std::filesystem::exists(path)) return store;  // empty store, will create on save
        std::ifstream in(path);
        if (!in) return Error{ErrorCode::Io, "cannot open fixture file " + path.string()};
        Json doc = Json::parse(in, nullptr, false);
        if (doc.is_discarded())
            return Error{ErrorCode::Io, "fixture file is not valid JSON: " + path.string()};
        for (const auto& [hash, node] : doc.items()) {
            Entry entry;
            entry.raw_text = node.value("response", "");
            entry.usage.prompt = node.value("prompt_tokens", 0LL);
            entry.usage.completion = node.value("completion_tokens", 0LL);
            entry.schema = node.value("schema", "");
            entry.summary = node.value("summary", "");
            store.entries_[hash] = std::move(entry);
        }
        return store;
    }

    Status save() const {
        Json doc = Json::object();
        for (const auto& [hash, entry] : entries_) {
            doc[hash] = {{"response", entry.raw_text},
                         {"prompt_tokens", entry.usage.prompt},
                         {"completion_tokens", entry.usage.completion},
                         {"schema", entry.schema},
                         {"summary", entry.summary}};
        }
        if (path_.has_parent_path()) {
            std::error_code ec;
            std::filesystem::create_directories(path_.parent_path(), ec);
        }
        std::ofstream out(path_);
        if (!out) return Error{ErrorCode::Io, "cannot write fixture file " + path_.string()};
        out << doc.dump(2) << "\n";
        return ok_status();
    }

    /// Stores request-hash -> response.
    void put(const LlmRequest& request, const ProviderReply& reply) {
        Entry entry;
        entry.raw_text = reply.raw_text;
        entry.usage = reply.usage;
        entry.schema = request.response_schema;
        for (const auto& part : request.user_content) {
            if (part.kind == ContentPart::Kind::Text && !part.text.empty()) {
                entry.summary = part.text.substr(0, 80);
                break;
            }
        }
        entries_[request_hash(request)] = std::move(entry);
    }

    Result<ProviderReply> get(const LlmRequest& request) const {
        auto it = entries_.find(request_hash(request));
        if (it == entries_.end())
            return Error{ErrorCode::MissingFixture,
                         "no fixture for request hash " + request_hash(request)};
        return ProviderReply{it->second.raw_text, it->second.usage};
    }

    const std::map<std::string, Entry>& entries() const { return entries_; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::map<std::string, Entry> entries_;
};

/// Records a fixture through a store owned elsewhere (the `fixtures record`
/// path); answers later queries by hash.
inline void record_replay_fixture(FixtureStore& store, const LlmRequest& request,
                                  const ProviderReply& reply) {
    store.put(request, reply);
}

// ============================================================================
// Providers
// ============================================================================

/// Deterministic offline provider answering from a fixture store.
class ReplayProvider : public Provider {
public:
    explicit ReplayProvider(FixtureStore store) : store_(std::move(store)) {}

    Result<ProviderReply> complete(const LlmRequest& request) override {
        return store_.get(request);
    }
    std::string name() const override { return "replay"; }

    const FixtureStore& store() const { return store_; }

private:
    FixtureStore store_;  // immutable after construction; safe concurrently
};

/// Pass-through provider that records every successful reply into a store.
class RecordingProvider : public Provider {
public:
    RecordingProvider(std::shared_ptr<Provider> inner, FixtureStore store)
        : inner_(std::move(inner)), store_(std::move(store)) {}

    Result<ProviderReply> complete(const LlmRequest& request) override {
        auto reply = inner_->complete(request);
        if (reply) {
            std::lock_guard lock(mutex_);
            store_.put(request, reply.value());
        }
        return reply;
    }
    std::string name() const override { return "recording(" + inner_->name() + ")"; }

    Status flush() {
        std::lock_guard lock(mutex_);
        return store_.save();
    }
    const FixtureStore& store() const { return store_; }

private:
    std::shared_ptr<Provider> inner_;
    std::mutex mutex_;
    FixtureStore store_;
};

}  // namespace ctiforge::llm
