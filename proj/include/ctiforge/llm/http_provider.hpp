#pragma once

#include <cstdlib>
#include <memory>
#include <string>

#include <httplib.h>

#include "ctiforge/llm/gateway.hpp"

namespace ctiforge::llm {

// ============================================================================
// Chat-completion HTTP adapter
//
// Speaks the common JSON chat wire format: POST <endpoint>/chat/completions
// with messages + response_format json_object, reads
// choices[0].message.content. The API key comes from the environment
// variable named in ProviderConfig.
// ============================================================================

class HttpProvider : public Provider {
public:
    explicit HttpProvider(ProviderConfig config) : config_(std::move(config)) {}

    Result<ProviderReply> complete(const LlmRequest& request) override {
        if (config_.endpoint_url.empty())
            return Error{ErrorCode::ProviderMisconfigured, "endpoint_url not set"};
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr)
            return Error{ErrorCode::ProviderMisconfigured,
                         "API key environment variable " + config_.api_key_env + " not set"};

        Json body;
        body["model"] = config_.model_name;
        body["temperature"] = request.temperature;
        body["max_tokens"] = request.max_output_tokens;
        body["response_format"] = {{"type", "json_object"}};
        Json messages = Json::array();
        if (!request.system_prompt.empty())
            messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
        Json content = Json::array();
        for (const auto& part : request.user_content) {
            switch (part.kind) {
                case ContentPart::Kind::Text:
                    content.push_back({{"type", "text"}, {"text", part.text}});
                    break;
                case ContentPart::Kind::ImageUrl:
                    content.push_back(
                        {{"type", "image_url"}, {"image_url", {{"url", part.url}}}});
                    break;
                case ContentPart::Kind::ImageBytes:
                    content.push_back(
                        {{"type", "image_url"},
                         {"image_url",
                          {{"url", "data:" + part.media_type + ";base64," + part.data}}}});
                    break;
            }
        }
        messages.push_back({{"role", "user"}, {"content", content}});
        body["messages"] = messages;

        auto [host, path_prefix] = split_endpoint(config_.endpoint_url);
        httplib::Client client(host);
        client.set_connection_timeout(config_.request_timeout_s, 0);
        client.set_read_timeout(config_.request_timeout_s, 0);
        client.set_bearer_token_auth(key);

        auto res = client.Post(path_prefix + "/chat/completions", body.dump(),
                               "application/json");
        if (!res) {
            if (res.error() == httplib::Error::ConnectionTimeout ||
                res.error() == httplib::Error::Read)
                return Error{ErrorCode::Timeout, httplib::to_string(res.error())};
            return Error{ErrorCode::Transport, httplib::to_string(res.error())};
        }
        if (res->status == 429)
            return Error{ErrorCode::RateLimited, "provider returned 429", 429};
        if (res->status != 200)
            return Error{ErrorCode::Transport,
                         "provider returned HTTP " + std::to_string(res->status), res->status};

        Json doc = Json::parse(res->body, nullptr, false);
        if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty())
            return Error{ErrorCode::Transport, "malformed provider response envelope"};
        ProviderReply reply;
        reply.raw_text = doc["choices"][0]["message"].value("content", "");
        if (doc.contains("usage")) {
            reply.usage.prompt = doc["usage"].value("prompt_tokens", 0LL);
            reply.usage.completion = doc["usage"].value("completion_tokens", 0LL);
        }
        return reply;
    }

    std::string name() const override { return "http(" + config_.model_name + ")"; }

private:
    // "https://api.example.com/v1" -> {"https://api.example.com", "/v1"}
    static std::pair<std::string, std::string> split_endpoint(const std::string& url) {
        size_t scheme = url.find("://");
        size_t path = scheme == std::string::npos ? url.find('/')
                                                  : url.find('/', scheme + 3);
        if (path == std::string::npos) return {url, ""};
        return {url.substr(0, path), url.substr(path)};
    }

    ProviderConfig config_;
};

}  // namespace ctiforge::llm
