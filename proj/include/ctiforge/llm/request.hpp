#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctiforge/common.hpp"

namespace ctiforge::llm {

// ============================================================================
// Requests / responses
// ============================================================================

struct ContentPart {
    enum class Kind { Text, ImageUrl, ImageBytes };

    Kind kind = Kind::Text;
    std::string text;        // Text
    std::string url;         // ImageUrl
    std::string data;        // ImageBytes, base64-encoded
    std::string media_type;  // ImageBytes, e.g. "image/png"

    static ContentPart make_text(std::string t) {
        ContentPart part;
        part.text = std::move(t);
        return part;
    }
    static ContentPart image_url(std::string u) {
        ContentPart part;
        part.kind = Kind::ImageUrl;
        part.url = std::move(u);
        return part;
    }
    static ContentPart image_bytes(std::string base64, std::string media_type) {
        ContentPart part;
        part.kind = Kind::ImageBytes;
        part.data = std::move(base64);
        part.media_type = std::move(media_type);
        return part;
    }
};

struct LlmRequest {
    std::string system_prompt;
    std::vector<ContentPart> user_content;
    double temperature = 0.0;           // [0, 2]
    std::string response_schema;        // name of the expected JSON shape
    int max_output_tokens = 4096;

    Status validate() const {
        if (temperature < 0.0 || temperature > 2.0)
            return Error{ErrorCode::InvalidArgument, "temperature must be within [0, 2]"};
        if (user_content.empty())
            return Error{ErrorCode::InvalidArgument, "request needs at least one content part"};
        return ok_status();
    }
};

struct TokenUsage {
    long long prompt = 0;
    long long completion = 0;
};

struct LlmResponse {
    std::string raw_text;
    Json parsed;
    TokenUsage usage;
    int retry_count = 0;
};

/// What a provider returns before schema validation.
struct ProviderReply {
    std::string raw_text;
    TokenUsage usage;
};

struct ProviderConfig {
    std::string endpoint_url;
    std::string model_name = "replay";
    std::string api_key_env = "CTIFORGE_API_KEY";  // name of the secret source
    int request_timeout_s = 120;
    int max_retries = 2;
    int max_concurrent_requests = 8;

    Status validate() const {
        if (max_concurrent_requests < 1)
            return Error{ErrorCode::InvalidArgument, "max_concurrent_requests must be >= 1"};
        return ok_status();
    }
};

// ============================================================================
// Request hashing
//
// The hash covers system prompt, user content, temperature, and schema name —
// not timestamps or provider settings — so replay fixtures stay stable.
// ============================================================================

inline std::string request_hash(const LlmRequest& request) {
    Json canonical;
    canonical["system"] = request.system_prompt;
    char temp_buf[32];
    std::snprintf(temp_buf, sizeof(temp_buf), "%.4f", request.temperature);
    canonical["temperature"] = temp_buf;
    canonical["schema"] = request.response_schema;
    Json parts = Json::array();
    for (const auto& part : request.user_content) {
        switch (part.kind) {
            case ContentPart::Kind::Text:
                parts.push_back({{"t", part.text}});
                break;
            case ContentPart::Kind::ImageUrl:
                parts.push_back({{"u", part.url}});
                break;
            case ContentPart::Kind::ImageBytes:
                parts.push_back({{"b", to_hex(fnv1a64(part.data))}, {"m", part.media_type}});
                break;
        }
    }
    canonical["parts"] = parts;
    return to_hex(fnv1a64(canonical.dump()));
}

}  // namespace ctiforge::llm
