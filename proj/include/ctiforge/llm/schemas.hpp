#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ctiforge/common.hpp"

namespace ctiforge::llm {

// ============================================================================
// Response schemas
//
// Every pipeline stage names the JSON shape it expects; the gateway rejects
// any response that fails its schema so malformed output never propagates
// downstream.
// ============================================================================

namespace schemas {

inline constexpr std::string_view kImageTranscript = "image_transcript";
inline constexpr std::string_view kApiCalls = "api_calls";
inline constexpr std::string_view kTtpAssignment = "ttp_assignment";
inline constexpr std::string_view kRuleBatch = "rule_batch";
inline constexpr std::string_view kRule = "rule";
inline constexpr std::string_view kSelectionIndex = "selection_index";
inline constexpr std::string_view kIocSet = "ioc_set";

}  // namespace schemas

namespace detail {

inline Status expect_string_array(const Json& node, const std::string& field) {
    if (!node.contains(field) || !node[field].is_array())
        return Error{ErrorCode::SchemaViolation, "missing array field '" + field + "'"};
    for (const auto& item : node[field]) {
        if (!item.is_string())
            return Error{ErrorCode::SchemaViolation, "'" + field + "' entries must be strings"};
    }
    return ok_status();
}

}  // namespace detail

/// Validates a parsed response against the named schema.
inline Status validate_schema(std::string_view schema, const Json& node) {
    if (!node.is_object())
        return Error{ErrorCode::SchemaViolation, "response must be a JSON object"};

    if (schema == schemas::kImageTranscript) {
        if (!node.contains("transcript") || !node["transcript"].is_string())
            return Error{ErrorCode::SchemaViolation, "missing string field 'transcript'"};
        return ok_status();
    }
    if (schema == schemas::kApiCalls) {
        if (!node.contains("api_calls") || !node["api_calls"].is_array())
            return Error{ErrorCode::SchemaViolation, "missing array field 'api_calls'"};
        for (const auto& call : node["api_calls"]) {
            if (!call.is_object() || !call.contains("eventName") ||
                !call["eventName"].is_string())
                return Error{ErrorCode::SchemaViolation,
                             "api_calls entries need a string 'eventName'"};
            if (call.contains("eventSource") && !call["eventSource"].is_string())
                return Error{ErrorCode::SchemaViolation, "'eventSource' must be a string"};
        }
        return ok_status();
    }
    if (schema == schemas::kTtpAssignment) {
        for (const char* field : {"tactic", "technique"}) {
            if (!node.contains(field) || !node[field].is_string())
                return Error{ErrorCode::SchemaViolation,
                             std::string("missing string field '") + field + "'"};
        }
        if (node.contains("subTechnique") && !node["subTechnique"].is_string())
            return Error{ErrorCode::SchemaViolation, "'subTechnique' must be a string"};
        return ok_status();
    }
    if (schema == schemas::kRuleBatch) {
        if (!node.contains("rules") || !node["rules"].is_array())
            return Error{ErrorCode::SchemaViolation, "missing array field 'rules'"};
        for (const auto& rule : node["rules"]) {
            if (!rule.is_object())
                return Error{ErrorCode::SchemaViolation, "'rules' entries must be objects"};
        }
        return ok_status();
    }
    if (schema == schemas::kRule) {
        if (!node.contains("rule") || !node["rule"].is_object())
            return Error{ErrorCode::SchemaViolation, "missing object field 'rule'"};
        return ok_status();
    }
    if (schema == schemas::kSelectionIndex) {
        if (!node.contains("selected_index") || !node["selected_index"].is_number_integer())
            return Error{ErrorCode::SchemaViolation, "missing integer field 'selected_index'"};
        return ok_status();
    }
    if (schema == schemas::kIocSet) {
        auto ips = detail::expect_string_array(node, "ip_addresses");
        if (!ips) return ips;
        return detail::expect_string_array(node, "user_agents");
    }
    return Error{ErrorCode::SchemaViolation, "unknown response schema '" + std::string(schema) + "'"};
}

}  // namespace ctiforge::llm
