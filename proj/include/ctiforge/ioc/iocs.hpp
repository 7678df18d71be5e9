#pragma once

#include <arpa/inet.h>

#include <optional>
#include <string>
#include <vector>

#include "ctiforge/llm/gateway.hpp"
#include "ctiforge/prompts.hpp"
#include "ctiforge/refine/set_refiner.hpp"

namespace ctiforge::ioc {

// ============================================================================
// IoC extraction (explicit IPs and user agents from the full document text)
// ============================================================================

struct IocSet {
    std::vector<std::string> ip_addresses;  // canonical form, first-appearance order
    std::vector<std::string> user_agents;   // deduplicated, first-appearance order

    bool empty() const { return ip_addresses.empty() && user_agents.empty(); }

    bool operator==(const IocSet& other) const = default;
};

inline Json to_json(const IocSet& iocs) {
    return Json{{"schema_version", 1},
                {"ip_addresses", iocs.ip_addresses},
                {"user_agents", iocs.user_agents}};
}

inline IocSet ioc_set_from_json(const Json& node) {
    IocSet out;
    for (const auto& ip : node.value("ip_addresses", Json::array()))
        out.ip_addresses.push_back(ip.get<std::string>());
    for (const auto& ua : node.value("user_agents", Json::array()))
        out.user_agents.push_back(ua.get<std::string>());
    return out;
}

// ----------------------------------------------------------------------------
// Deobfuscation
// ----------------------------------------------------------------------------

/// Rewrites defanged indicators to canonical form: "[.]" and "(.)" become
/// ".", " dot " becomes "." between digits, "hxxp" becomes "http" (which also
/// turns hxxps into https). Pure and idempotent.
inline std::string deobfuscate(std::string text) {
    text = strings::replace_all(std::move(text), "[.]", ".");
    text = strings::replace_all(std::move(text), "(.)", ".");
    text = strings::replace_all(std::move(text), "hxxp", "http");
    // " dot " only in IP context: both neighbors must be digits.
    const std::string marker = " dot ";
    size_t pos = 0;
    while ((pos = text.find(marker, pos)) != std::string::npos) {
        bool digit_before = pos > 0 && std::isdigit(static_cast<unsigned char>(text[pos - 1]));
        size_t after = pos + marker.size();
        bool digit_after =
            after < text.size() && std::isdigit(static_cast<unsigned char>(text[after]));
        if (digit_before && digit_after) {
            text.replace(pos, marker.size(), ".");
            ++pos;
        } else {
            pos += marker.size();
        }
    }
    return text;
}

/// Canonical dotted/colon form via inet_pton round-trip; nullopt when the
/// text is not a syntactically valid IPv4/IPv6 address.
inline std::optional<std::string> canonicalize_ip(const std::string& text) {
    unsigned char buffer[16];
    char out[INET6_ADDRSTRLEN];
    if (inet_pton(AF_INET, text.c_str(), buffer) == 1) {
        if (inet_ntop(AF_INET, buffer, out, sizeof(out)) != nullptr) return std::string(out);
    }
    if (inet_pton(AF_INET6, text.c_str(), buffer) == 1) {
        if (inet_ntop(AF_INET6, buffer, out, sizeof(out)) != nullptr) return std::string(out);
    }
    return std::nullopt;
}

// ----------------------------------------------------------------------------
// Extraction
// ----------------------------------------------------------------------------

struct IocOutcome {
    IocSet iocs;
    std::vector<std::string> warnings;  // dropped syntactically invalid IPs
};

/// Extracts explicit IoCs from the full (unfiltered) document text — the
/// filtered variant may have dropped the IoC sections. Deobfuscates results;
/// syntactically invalid IPs are dropped with a warning.
inline Result<IocOutcome> extract_iocs(const std::string& full_text, llm::Gateway& gateway,
                                       const std::string& prompt_template,
                                       double temperature = 0.5) {
    llm::LlmRequest request;
    request.system_prompt = "You extract indicators of compromise from threat reports.";
    request.user_content.push_back(llm::ContentPart::make_text(
        prompts::render(prompt_template, {{"FULL_TEXT", full_text}})));
    request.temperature = temperature;
    request.response_schema = std::string(llm::schemas::kIocSet);

    auto response = gateway.complete(request);
    if (!response) return response.error();

    IocOutcome outcome;
    for (const auto& raw : response.value().parsed["ip_addresses"]) {
        std::string cleaned = strings::trim(deobfuscate(raw.get<std::string>()));
        auto canonical = canonicalize_ip(cleaned);
        if (!canonical) {
            outcome.warnings.push_back("dropping invalid IP '" + raw.get<std::string>() + "'");
            continue;
        }
        bool seen = false;
        for (const auto& existing : outcome.iocs.ip_addresses)
            if (existing == *canonical) seen = true;
        if (!seen) outcome.iocs.ip_addresses.push_back(*canonical);
    }
    for (const auto& raw : response.value().parsed["user_agents"]) {
        std::string cleaned = strings::trim(deobfuscate(raw.get<std::string>()));
        if (cleaned.empty()) continue;
        bool seen = false;
        for (const auto& existing : outcome.iocs.user_agents)
            if (existing == cleaned) seen = true;
        if (!seen) outcome.iocs.user_agents.push_back(cleaned);
    }
    return outcome;
}

// ----------------------------------------------------------------------------
// Enhancement (deterministic; no LLM involved)
// ----------------------------------------------------------------------------

namespace detail {

inline std::string fresh_selection_name(const sigma::SigmaRule& rule, std::string base) {
    if (rule.detection.find(base) == nullptr) return base;
    return base + "_2";
}

inline sigma::FieldValue ioc_value(const std::vector<std::string>& values) {
    if (values.size() == 1) return sigma::FieldValue::scalar(values[0]);
    return sigma::FieldValue::list(values);
}

}  // namespace detail

/// Adds IoC selections to one rule and rewrites the condition to
/// And(original, Or(ip, ua)), the Or degenerating when only one IoC type is
/// present. The original condition survives verbatim as the left conjunct.
inline sigma::SigmaRule enhance_rule(sigma::SigmaRule rule, const IocSet& iocs) {
    if (iocs.empty()) return rule;

    std::optional<std::string> ip_name;
    if (!iocs.ip_addresses.empty()) {
        ip_name = detail::fresh_selection_name(rule, "selection_ip_address");
        sigma::SelectionBlock block;
        block.criteria.emplace_back(sigma::FieldKey{"sourceIPAddress", ""},
                                    detail::ioc_value(iocs.ip_addresses));
        rule.detection.selections.emplace_back(*ip_name, std::move(block));
    }
    std::optional<std::string> ua_name;
    if (!iocs.user_agents.empty()) {
        ua_name = detail::fresh_selection_name(rule, "selection_user_agent");
        sigma::SelectionBlock block;
        block.criteria.emplace_back(sigma::FieldKey{"userAgent", "contains"},
                                    detail::ioc_value(iocs.user_agents));
        rule.detection.selections.emplace_back(*ua_name, std::move(block));
    }

    sigma::ConditionPtr ioc_expr;
    if (ip_name && ua_name)
        ioc_expr = sigma::ConditionExpr::disjunction(
            sigma::ConditionExpr::identifier(*ip_name),
            sigma::ConditionExpr::identifier(*ua_name));
    else
        ioc_expr = sigma::ConditionExpr::identifier(ip_name ? *ip_name : *ua_name);
    rule.detection.condition =
        sigma::ConditionExpr::conjunction(rule.detection.condition, ioc_expr);
    return rule;
}

/// Every rule receives the same document-level IoC set.
inline refine::RuleSet enhance_rules(refine::RuleSet set, const IocSet& iocs) {
    if (iocs.empty()) return set;
    for (auto& rule : set.rules) rule = enhance_rule(std::move(rule), iocs);
    return set;
}

}  // namespace ctiforge::ioc
