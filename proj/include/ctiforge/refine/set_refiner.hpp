#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ctiforge/llm/gateway.hpp"
#include "ctiforge/prompts.hpp"
#include "ctiforge/refine/apis.hpp"
#include "ctiforge/rulegen/validator.hpp"

namespace ctiforge::refine {

// ============================================================================
// Set Refiner: cross-paragraph API call duplication removal.
//
// For each API pair appearing in several rules, one rule is selected to keep
// it; the others either lose the pair or, when the pair is all they detect,
// are dropped entirely. Terminates with no pair in more than one rule and
// never increases the rule count.
// ============================================================================

struct RuleSet {
    std::vector<sigma::SigmaRule> rules;
    std::vector<int> provenance;  // paragraph index per rule, parallel to rules

    bool operator==(const RuleSet& other) const = default;
};

struct RefineHooks {
    /// Chooses which of the common rules keeps the API pair; returns an index
    /// into `common`. An invalid answer falls back to the deterministic rule.
    std::function<Result<size_t>(const std::vector<const sigma::SigmaRule*>& common,
                                 const extract::ApiCallKey& api)>
        select_rule;
    /// Produces the rule with the API pair removed. A result that fails
    /// validation or still contains the pair falls back to mechanical removal.
    std::function<Result<sigma::SigmaRule>(const sigma::SigmaRule& rule,
                                           const extract::ApiCallKey& api)>
        remove_api;
};

namespace detail {

inline size_t criteria_count(const sigma::SigmaRule& rule) {
    size_t count = 0;
    for (const auto& [name, block] : rule.detection.selections) count += block.criteria.size();
    return count;
}

/// Deterministic fallback selection: the most specific rule (most criteria),
/// ties broken by the lowest paragraph index (position in `provenance`).
inline size_t fallback_select(const std::vector<const sigma::SigmaRule*>& common,
                              const std::vector<int>& provenance) {
    size_t best = 0;
    for (size_t i = 1; i < common.size(); ++i) {
        size_t best_count = criteria_count(*common[best]);
        size_t count = criteria_count(*common[i]);
        if (count > best_count ||
            (count == best_count && provenance[i] < provenance[best]))
            best = i;
    }
    return best;
}

inline bool rule_contains_api(const sigma::SigmaRule& rule, const extract::ApiCallKey& api) {
    for (const auto& key : extract_apis(rule))
        if (api_keys_match(key, api)) return true;
    return false;
}

}  // namespace detail

/// Deletes the eventName atom matching `api` from every selection targeting
/// that event source, drops selections this empties, and simplifies the
/// condition. Returns nullopt when nothing detectable survives.
inline std::optional<sigma::SigmaRule> mechanical_remove_api(sigma::SigmaRule rule,
                                                             const extract::ApiCallKey& api) {
    std::vector<std::string> removed_selections;
    for (auto& [name, block] : rule.detection.selections) {
        std::vector<std::string> sources;
        if (const sigma::FieldValue* source = block.find("eventSource")) {
            for (const auto& s : source->values) sources.push_back(strings::to_lower(s));
        } else {
            sources.push_back("");
        }
        bool source_matches = false;
        for (const auto& s : sources) {
            if (api.event_source.empty() || s.empty() || s == api.event_source)
                source_matches = true;
        }
        if (!source_matches) continue;

        std::vector<std::pair<sigma::FieldKey, sigma::FieldValue>> kept;
        for (auto& [key, value] : block.criteria) {
            if (!strings::iequals(key.path, "eventName")) {
                kept.emplace_back(key, value);
                continue;
            }
            std::vector<std::string> surviving;
            for (const auto& event_name : value.values)
                if (event_name != api.event_name) surviving.push_back(event_name);
            if (surviving.empty()) continue;  // the whole criterion goes
            if (surviving.size() == 1)
                kept.emplace_back(key, sigma::FieldValue::scalar(surviving[0]));
            else
                kept.emplace_back(key, sigma::FieldValue::list(std::move(surviving)));
        }
        block.criteria = std::move(kept);
        if (block.criteria.empty()) removed_selections.push_back(name);
    }

    if (!removed_selections.empty()) {
        std::vector<std::pair<std::string, sigma::SelectionBlock>> kept;
        for (auto& entry : rule.detection.selections) {
            bool removed = false;
            for (const auto& name : removed_selections)
                if (name == entry.first) removed = true;
            if (!removed) kept.push_back(std::move(entry));
        }
        rule.detection.selections = std::move(kept);
        auto pruned =
            sigma::prune_identifiers(rule.detection.condition, removed_selections);
        if (!pruned || rule.detection.selections.empty()) return std::nullopt;
        rule.detection.condition = pruned;
    }
    if (rule.detection.selections.empty()) return std::nullopt;
    return rule;
}

/// LLM-backed hooks for SelectRule / RemoveAPIFromRule.
inline RefineHooks llm_refine_hooks(llm::Gateway& gateway, const prompts::PromptSet& prompt_set,
                                    double temperature = 0.5,
                                    rulegen::ValidateOptions validate_options = {}) {
    RefineHooks hooks;
    hooks.select_rule = [&gateway, &prompt_set, temperature](
                            const std::vector<const sigma::SigmaRule*>& common,
                            const extract::ApiCallKey& api) -> Result<size_t> {
        Json candidates = Json::array();
        for (const auto* rule : common) candidates.push_back(sigma::to_draft_json(*rule));
        llm::LlmRequest request;
        request.system_prompt = "You select the best Sigma candidate for an API call.";
        request.user_content.push_back(llm::ContentPart::make_text(prompts::render(
            prompt_set.candidate_selector, {{"EVENT_NAME", api.event_name},
                                            {"EVENT_SOURCE", api.event_source},
                                            {"CANDIDATES", candidates.dump(2)}})));
        request.temperature = temperature;
        request.response_schema = std::string(llm::schemas::kSelectionIndex);
        auto response = gateway.complete(request);
        if (!response) return response.error();
        long long index = response.value().parsed["selected_index"].get<long long>();
        if (index < 0 || index >= static_cast<long long>(common.size()))
            return Error{ErrorCode::InvalidArgument, "selected_index out of range"};
        return static_cast<size_t>(index);
    };
    hooks.remove_api = [&gateway, &prompt_set, temperature, validate_options](
                           const sigma::SigmaRule& rule,
                           const extract::ApiCallKey& api) -> Result<sigma::SigmaRule> {
        llm::LlmRequest request;
        request.system_prompt = "You adjust Sigma rules by removing one API call.";
        request.user_content.push_back(llm::ContentPart::make_text(prompts::render(
            prompt_set.api_remover, {{"EVENT_NAME", api.event_name},
                                     {"EVENT_SOURCE", api.event_source},
                                     {"RULE", sigma::to_draft_json(rule).dump(2)}})));
        request.temperature = temperature;
        request.response_schema = std::string(llm::schemas::kRule);
        auto response = gateway.complete(request);
        if (!response) return response.error();
        rulegen::ValidateOptions opts = validate_options;
        if (opts.author == "CTIForge" && !rule.author.empty()) opts.author = rule.author;
        return rulegen::validate_rule(response.value().parsed["rule"], opts);
    };
    return hooks;
}

/// Deterministic hooks (no LLM): fallback selection and mechanical removal.
inline RefineHooks scripted_refine_hooks() {
    RefineHooks hooks;
    hooks.select_rule = [](const std::vector<const sigma::SigmaRule*>& common,
                           const extract::ApiCallKey&) -> Result<size_t> {
        std::vector<int> provenance(common.size(), 0);
        for (size_t i = 0; i < common.size(); ++i) provenance[i] = static_cast<int>(i);
        return detail::fallback_select(common, provenance);
    };
    hooks.remove_api = [](const sigma::SigmaRule& rule,
                          const extract::ApiCallKey& api) -> Result<sigma::SigmaRule> {
        auto adjusted = mechanical_remove_api(rule, api);
        if (!adjusted) return Error{ErrorCode::Rejected, "rule emptied"};
        return *adjusted;
    };
    return hooks;
}

/// Algorithm: collect the unique API pairs (lexicographic order), and for
/// each pair held by several rules, keep it in the selected rule only.
/// Non-selected rules holding nothing else are dropped; the rest have the
/// pair removed (hook result verified, mechanical removal as backstop).
inline RuleSet refine_set(RuleSet set, const RefineHooks& hooks) {
    std::set<extract::ApiCallKey> all_apis;
    for (const auto& rule : set.rules)
        for (const auto& key : extract_apis(rule)) all_apis.insert(key);

    std::vector<bool> alive(set.rules.size(), true);

    for (const auto& api : all_apis) {  // std::set iterates lexicographically
        std::vector<size_t> common_indices;
        for (size_t i = 0; i < set.rules.size(); ++i)
            if (alive[i] && detail::rule_contains_api(set.rules[i], api))
                common_indices.push_back(i);
        if (common_indices.size() <= 1) continue;

        std::vector<const sigma::SigmaRule*> common;
        std::vector<int> provenance;
        for (size_t index : common_indices) {
            common.push_back(&set.rules[index]);
            provenance.push_back(set.provenance[index]);
        }
        size_t selected = detail::fallback_select(common, provenance);
        if (hooks.select_rule) {
            auto choice = hooks.select_rule(common, api);
            if (choice.ok() && choice.value() < common.size()) selected = choice.value();
        }

        for (size_t c = 0; c < common_indices.size(); ++c) {
            if (c == selected) continue;
            size_t index = common_indices[c];
            const sigma::SigmaRule& rule = set.rules[index];
            if (extract_apis(rule).size() == 1) {
                alive[index] = false;  // single-API rule not selected: drop it
                continue;
            }
            std::optional<sigma::SigmaRule> adjusted;
            if (hooks.remove_api) {
                auto attempt = hooks.remove_api(rule, api);
                // The adjusted rule must have lost the pair and nothing may
                // have been invented; otherwise fall back to mechanics.
                if (attempt.ok() && !detail::rule_contains_api(attempt.value(), api)) {
                    auto before = extract_apis(rule);
                    bool invented = false;
                    for (const auto& key : extract_apis(attempt.value()))
                        if (before.count(key) == 0) invented = true;
                    if (!invented) adjusted = attempt.take();
                }
            }
            if (!adjusted) adjusted = mechanical_remove_api(rule, api);
            if (!adjusted) {
                alive[index] = false;
            } else {
                set.rules[index] = std::move(*adjusted);
            }
        }
    }

    RuleSet out;
    for (size_t i = 0; i < set.rules.size(); ++i) {
        if (!alive[i]) continue;
        out.rules.push_back(std::move(set.rules[i]));
        out.provenance.push_back(set.provenance[i]);
    }
    return out;
}

}  // namespace ctiforge::refine
