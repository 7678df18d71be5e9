#pragma once

#include <set>
#include <string>

#include "ctiforge/llm/gateway.hpp"
#include "ctiforge/prompts.hpp"
#include "ctiforge/refine/apis.hpp"
#include "ctiforge/rulegen/validator.hpp"

namespace ctiforge::refine {

// ============================================================================
// Rule Optimizer: selection unification / separation via the LLM, with a
// fail-safe contract — a rule never gets worse, at most it stays unchanged.
// ============================================================================

struct OptimizeOptions {
    double temperature = 0.5;
    rulegen::ValidateOptions validate;
};

namespace detail {

/// Separation may legitimately narrow a malformed selection's cartesian
/// (source x name) blow-up, so the guard is: no invented API pairs, and the
/// set of event names must survive intact.
inline bool optimizer_kept_apis(const sigma::SigmaRule& before,
                                const sigma::SigmaRule& after) {
    auto apis_before = extract_apis(before);
    auto apis_after = extract_apis(after);
    std::set<std::string> names_before, names_after;
    for (const auto& key : apis_before) names_before.insert(key.event_name);
    for (const auto& key : apis_after) {
        if (apis_before.count(key) == 0) return false;
        names_after.insert(key.event_name);
    }
    return names_before == names_after;
}

}  // namespace detail

/// Asks the LLM to unify selections sharing the same filtering logic and to
/// separate selections mixing unrelated logic. The optimized rule must pass
/// validation, reference exactly its selections (condition soundness), and
/// neither invent nor lose detected API calls; otherwise the input rule is
/// returned unchanged.
inline sigma::SigmaRule optimize_rule(const sigma::SigmaRule& rule, llm::Gateway& gateway,
                                      const std::string& prompt_template,
                                      const OptimizeOptions& options = {}) {
    llm::LlmRequest request;
    request.system_prompt = "You optimize the detection logic of Sigma rules.";
    request.user_content.push_back(llm::ContentPart::make_text(prompts::render(
        prompt_template, {{"RULE", sigma::to_draft_json(rule).dump(2)}})));
    request.temperature = options.temperature;
    request.response_schema = std::string(llm::schemas::kRule);

    auto response = gateway.complete(request);
    if (!response) return rule;

    rulegen::ValidateOptions validate_options = options.validate;
    if (validate_options.author == "CTIForge" && !rule.author.empty())
        validate_options.author = rule.author;
    auto optimized = rulegen::validate_rule(response.value().parsed["rule"], validate_options);
    if (!optimized) return rule;
    if (!detail::optimizer_kept_apis(rule, optimized.value())) return rule;
    return optimized.take();
}

}  // namespace ctiforge::refine
