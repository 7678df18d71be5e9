#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctiforge/extract/ttp.hpp"
#include "ctiforge/llm/gateway.hpp"
#include "ctiforge/prompts.hpp"
#include "ctiforge/refine/apis.hpp"
#include "ctiforge/rulegen/validator.hpp"

namespace ctiforge::rulegen {

// ============================================================================
// Initial Sigma candidate generation per enriched paragraph
// ============================================================================

struct EnrichedCall {
    extract::ApiCallCandidate candidate;
    std::optional<extract::TtpAssignment> ttp;  // absent when the catalog guard dropped it
};

struct EnrichedParagraph {
    ingest::Paragraph paragraph;
    std::vector<EnrichedCall> api_calls;
};

struct CandidateBatch {
    int paragraph_index = 0;
    std::vector<sigma::SigmaRule> rules;
    std::vector<std::string> rejected;  // audit log lines for rejected drafts
    std::string model_name;
    std::string prompt_version;
    std::string generated_at;
};

struct GenerateOptions {
    std::string source_url;
    std::string author = "CTIForge";
    std::string run_date;  // empty = today
    double temperature = 0.7;
    std::string prompt_version = "v1";
    const extract::TtpCatalog* catalog = nullptr;
    bool enforce_coverage = true;  // off in the no-extractor ablation
};

namespace detail {

inline std::string render_enrichment(const EnrichedParagraph& ep) {
    if (ep.api_calls.empty()) return "(no API call enrichment available)";
    std::string out;
    for (const auto& call : ep.api_calls) {
        out += "- " + call.candidate.event_name;
        if (!call.candidate.event_source.empty())
            out += " (eventSource: " + call.candidate.event_source + ")";
        if (call.ttp) {
            out += " | tactic: " + call.ttp->tactic_slug +
                   " | technique: " + call.ttp->technique_id;
            if (!call.ttp->subtechnique_id.empty())
                out += " | sub-technique: " + call.ttp->subtechnique_id;
        }
        out += "\n";
    }
    return out;
}

inline std::string enriched_text(const EnrichedParagraph& ep, const std::string& source_url) {
    std::string out = ep.paragraph.body;
    out += "\n\nThreat actor API calls identified in this paragraph:\n";
    out += render_enrichment(ep);
    if (!source_url.empty()) out += "\nReport URL: " + source_url + "\n";
    return out;
}

/// Checks the batch-coverage postcondition: every enriched API call appears
/// in exactly one rule. Returns an empty string when satisfied.
inline std::string coverage_violation(const EnrichedParagraph& ep,
                                      const std::vector<sigma::SigmaRule>& rules) {
    std::string violation;
    for (const auto& call : ep.api_calls) {
        extract::ApiCallKey key = call.candidate.key();
        int hits = 0;
        for (const auto& rule : rules) {
            for (const auto& rule_key : refine::extract_apis(rule)) {
                if (refine::api_keys_match(key, rule_key)) {
                    ++hits;
                    break;
                }
            }
        }
        if (hits == 0)
            violation += "ApiCallMissing: " + key.str() + " appears in no rule. ";
        else if (hits > 1)
            violation += "ApiCallDuplicated: " + key.str() + " appears in " +
                         std::to_string(hits) + " rules. ";
    }
    return violation;
}

inline void force_generated_fields(Json& draft, const GenerateOptions& options) {
    draft["logsource"] = {{"product", "aws"}, {"service", "cloudtrail"}};
    draft["author"] = options.author;
    if (!options.source_url.empty()) {
        if (!draft.contains("references") || !draft["references"].is_array())
            draft["references"] = Json::array();
        bool present = false;
        for (const auto& ref : draft["references"])
            if (ref.is_string() && ref.get<std::string>() == options.source_url) present = true;
        if (!present) draft["references"].push_back(options.source_url);
    }
}

struct MappedBatch {
    std::vector<sigma::SigmaRule> rules;
    std::vector<std::string> rejected;
};

inline MappedBatch map_drafts(const Json& parsed, const GenerateOptions& options) {
    MappedBatch out;
    ValidateOptions validate_options;
    validate_options.author = options.author;
    validate_options.run_date = options.run_date;
    validate_options.catalog = options.catalog;
    for (const auto& raw : parsed["rules"]) {
        Json draft = raw;
        force_generated_fields(draft, options);
        auto rule = validate_rule(draft, validate_options);
        if (rule)
            out.rules.push_back(rule.take());
        else
            out.rejected.push_back(draft.value("title", "(untitled)") + ": " +
                                   rule.error().format());
    }
    return out;
}

}  // namespace detail

/// Generates the initial candidate batch for one enriched paragraph. The
/// batch must cover every enriched API call exactly once; a violation earns
/// one corrective re-prompt before failing with PostconditionViolation.
inline Result<CandidateBatch> generate_rules(const EnrichedParagraph& ep, llm::Gateway& gateway,
                                             const std::string& prompt_template,
                                             const GenerateOptions& options) {
    llm::LlmRequest request;
    request.system_prompt =
        "You are a cybersecurity analysis tool that generates Sigma rules from cloud "
        "threat intelligence.";
    request.user_content.push_back(llm::ContentPart::make_text(prompts::render(
        prompt_template,
        {{"ENRICHED_PARAGRAPH", detail::enriched_text(ep, options.source_url)}})));
    request.temperature = options.temperature;
    request.response_schema = std::string(llm::schemas::kRuleBatch);

    auto response = gateway.complete(request);
    if (!response) return response.error();
    auto mapped = detail::map_drafts(response.value().parsed, options);

    std::string violation =
        options.enforce_coverage ? detail::coverage_violation(ep, mapped.rules) : "";
    if (!violation.empty()) {
        llm::LlmRequest corrective = request;
        corrective.user_content.push_back(llm::ContentPart::make_text(
            "Your previous rule set violated the coverage requirement: " + violation +
            "Regenerate the full rule set so each listed API call appears in exactly one "
            "rule."));
        auto retry = gateway.complete(corrective);
        if (!retry) return retry.error();
        mapped = detail::map_drafts(retry.value().parsed, options);
        violation = detail::coverage_violation(ep, mapped.rules);
        if (!violation.empty())
            return Error{ErrorCode::PostconditionViolation, violation};
    }

    CandidateBatch batch;
    batch.paragraph_index = ep.paragraph.index;
    batch.rules = std::move(mapped.rules);
    batch.rejected = std::move(mapped.rejected);
    batch.model_name = gateway.config().model_name;
    batch.prompt_version = options.prompt_version;
    batch.generated_at = iso8601_now();
    return batch;
}

}  // namespace ctiforge::rulegen
