#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctiforge/extract/api_extractor.hpp"
#include "ctiforge/extract/ttp_catalog.hpp"

namespace ctiforge::extract {

// ============================================================================
// TTP assignment with catalog validation
// ============================================================================

struct TtpAssignment {
    std::string event_name;
    std::string event_source;
    std::string tactic_slug;     // e.g. "collection"
    std::string tactic_id;       // e.g. "TA0009"
    std::string technique_id;    // e.g. "T1530"
    std::string subtechnique_id;  // empty when none

    bool operator==(const TtpAssignment& other) const = default;
};

struct TtpOutcome {
    std::vector<TtpAssignment> assignments;  // candidate order, dropped ones omitted
    std::vector<std::string> warnings;
};

namespace detail {

inline llm::LlmRequest ttp_request(const ApiCallCandidate& candidate,
                                   const ingest::Paragraph& paragraph,
                                   const TtpCatalog& catalog,
                                   const std::string& prompt_template, double temperature) {
    llm::LlmRequest request;
    request.system_prompt = "You map AWS API calls to MITRE ATT&CK cloud TTPs.";
    request.user_content.push_back(llm::ContentPart::make_text(prompts::render(
        prompt_template, {{"CATALOG", catalog.raw().dump()},
                          {"EVENT_NAME", candidate.event_name},
                          {"EVENT_SOURCE", candidate.event_source},
                          {"PARAGRAPH", paragraph.body}})));
    request.temperature = temperature;
    request.response_schema = std::string(llm::schemas::kTtpAssignment);
    return request;
}

inline std::optional<TtpAssignment> parse_assignment(const Json& parsed,
                                                     const ApiCallCandidate& candidate,
                                                     const TtpCatalog& catalog) {
    std::string tactic = strings::to_lower(strings::trim(parsed.value("tactic", "")));
    std::string technique = strings::trim(parsed.value("technique", ""));
    std::string subtechnique = strings::trim(parsed.value("subTechnique", ""));
    if (!technique.empty()) technique[0] = static_cast<char>(std::toupper(technique[0]));
    if (!subtechnique.empty())
        subtechnique[0] = static_cast<char>(std::toupper(subtechnique[0]));
    if (!catalog.valid_assignment(tactic, technique, subtechnique)) return std::nullopt;
    TtpAssignment assignment;
    assignment.event_name = candidate.event_name;
    assignment.event_source = candidate.event_source;
    assignment.tactic_slug = tactic;
    assignment.tactic_id = catalog.tactics().at(tactic).id;
    assignment.technique_id = technique;
    assignment.subtechnique_id = subtechnique;
    return assignment;
}

}  // namespace detail

/// One assignment per candidate, each validated against the catalog. An
/// assignment that fails catalog lookup is re-requested once with a
/// corrective note, then dropped with a warning (never fatal).
inline TtpOutcome assign_ttps(const std::vector<ApiCallCandidate>& candidates,
                              const ingest::Paragraph& paragraph, const TtpCatalog& catalog,
                              llm::Gateway& gateway, const std::string& prompt_template,
                              double temperature = 0.5) {
    TtpOutcome outcome;
    if (candidates.empty()) return outcome;

    std::vector<llm::LlmRequest> requests;
    for (const auto& candidate : candidates)
        requests.push_back(
            detail::ttp_request(candidate, paragraph, catalog, prompt_template, temperature));
    auto responses = gateway.complete_batch(requests);

    // Collect catalog misses for one corrective round.
    std::vector<size_t> retry_indices;
    std::vector<std::optional<TtpAssignment>> resolved(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (!responses[i].ok()) {
            outcome.warnings.push_back("ttp request failed for " + candidates[i].event_name +
                                       ": " + responses[i].error().format());
            continue;
        }
        resolved[i] = detail::parse_assignment(responses[i].value().parsed, candidates[i],
                                               catalog);
        if (!resolved[i]) retry_indices.push_back(i);
    }

    if (!retry_indices.empty()) {
        std::vector<llm::LlmRequest> retries;
        for (size_t i : retry_indices) {
            llm::LlmRequest request = requests[i];
            request.user_content.push_back(llm::ContentPart::make_text(
                "Your previous assignment used identifiers that do not exist in the "
                "catalog. Choose a valid tactic/technique/sub-technique combination from "
                "the catalog JSON above."));
            retries.push_back(std::move(request));
        }
        auto retry_responses = gateway.complete_batch(retries);
        for (size_t r = 0; r < retry_indices.size(); ++r) {
            size_t i = retry_indices[r];
            if (retry_responses[r].ok())
                resolved[i] = detail::parse_assignment(retry_responses[r].value().parsed,
                                                       candidates[i], catalog);
            if (!resolved[i])
                outcome.warnings.push_back("dropped catalog-invalid TTP for " +
                                           candidates[i].event_name);
        }
    }

    for (auto& assignment : resolved)
        if (assignment) outcome.assignments.push_back(std::move(*assignment));
    return outcome;
}

}  // namespace ctiforge::extract
