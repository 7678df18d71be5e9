#pragma once

#include <set>
#include <string>
#include <vector>

#include "ctiforge/extract/voting.hpp"
#include "ctiforge/ingest/document.hpp"
#include "ctiforge/llm/gateway.hpp"
#include "ctiforge/prompts.hpp"

namespace ctiforge::extract {

// ============================================================================
// Paragraph-level API call extraction (explicit pass, then implicit pass on
// paragraphs that survived the explicit gate)
// ============================================================================

enum class CallOrigin { Explicit, Implicit };

struct ApiCallCandidate {
    std::string event_name;
    std::string event_source;  // lowercase canonical
    int votes = 0;
    CallOrigin origin = CallOrigin::Explicit;
    int paragraph_index = 0;

    ApiCallKey key() const { return ApiCallKey{event_name, event_source}; }

    bool operator==(const ApiCallCandidate& other) const = default;
};

struct ExtractionOutcome {
    std::vector<ApiCallCandidate> candidates;
    std::vector<std::string> warnings;  // per-run failures counted as abstentions
};

inline Json to_json(const ApiCallCandidate& candidate) {
    return Json{{"event_name", candidate.event_name},
                {"event_source", candidate.event_source},
                {"votes", candidate.votes},
                {"origin", candidate.origin == CallOrigin::Explicit ? "explicit" : "implicit"},
                {"paragraph_index", candidate.paragraph_index}};
}

inline ApiCallCandidate api_call_candidate_from_json(const Json& node) {
    ApiCallCandidate candidate;
    candidate.event_name = node.value("event_name", "");
    candidate.event_source = node.value("event_source", "");
    candidate.votes = node.value("votes", 0);
    candidate.origin = node.value("origin", "explicit") == "implicit" ? CallOrigin::Implicit
                                                                      : CallOrigin::Explicit;
    candidate.paragraph_index = node.value("paragraph_index", 0);
    return candidate;
}

namespace detail {

inline std::string render_call_list(const std::vector<ApiCallCandidate>& calls) {
    if (calls.empty()) return "(none)";
    std::string out;
    for (const auto& call : calls) {
        out += "- " + call.event_name;
        if (!call.event_source.empty()) out += " (" + call.event_source + ")";
        out += "\n";
    }
    return out;
}

inline std::set<ApiCallKey> parse_run(const Json& parsed) {
    std::set<ApiCallKey> run;
    for (const auto& call : parsed["api_calls"]) {
        std::string name = call.value("eventName", "");
        if (strings::trim(name).empty()) continue;
        run.insert(normalize_api_call(name, call.value("eventSource", "")));
    }
    return run;
}

struct VotingRuns {
    std::vector<std::set<ApiCallKey>> runs;
    std::vector<std::string> warnings;
};

inline VotingRuns run_voting(llm::Gateway& gateway, const llm::LlmRequest& request, int n,
                             const char* stage) {
    VotingRuns out;
    std::vector<llm::LlmRequest> batch(static_cast<size_t>(n), request);
    auto responses = gateway.complete_batch(batch);
    for (const auto& response : responses) {
        if (response.ok()) {
            out.runs.push_back(parse_run(response.value().parsed));
        } else {
            // A failed run abstains; it never contributes votes.
            out.warnings.push_back(std::string(stage) +
                                   " run failed: " + response.error().format());
        }
    }
    return out;
}

}  // namespace detail

/// Explicit pass: n identical requests at the given temperature; candidates
/// reaching t_explicit votes survive. An empty result means the caller should
/// discard the paragraph.
inline ExtractionOutcome extract_explicit(const ingest::Paragraph& paragraph,
                                          const VotingConfig& cfg, llm::Gateway& gateway,
                                          const std::string& prompt_template,
                                          double temperature = 0.0) {
    ExtractionOutcome outcome;

    llm::LlmRequest request;
    request.system_prompt = "You extract AWS API calls from threat-report paragraphs.";
    request.user_content.push_back(llm::ContentPart::make_text(
        prompts::render(prompt_template, {{"PARAGRAPH", paragraph.body}})));
    request.temperature = temperature;
    request.response_schema = std::string(llm::schemas::kApiCalls);

    auto voting = detail::run_voting(gateway, request, cfg.n_explicit, "explicit");
    outcome.warnings = std::move(voting.warnings);

    for (const auto& [key, votes] : vote_tally(voting.runs, cfg.t_explicit)) {
        ApiCallCandidate candidate;
        candidate.event_name = key.event_name;
        candidate.event_source = key.event_source;
        candidate.votes = votes;
        candidate.origin = CallOrigin::Explicit;
        candidate.paragraph_index = paragraph.index;
        outcome.candidates.push_back(std::move(candidate));
    }
    return outcome;
}

/// Implicit pass over a paragraph that passed the explicit gate: 2x the runs,
/// few-shot prompt carries the explicit candidates, threshold t_implicit.
/// Candidates duplicating an explicit call are dropped.
inline ExtractionOutcome extract_implicit(const ingest::Paragraph& paragraph,
                                          const std::vector<ApiCallCandidate>& explicit_calls,
                                          const VotingConfig& cfg, llm::Gateway& gateway,
                                          const std::string& prompt_template,
                                          double temperature = 0.9) {
    ExtractionOutcome outcome;

    llm::LlmRequest request;
    request.system_prompt = "You infer AWS API calls implied by threat-report paragraphs.";
    request.user_content.push_back(llm::ContentPart::make_text(prompts::render(
        prompt_template, {{"PARAGRAPH", paragraph.body},
                          {"EXPLICIT_CALLS", detail::render_call_list(explicit_calls)}})));
    request.temperature = temperature;
    request.response_schema = std::string(llm::schemas::kApiCalls);

    auto voting = detail::run_voting(gateway, request, cfg.n_implicit(), "implicit");
    outcome.warnings = std::move(voting.warnings);

    std::set<ApiCallKey> known;
    for (const auto& call : explicit_calls) known.insert(call.key());

    for (const auto& [key, votes] : vote_tally(voting.runs, cfg.t_implicit)) {
        if (known.count(key) > 0) continue;
        ApiCallCandidate candidate;
        candidate.event_name = key.event_name;
        candidate.event_source = key.event_source;
        candidate.votes = votes;
        candidate.origin = CallOrigin::Implicit;
        candidate.paragraph_index = paragraph.index;
        outcome.candidates.push_back(std::move(candidate));
    }
    return outcome;
}

}  // namespace ctiforge::extract
