#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctiforge/eval/metrics.hpp"
#include "ctiforge/refine/set_refiner.hpp"
#include "ctiforge/sigma/compile.hpp"

namespace ctiforge::eval {

// ============================================================================
// Sigma-candidate quality criteria: executability and condition accuracy are
// automated; criticality accuracy and descriptive alignment are recorded
// from manual annotation files when supplied.
// ============================================================================

struct CandidateVerdict {
    std::string rule_id;  // rule id when present, else title
    bool executable = false;
    bool condition_accurate = false;
    std::optional<bool> criticality_accurate;  // manual
    std::optional<bool> descriptive_aligned;   // manual
};

struct CandidateSummary {
    std::vector<CandidateVerdict> verdicts;
    int total = 0;
    int executable = 0;
    int condition_accurate = 0;
    int criticality_annotated = 0;
    int criticality_accurate = 0;
    int descriptive_annotated = 0;
    int descriptive_aligned = 0;

    double executable_pct() const {
        return total == 0 ? 0.0 : 100.0 * executable / total;
    }
    double condition_accuracy_pct() const {
        return total == 0 ? 0.0 : 100.0 * condition_accurate / total;
    }
};

namespace detail {

inline std::string verdict_key(const sigma::SigmaRule& rule) {
    return rule.id ? *rule.id : rule.title;
}

/// Condition accuracy: the condition parses and references exactly the
/// defined selections (the automated proxy for a human condition check).
inline bool condition_accurate(const sigma::SigmaRule& rule) {
    if (!rule.detection.condition) return false;
    auto referenced = sigma::referenced_identifiers(rule.detection.condition);
    if (referenced.size() != rule.detection.selections.size()) return false;
    for (const auto& ident : referenced)
        if (rule.detection.find(ident) == nullptr) return false;
    return true;
}

}  // namespace detail

/// Manual annotations: rule id/title -> the two human-judged verdicts.
/// Example: {"Access to Terraform File": {"criticality_accurate": true,
/// "descriptive_aligned": true}}
inline Result<CandidateSummary> check_candidates(const refine::RuleSet& set,
                                                 const Json& annotations = Json::object()) {
    CandidateSummary summary;
    summary.total = static_cast<int>(set.rules.size());

    std::set<std::string> known_keys;
    for (const auto& rule : set.rules) known_keys.insert(detail::verdict_key(rule));
    for (const auto& [key, value] : annotations.items()) {
        if (known_keys.count(key) == 0)
            return Error{ErrorCode::AnnotationMismatch,
                         "annotation references unknown rule '" + key + "'"};
        if (!value.is_object())
            return Error{ErrorCode::AnnotationMismatch,
                         "annotation for '" + key + "' must be an object"};
    }

    for (const auto& rule : set.rules) {
        CandidateVerdict verdict;
        verdict.rule_id = detail::verdict_key(rule);
        verdict.executable = sigma::compile_rule(rule).ok();
        verdict.condition_accurate = detail::condition_accurate(rule);
        if (annotations.contains(verdict.rule_id)) {
            const auto& note = annotations[verdict.rule_id];
            if (note.contains("criticality_accurate"))
                verdict.criticality_accurate = note["criticality_accurate"].get<bool>();
            if (note.contains("descriptive_aligned"))
                verdict.descriptive_aligned = note["descriptive_aligned"].get<bool>();
        }
        summary.executable += verdict.executable ? 1 : 0;
        summary.condition_accurate += verdict.condition_accurate ? 1 : 0;
        if (verdict.criticality_accurate) {
            ++summary.criticality_annotated;
            summary.criticality_accurate += *verdict.criticality_accurate ? 1 : 0;
        }
        if (verdict.descriptive_aligned) {
            ++summary.descriptive_annotated;
            summary.descriptive_aligned += *verdict.descriptive_aligned ? 1 : 0;
        }
        summary.verdicts.push_back(std::move(verdict));
    }
    return summary;
}

/// Table-style rendering: counts with percentages, manual columns "n/a"
/// when no annotations were supplied.
inline std::string render_candidate_summary(const CandidateSummary& summary) {
    char line[256];
    std::string out = "Rules  Executability  ConditionAccuracy  Criticality  Descriptive\n";
    std::string criticality = "n/a";
    std::string descriptive = "n/a";
    if (summary.criticality_annotated > 0) {
        std::snprintf(line, sizeof(line), "%d/%d (%.2f%%)", summary.criticality_accurate,
                      summary.criticality_annotated,
                      100.0 * summary.criticality_accurate / summary.criticality_annotated);
        criticality = line;
    }
    if (summary.descriptive_annotated > 0) {
        std::snprintf(line, sizeof(line), "%d/%d (%.2f%%)", summary.descriptive_aligned,
                      summary.descriptive_annotated,
                      100.0 * summary.descriptive_aligned / summary.descriptive_annotated);
        descriptive = line;
    }
    std::snprintf(line, sizeof(line), "%-6d %d (%.2f%%)  %d (%.2f%%)  %s  %s\n",
                  summary.total, summary.executable, summary.executable_pct(),
                  summary.condition_accurate, summary.condition_accuracy_pct(),
                  criticality.c_str(), descriptive.c_str());
    out += line;
    return out;
}

}  // namespace ctiforge::eval
