#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <ctiforge/embedded_assets.hpp>

#include "ctiforge/common.hpp"

namespace ctiforge::extract {

// ============================================================================
// Voting configuration (thresholds are tunable; defaults are the smallest
// strict majorities)
// ============================================================================

struct VotingConfig {
    int n_explicit = 3;
    int t_explicit = 2;
    int t_implicit = 3;

    /// The implicit pass always runs twice as many times as the explicit one.
    int n_implicit() const { return 2 * n_explicit; }

    Status validate() const {
        if (n_explicit < 1) return Error{ErrorCode::InvalidArgument, "n_explicit must be >= 1"};
        if (t_explicit < 1 || t_explicit > n_explicit)
            return Error{ErrorCode::InvalidArgument, "need 1 <= t_explicit <= n_explicit"};
        if (t_implicit < 1 || t_implicit > n_implicit())
            return Error{ErrorCode::InvalidArgument, "need 1 <= t_implicit <= n_implicit"};
        return ok_status();
    }
};

// ============================================================================
// API call identity
// ============================================================================

/// Bundled action -> event source table (aws_event_sources.json).
inline const std::map<std::string, std::string>& aws_event_source_table() {
    static const std::map<std::string, std::string> table = [] {
        std::map<std::string, std::string> out;
        auto doc = Json::parse(assets::aws_event_sources);
        for (const auto& [action, source] : doc["actions"].items())
            out[action] = source.get<std::string>();
        return out;
    }();
    return table;
}

/// Identity used for voting and dedup: event source lower-cased, eventName
/// kept exactly as extracted (CamelCase is meaningful).
struct ApiCallKey {
    std::string event_name;
    std::string event_source;  // lowercase, possibly empty

    auto operator<=>(const ApiCallKey& other) const = default;

    std::string str() const {
        return event_source.empty() ? event_name : event_source + "/" + event_name;
    }
};

/// Normalizes a raw extraction. Strips "service:Action" prefixes, trims
/// whitespace, lower-cases the source, and infers a missing source from the
/// bundled action table. Idempotent.
inline ApiCallKey normalize_api_call(std::string event_name, std::string event_source) {
    event_name = strings::trim(event_name);
    size_t colon = event_name.rfind(':');
    if (colon != std::string::npos) event_name = event_name.substr(colon + 1);
    event_source = strings::to_lower(strings::trim(event_source));
    if (event_source.empty()) {
        auto it = aws_event_source_table().find(event_name);
        if (it != aws_event_source_table().end()) event_source = it->second;
    }
    return ApiCallKey{std::move(event_name), std::move(event_source)};
}

// ============================================================================
// Majority voting
// ============================================================================

/// Pure tally over per-run result sets. Returns exactly the entries with
/// votes >= threshold, sorted by (votes desc, key asc). Order-independent in
/// the runs.
template <typename T>
std::vector<std::pair<T, int>> vote_tally(const std::vector<std::set<T>>& run_results,
                                          int threshold) {
    std::map<T, int> votes;
    for (const auto& run : run_results)
        for (const auto& item : run) votes[item] += 1;
    std::vector<std::pair<T, int>> out;
    for (const auto& [item, count] : votes)
        if (count >= threshold) out.emplace_back(item, count);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

}  // namespace ctiforge::extract
