#pragma once

#include <set>

#include "ctiforge/extract/voting.hpp"
#include "ctiforge/sigma/rule.hpp"

namespace ctiforge::refine {

// ============================================================================
// API-pair extraction from detection logic
// ============================================================================

/// Pure scan of a rule's detection criteria: every eventName value pairs with
/// its selection block's eventSource (lower-cased; empty when the block has
/// none). List values yield one pair per element.
inline std::set<extract::ApiCallKey> extract_apis(const sigma::SigmaRule& rule) {
    std::set<extract::ApiCallKey> out;
    for (const auto& [name, block] : rule.detection.selections) {
        std::vector<std::string> sources;
        const sigma::FieldValue* source_value = block.find("eventSource");
        if (source_value != nullptr) {
            for (const auto& source : source_value->values)
                sources.push_back(strings::to_lower(source));
        } else {
            sources.push_back("");
        }
        const sigma::FieldValue* names = block.find("eventName");
        if (names == nullptr) continue;
        for (const auto& event_name : names->values)
            for (const auto& source : sources)
                out.insert(extract::ApiCallKey{event_name, source});
    }
    return out;
}

/// Coverage matching with the eventName-only fallback: a blank event source
/// on either side matches on the name alone.
inline bool api_keys_match(const extract::ApiCallKey& a, const extract::ApiCallKey& b) {
    if (a.event_name != b.event_name) return false;
    if (a.event_source.empty() || b.event_source.empty()) return true;
    return a.event_source == b.event_source;
}

}  // namespace ctiforge::refine
