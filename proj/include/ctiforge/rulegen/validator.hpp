#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctiforge/extract/ttp_catalog.hpp"
#include "ctiforge/sigma/rule.hpp"

namespace ctiforge::rulegen {

// ============================================================================
// Rule Validator: sanitation, reformatting, metadata checks
//
// Input is the generator's JSON for one rule (which may contain nested
// structures a SigmaRule cannot hold); output is a repaired SigmaRule or a
// rejection. Idempotent: validating a validated rule changes nothing.
// ============================================================================

struct ValidateOptions {
    std::string author = "CTIForge";
    std::string run_date;                          // defaults to today
    const extract::TtpCatalog* catalog = nullptr;  // when set, prunes unknown technique tags
};

namespace detail {

inline bool sanitized_key(const std::string& path) {
    std::string root = path;
    size_t dot = root.find('.');
    if (dot != std::string::npos) root = root.substr(0, dot);
    return strings::iequals(root, "errorcode") || strings::iequals(root, "errormessage") ||
           strings::iequals(root, "eventtime");
}

inline bool is_arn_value(std::string_view value) {
    return strings::to_lower(strings::trim(value)).rfind("arn:aws", 0) == 0;
}

inline bool valid_reference_url(const std::string& url) {
    if (!(url.rfind("http://", 0) == 0 || url.rfind("https://", 0) == 0)) return false;
    size_t host_begin = url.find("://") + 3;
    size_t host_end = url.find('/', host_begin);
    std::string host =
        host_end == std::string::npos ? url.substr(host_begin)
                                      : url.substr(host_begin, host_end - host_begin);
    return !host.empty() && host.find('.') != std::string::npos;
}

inline bool valid_date(const std::string& date) {
    if (date.size() != 10) return false;
    for (size_t i = 0; i < 10; ++i) {
        if (i == 4 || i == 7) {
            if (date[i] != '/' && date[i] != '-') return false;
        } else if (!std::isdigit(static_cast<unsigned char>(date[i]))) {
            return false;
        }
    }
    return true;
}

/// Flattens a criterion value: nested maps become dotted paths, nested lists
/// collapse into one flat list of scalars.
inline void flatten_criterion(const std::string& path, const Json& value,
                              std::vector<std::pair<std::string, Json>>& out) {
    if (value.is_object()) {
        for (const auto& [key, child] : value.items())
            flatten_criterion(path.empty() ? key : path + "." + key, child, out);
        return;
    }
    if (value.is_array()) {
        Json flat = Json::array();
        std::function<void(const Json&)> collect = [&](const Json& node) {
            if (node.is_array()) {
                for (const auto& item : node) collect(item);
            } else if (!node.is_object() && !node.is_null()) {
                flat.push_back(node);
            }
        };
        collect(value);
        out.emplace_back(path, std::move(flat));
        return;
    }
    if (value.is_null()) return;
    out.emplace_back(path, value);
}

inline std::string scalar_to_string(const Json& node) {
    if (node.is_string()) return node.get<std::string>();
    return node.dump();
}

}  // namespace detail

/// Validates (and repairs) one generator draft. Applies, in order: sanitation
/// (errorcode/errormessage/eventtime criteria and ARN-valued criteria are
/// deleted), reformatting (nested maps -> dotted keys, nested lists -> flat
/// lists, single-element lists -> scalars), metadata (author, reference URLs,
/// dates), then re-checks every rule invariant. Selections emptied by
/// sanitation are removed and the condition is simplified; a rule whose
/// condition vanishes is rejected.
inline Result<sigma::SigmaRule> validate_rule(const Json& draft,
                                              const ValidateOptions& options = {}) {
    if (!draft.is_object())
        return Error{ErrorCode::Rejected, "rule draft must be a JSON object"};

    sigma::SigmaRule rule;
    rule.title = strings::trim(draft.value("title", ""));
    if (rule.title.empty()) return Error{ErrorCode::Rejected, "missing title"};
    rule.description = strings::trim(draft.value("description", ""));
    if (draft.contains("id") && draft["id"].is_string()) rule.id = draft["id"].get<std::string>();
    if (draft.contains("status") && draft["status"].is_string()) {
        if (auto status = sigma::parse_status(draft["status"].get<std::string>()))
            rule.status = *status;
    }

    // Metadata: author is forced; references must be syntactically valid URLs.
    rule.author = options.author;
    if (draft.contains("references") && draft["references"].is_array()) {
        for (const auto& ref : draft["references"]) {
            if (!ref.is_string()) continue;
            std::string url = strings::trim(ref.get<std::string>());
            if (detail::valid_reference_url(url)) rule.references.push_back(url);
        }
    }
    if (rule.references.empty())
        return Error{ErrorCode::Rejected, "no syntactically valid reference URL"};

    std::string run_date = options.run_date.empty() ? current_date() : options.run_date;
    std::string date = draft.contains("date") && draft["date"].is_string()
                           ? draft["date"].get<std::string>()
                           : "";
    rule.date = detail::valid_date(date) ? date : run_date;
    std::string modified = draft.contains("modified") && draft["modified"].is_string()
                               ? draft["modified"].get<std::string>()
                               : "";
    rule.modified = detail::valid_date(modified) ? modified : run_date;

    if (draft.contains("tags") && draft["tags"].is_array()) {
        for (const auto& raw : draft["tags"]) {
            if (!raw.is_string()) continue;
            auto tag = sigma::TtpTag::parse(strings::to_lower(raw.get<std::string>()));
            if (!tag) continue;  // malformed tags are dropped, not fatal
            if (options.catalog != nullptr && tag.value().kind != sigma::TtpTag::Kind::Tactic &&
                !options.catalog->has_technique_anywhere(tag.value().technique_id()))
                continue;  // hallucinated technique id
            rule.tags.push_back(tag.take());
        }
    }

    rule.logsource.product = draft.contains("logsource")
                                 ? draft["logsource"].value("product", "aws")
                                 : "aws";
    rule.logsource.service = draft.contains("logsource")
                                 ? draft["logsource"].value("service", "cloudtrail")
                                 : "cloudtrail";

    if (!draft.contains("detection") || !draft["detection"].is_object())
        return Error{ErrorCode::Rejected, "missing detection object"};
    const auto& detection = draft["detection"];
    if (!detection.contains("condition") || !detection["condition"].is_string())
        return Error{ErrorCode::Rejected, "missing detection condition"};

    std::vector<std::string> removed_selections;
    for (const auto& [name, block] : detection.items()) {
        if (name == "condition") continue;
        if (!sigma::valid_selection_name(name))
            return Error{ErrorCode::Rejected, "bad selection name '" + name + "'"};
        if (!block.is_object())
            return Error{ErrorCode::Rejected, "selection '" + name + "' is not a mapping"};

        // Reformatting: flatten nested maps/lists into flat criteria.
        std::vector<std::pair<std::string, Json>> flattened;
        for (const auto& [key, value] : block.items())
            detail::flatten_criterion(key, value, flattened);

        sigma::SelectionBlock selection;
        for (auto& [raw_key, value] : flattened) {
            sigma::FieldKey key = sigma::FieldKey::parse(raw_key);
            // Sanitation: volatile fields never belong in a detection.
            if (detail::sanitized_key(key.path)) continue;
            if (value.is_array()) {
                std::vector<std::string> values;
                for (const auto& item : value) {
                    std::string text = detail::scalar_to_string(item);
                    if (detail::is_arn_value(text)) continue;  // ARN resources are stripped
                    values.push_back(std::move(text));
                }
                if (values.empty()) continue;
                if (values.size() == 1)
                    selection.criteria.emplace_back(std::move(key),
                                                    sigma::FieldValue::scalar(values[0]));
                else
                    selection.criteria.emplace_back(
                        std::move(key), sigma::FieldValue::list(std::move(values)));
            } else {
                std::string text = detail::scalar_to_string(value);
                if (detail::is_arn_value(text)) continue;
                bool duplicate = false;
                for (const auto& [existing, _] : selection.criteria)
                    if (existing == key) duplicate = true;
                if (duplicate) continue;
                selection.criteria.emplace_back(std::move(key),
                                                sigma::FieldValue::scalar(std::move(text)));
            }
        }
        if (selection.empty()) {
            removed_selections.push_back(name);
            continue;
        }
        rule.detection.selections.emplace_back(name, std::move(selection));
    }

    auto condition = sigma::parse_condition(detection["condition"].get<std::string>());
    if (!condition)
        return Error{ErrorCode::Rejected,
                     "condition does not parse: " + condition.error().message};
    sigma::ConditionPtr pruned = removed_selections.empty()
                                     ? condition.value()
                                     : sigma::prune_identifiers(condition.value(),
                                                              removed_selections);
    if (!pruned)
        return Error{ErrorCode::Rejected, "condition empty after sanitation"};
    rule.detection.condition = pruned;

    if (draft.contains("falsepositives") && draft["falsepositives"].is_array()) {
        for (const auto& fp : draft["falsepositives"])
            if (fp.is_string()) rule.falsepositives.push_back(fp.get<std::string>());
    }

    if (!draft.contains("level") || !draft["level"].is_string())
        return Error{ErrorCode::Rejected, "missing level"};
    auto level = sigma::parse_level(draft["level"].get<std::string>());
    if (!level)
        return Error{ErrorCode::Rejected,
                     "invalid level '" + draft["level"].get<std::string>() + "'"};
    rule.level = *level;

    auto invariants = sigma::check_rule(rule);
    if (!invariants)
        return Error{ErrorCode::Rejected, invariants.error().format()};
    return rule;
}

/// SigmaRule overload used by the optimizer/refiner stages; round-trips
/// through the JSON form so the same repairs apply.
inline Result<sigma::SigmaRule> validate_rule(const sigma::SigmaRule& rule,
                                              const ValidateOptions& options = {}) {
    Json draft = sigma::to_draft_json(rule);
    ValidateOptions opts = options;
    if (opts.author.empty() || opts.author == "CTIForge") opts.author = rule.author;
    return validate_rule(draft, opts);
}

}  // namespace ctiforge::rulegen
