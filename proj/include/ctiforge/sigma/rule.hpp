#pragma once

#include <array>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctiforge/common.hpp"
#include "ctiforge/sigma/condition.hpp"

namespace ctiforge::sigma {

// ============================================================================
// Field keys and values
// ============================================================================

/// Dot-separated field path plus optional modifier, e.g. "userAgent|contains".
struct FieldKey {
    std::string path;
    std::string modifier;  // empty = exact match

    static FieldKey parse(std::string_view raw) {
        FieldKey key;
        size_t bar = raw.find('|');
        if (bar == std::string_view::npos) {
            key.path = std::string(raw);
        } else {
            key.path = std::string(raw.substr(0, bar));
            key.modifier = std::string(raw.substr(bar + 1));
        }
        return key;
    }

    std::string str() const { return modifier.empty() ? path : path + "|" + modifier; }

    bool operator==(const FieldKey& other) const = default;
};

/// Scalar text or flat list of scalar text (list = logical OR).
struct FieldValue {
    std::vector<std::string> values;
    bool is_list = false;

    static FieldValue scalar(std::string v) { return FieldValue{{std::move(v)}, false}; }
    static FieldValue list(std::vector<std::string> v) { return FieldValue{std::move(v), true}; }

    bool operator==(const FieldValue& other) const = default;
};

struct SelectionBlock {
    std::vector<std::pair<FieldKey, FieldValue>> criteria;  // document order

    const FieldValue* find(std::string_view path) const {
        for (const auto& [key, value] : criteria) {
            if (strings::iequals(key.path, path)) return &value;
        }
        return nullptr;
    }

    bool empty() const { return criteria.empty(); }

    bool operator==(const SelectionBlock& other) const = default;
};

// ============================================================================
// Metadata types
// ============================================================================

struct LogSource {
    std::string product;
    std::string service;

    bool operator==(const LogSource& other) const = default;
};

enum class RuleLevel { Informational, Low, Medium, High, Critical };
enum class RuleStatus { Experimental, Test, Stable };

inline std::optional<RuleLevel> parse_level(std::string_view s) {
    if (s == "informational") return RuleLevel::Informational;
    if (s == "low") return RuleLevel::Low;
    if (s == "medium") return RuleLevel::Medium;
    if (s == "high") return RuleLevel::High;
    if (s == "critical") return RuleLevel::Critical;
    return std::nullopt;
}

inline std::string_view to_string(RuleLevel level) {
    switch (level) {
        case RuleLevel::Informational: return "informational";
        case RuleLevel::Low: return "low";
        case RuleLevel::Medium: return "medium";
        case RuleLevel::High: return "high";
        case RuleLevel::Critical: return "critical";
    }
    return "medium";
}

inline std::optional<RuleStatus> parse_status(std::string_view s) {
    if (s == "experimental") return RuleStatus::Experimental;
    if (s == "test") return RuleStatus::Test;
    if (s == "stable") return RuleStatus::Stable;
    return std::nullopt;
}

inline std::string_view to_string(RuleStatus status) {
    switch (status) {
        case RuleStatus::Experimental: return "experimental";
        case RuleStatus::Test: return "test";
        case RuleStatus::Stable: return "stable";
    }
    return "experimental";
}

// ============================================================================
// ATT&CK tags
// ============================================================================

inline const std::array<std::string_view, 14>& attack_tactic_slugs() {
    static const std::array<std::string_view, 14> slugs = {
        "reconnaissance",   "resource-development", "initial-access",
        "execution",        "persistence",          "privilege-escalation",
        "defense-evasion",  "credential-access",    "discovery",
        "lateral-movement", "collection",           "command-and-control",
        "exfiltration",     "impact",
    };
    return slugs;
}

struct TtpTag {
    enum class Kind { Tactic, Technique, SubTechnique };

    Kind kind = Kind::Tactic;
    std::string value;  // tactic slug, or technique id like "t1530" / "t1530.001"

    /// Parses "attack.collection" or "attack.t1530[.001]".
    static Result<TtpTag> parse(std::string_view raw) {
        if (!raw.starts_with("attack."))
            return Error{ErrorCode::InvalidTag, "tag must start with 'attack.': " + std::string(raw)};
        std::string_view rest = raw.substr(7);
        static const std::regex technique_re(R"(^t\d{4}(\.\d{3})?$)");
        if (std::regex_match(rest.begin(), rest.end(), technique_re)) {
            bool sub = rest.find('.') != std::string_view::npos;
            return TtpTag{sub ? Kind::SubTechnique : Kind::Technique, std::string(rest)};
        }
        for (auto slug : attack_tactic_slugs()) {
            if (rest == slug) return TtpTag{Kind::Tactic, std::string(rest)};
        }
        return Error{ErrorCode::InvalidTag, "unknown tactic or malformed technique id: " +
                                                std::string(raw)};
    }

    std::string str() const { return "attack." + value; }

    /// Canonical ATT&CK id ("T1530", "T1530.001"); empty for tactics.
    std::string technique_id() const {
        if (kind == Kind::Tactic) return "";
        std::string id = value;
        id[0] = 'T';
        return id;
    }

    bool operator==(const TtpTag& other) const = default;
};

// ============================================================================
// Detection and rule
// ============================================================================

struct Detection {
    std::vector<std::pair<std::string, SelectionBlock>> selections;  // document order
    ConditionPtr condition;

    const SelectionBlock* find(std::string_view name) const {
        for (const auto& [sel_name, block] : selections) {
            if (sel_name == name) return &block;
        }
        return nullptr;
    }

    bool operator==(const Detection& other) const {
        return selections == other.selections && equal(condition, other.condition);
    }
};

/// Full Sigma rule record; the pipeline's output unit.
struct SigmaRule {
    std::string title;
    std::optional<std::string> id;
    std::optional<RuleStatus> status;
    std::string description;
    std::vector<std::string> references;
    std::string author;
    std::optional<std::string> date;      // YYYY/MM/DD
    std::optional<std::string> modified;  // YYYY/MM/DD
    std::vector<TtpTag> tags;
    LogSource logsource;
    Detection detection;
    std::vector<std::string> falsepositives;
    RuleLevel level = RuleLevel::Medium;

    bool operator==(const SigmaRule& other) const = default;
};

inline bool valid_selection_name(std::string_view name) {
    static const std::regex name_re(R"(^selection[_a-z0-9]*$)");
    return std::regex_match(name.begin(), name.end(), name_re);
}

/// Checks every type-level invariant; returns the first violation found.
inline Status check_rule(const SigmaRule& rule) {
    if (strings::trim(rule.title).empty())
        return Error{ErrorCode::MissingField, "title must be non-empty"};
    if (rule.references.empty())
        return Error{ErrorCode::MissingField, "at least one reference required"};
    if (strings::trim(rule.logsource.product).empty() ||
        strings::trim(rule.logsource.service).empty())
        return Error{ErrorCode::MissingField, "logsource product and service must be non-empty"};
    if (!rule.detection.condition)
        return Error{ErrorCode::MissingField, "detection.condition missing"};
    if (rule.detection.selections.empty())
        return Error{ErrorCode::MissingField, "detection needs at least one selection"};

    for (const auto& [name, block] : rule.detection.selections) {
        if (!valid_selection_name(name))
            return Error{ErrorCode::InvalidSelectionName, "bad selection name: " + name};
        for (size_t i = 0; i < block.criteria.size(); ++i) {
            for (size_t j = i + 1; j < block.criteria.size(); ++j) {
                if (block.criteria[i].first == block.criteria[j].first)
                    return Error{ErrorCode::DuplicateFieldKey,
                                 "duplicate criterion key '" + block.criteria[i].first.str() +
                                     "' in " + name};
            }
        }
    }

    auto referenced = referenced_identifiers(rule.detection.condition);
    for (const auto& ident : referenced) {
        if (rule.detection.find(ident) == nullptr)
            return Error{ErrorCode::UnknownConditionIdentifier,
                         "condition references unknown selection '" + ident + "'"};
    }
    for (const auto& [name, block] : rule.detection.selections) {
        bool used = false;
        for (const auto& ident : referenced) {
            if (ident == name) {
                used = true;
                break;
            }
        }
        if (!used)
            return Error{ErrorCode::UnreferencedSelection,
                         "selection '" + name + "' not referenced by condition"};
    }
    return ok_status();
}

// ============================================================================
// JSON form (internal artifact schema, schema_version 1)
// ============================================================================

inline Json to_json(const FieldValue& value) {
    if (!value.is_list && value.values.size() == 1) return value.values[0];
    return Json(value.values);
}

inline Json to_json(const SelectionBlock& block) {
    Json out = Json::object();
    for (const auto& [key, value] : block.criteria) out[key.str()] = to_json(value);
    return out;
}

inline Json to_json(const SigmaRule& rule) {
    Json out = Json::object();
    out["title"] = rule.title;
    if (rule.id) out["id"] = *rule.id;
    if (rule.status) out["status"] = std::string(to_string(*rule.status));
    out["description"] = rule.description;
    out["references"] = rule.references;
    out["author"] = rule.author;
    if (rule.date) out["date"] = *rule.date;
    if (rule.modified) out["modified"] = *rule.modified;
    Json tags = Json::array();
    for (const auto& tag : rule.tags) tags.push_back(tag.str());
    out["tags"] = tags;
    out["logsource"] = {{"product", rule.logsource.product},
                        {"service", rule.logsource.service}};
    Json detection = Json::object();
    Json selections = Json::array();  // array of [name, block] keeps order
    for (const auto& [name, block] : rule.detection.selections)
        selections.push_back(Json::array({name, to_json(block)}));
    detection["selections"] = selections;
    detection["condition"] = print_condition(rule.detection.condition);
    out["detection"] = detection;
    out["falsepositives"] = rule.falsepositives;
    out["level"] = std::string(to_string(rule.level));
    return out;
}

/// Draft form: detection as a plain JSON object mapping selection names to
/// blocks plus "condition". This is the shape LLM prompts exchange; `Json` is
/// insertion-ordered so selection order survives.
inline Json to_draft_json(const SigmaRule& rule) {
    Json out = to_json(rule);
    Json detection = Json::object();
    for (const auto& entry : out["detection"]["selections"])
        detection[entry.at(0).get<std::string>()] = entry.at(1);
    detection["condition"] = out["detection"]["condition"];
    out["detection"] = detection;
    return out;
}

inline Result<FieldValue> field_value_from_json(const Json& node) {
    if (node.is_string()) return FieldValue::scalar(node.get<std::string>());
    if (node.is_number_integer()) return FieldValue::scalar(std::to_string(node.get<long long>()));
    if (node.is_number_float()) return FieldValue::scalar(std::to_string(node.get<double>()));
    if (node.is_boolean()) return FieldValue::scalar(node.get<bool>() ? "true" : "false");
    if (node.is_array()) {
        std::vector<std::string> values;
        for (const auto& item : node) {
            if (!item.is_string() && !item.is_number() && !item.is_boolean())
                return Error{ErrorCode::NestedValueStructure, "list values must be scalars"};
            if (item.is_string())
                values.push_back(item.get<std::string>());
            else
                values.push_back(item.dump());
        }
        return FieldValue::list(std::move(values));
    }
    return Error{ErrorCode::NestedValueStructure, "criterion value must be scalar or flat list"};
}

inline Result<SigmaRule> rule_from_json(const Json& node) {
    SigmaRule rule;
    if (!node.is_object()) return Error{ErrorCode::MissingField, "rule must be an object"};
    if (!node.contains("title") || !node["title"].is_string())
        return Error{ErrorCode::MissingField, "title"};
    rule.title = node["title"].get<std::string>();
    if (node.contains("id") && node["id"].is_string()) rule.id = node["id"].get<std::string>();
    if (node.contains("status")) {
        auto status = parse_status(node["status"].get<std::string>());
        if (!status) return Error{ErrorCode::InvalidStatus, node["status"].get<std::string>()};
        rule.status = *status;
    }
    rule.description = node.value("description", "");
    if (node.contains("references"))
        for (const auto& ref : node["references"]) rule.references.push_back(ref.get<std::string>());
    rule.author = node.value("author", "");
    if (node.contains("date") && node["date"].is_string())
        rule.date = node["date"].get<std::string>();
    if (node.contains("modified") && node["modified"].is_string())
        rule.modified = node["modified"].get<std::string>();
    if (node.contains("tags")) {
        for (const auto& raw : node["tags"]) {
            auto tag = TtpTag::parse(raw.get<std::string>());
            if (!tag) return tag.error();
            rule.tags.push_back(tag.value());
        }
    }
    if (!node.contains("logsource")) return Error{ErrorCode::MissingField, "logsource"};
    rule.logsource.product = node["logsource"].value("product", "");
    rule.logsource.service = node["logsource"].value("service", "");
    if (!node.contains("detection")) return Error{ErrorCode::MissingField, "detection"};
    const auto& detection = node["detection"];
    if (!detection.contains("selections") || !detection.contains("condition"))
        return Error{ErrorCode::MissingField, "detection.selections / detection.condition"};
    for (const auto& entry : detection["selections"]) {
        std::string name = entry.at(0).get<std::string>();
        SelectionBlock block;
        for (const auto& [key, value] : entry.at(1).items()) {
            auto fv = field_value_from_json(value);
            if (!fv) return fv.error();
            block.criteria.emplace_back(FieldKey::parse(key), fv.take());
        }
        rule.detection.selections.emplace_back(std::move(name), std::move(block));
    }
    auto condition = parse_condition(detection["condition"].get<std::string>());
    if (!condition) return condition.error();
    rule.detection.condition = condition.value();
    if (node.contains("falsepositives"))
        for (const auto& fp : node["falsepositives"])
            rule.falsepositives.push_back(fp.get<std::string>());
    if (!node.contains("level")) return Error{ErrorCode::MissingField, "level"};
    auto level = parse_level(node["level"].get<std::string>());
    if (!level) return Error{ErrorCode::InvalidLevel, node["level"].get<std::string>()};
    rule.level = *level;
    auto invariants = check_rule(rule);
    if (!invariants) return invariants.error();
    return rule;
}

}  // namespace ctiforge::sigma
