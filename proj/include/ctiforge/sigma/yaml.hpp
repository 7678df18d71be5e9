#pragma once

#include <string>
#include <string_view>

#include <yaml-cpp/yaml.h>

#include "ctiforge/sigma/rule.hpp"

namespace ctiforge::sigma {

// ============================================================================
// parse_rule
// ============================================================================

namespace detail {

inline Result<FieldValue> field_value_from_yaml(const YAML::Node& node) {
    if (node.IsScalar()) return FieldValue::scalar(node.as<std::string>());
    if (node.IsSequence()) {
        std::vector<std::string> values;
        for (const auto& item : node) {
            if (!item.IsScalar())
                return Error{ErrorCode::NestedValueStructure,
                             "list values must be flat scalars"};
            values.push_back(item.as<std::string>());
        }
        return FieldValue::list(std::move(values));
    }
    return Error{ErrorCode::NestedValueStructure,
                 "criterion value must be a scalar or a flat list"};
}

inline Result<std::vector<std::string>> string_sequence(const YAML::Node& node,
                                                        const std::string& field) {
    std::vector<std::string> out;
    if (!node.IsSequence())
        return Error{ErrorCode::MissingField, field + " must be a list"};
    for (const auto& item : node) {
        if (!item.IsScalar())
            return Error{ErrorCode::MissingField, field + " entries must be scalars"};
        out.push_back(item.as<std::string>());
    }
    return out;
}

}  // namespace detail

/// Parses UTF-8 YAML into a SigmaRule, preserving selection and criteria
/// order. Returns the first invariant violation as an error.
inline Result<SigmaRule> parse_rule(std::string_view yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml_text));
    } catch (const YAML::Exception& e) {
        return Error{ErrorCode::YamlSyntax, e.what()};
    }
    if (!root.IsMap()) return Error{ErrorCode::YamlSyntax, "rule document must be a mapping"};

    SigmaRule rule;
    if (!root["title"] || !root["title"].IsScalar())
        return Error{ErrorCode::MissingField, "title"};
    rule.title = root["title"].as<std::string>();

    if (root["id"] && root["id"].IsScalar()) rule.id = root["id"].as<std::string>();
    if (root["status"]) {
        auto status = parse_status(root["status"].as<std::string>());
        if (!status) return Error{ErrorCode::InvalidStatus, root["status"].as<std::string>()};
        rule.status = *status;
    }
    if (root["description"] && root["description"].IsScalar())
        rule.description = root["description"].as<std::string>();
    if (root["references"]) {
        auto refs = detail::string_sequence(root["references"], "references");
        if (!refs) return refs.error();
        rule.references = refs.take();
    }
    if (root["author"] && root["author"].IsScalar())
        rule.author = root["author"].as<std::string>();
    if (root["date"] && root["date"].IsScalar()) rule.date = root["date"].as<std::string>();
    if (root["modified"] && root["modified"].IsScalar())
        rule.modified = root["modified"].as<std::string>();
    if (root["tags"]) {
        auto raw_tags = detail::string_sequence(root["tags"], "tags");
        if (!raw_tags) return raw_tags.error();
        for (const auto& raw : raw_tags.value()) {
            auto tag = TtpTag::parse(raw);
            if (!tag) return tag.error();
            rule.tags.push_back(tag.value());
        }
    }
    if (!root["logsource"] || !root["logsource"].IsMap())
        return Error{ErrorCode::MissingField, "logsource"};
    if (root["logsource"]["product"])
        rule.logsource.product = root["logsource"]["product"].as<std::string>();
    if (root["logsource"]["service"])
        rule.logsource.service = root["logsource"]["service"].as<std::string>();

    if (!root["detection"] || !root["detection"].IsMap())
        return Error{ErrorCode::MissingField, "detection"};
    std::string condition_text;
    for (auto it = root["detection"].begin(); it != root["detection"].end(); ++it) {
        std::string name = it->first.as<std::string>();
        if (name == "condition") {
            if (!it->second.IsScalar())
                return Error{ErrorCode::MissingField, "condition must be a scalar"};
            condition_text = it->second.as<std::string>();
            continue;
        }
        if (!it->second.IsMap())
            return Error{ErrorCode::NestedValueStructure,
                         "selection '" + name + "' must be a mapping"};
        SelectionBlock block;
        for (auto crit = it->second.begin(); crit != it->second.end(); ++crit) {
            auto value = detail::field_value_from_yaml(crit->second);
            if (!value) return value.error();
            block.criteria.emplace_back(FieldKey::parse(crit->first.as<std::string>()),
                                        value.take());
        }
        rule.detection.selections.emplace_back(std::move(name), std::move(block));
    }
    if (condition_text.empty()) return Error{ErrorCode::MissingField, "detection.condition"};
    auto condition = parse_condition(condition_text);
    if (!condition) return condition.error();
    rule.detection.condition = condition.value();

    if (root["falsepositives"]) {
        auto fps = detail::string_sequence(root["falsepositives"], "falsepositives");
        if (!fps) return fps.error();
        rule.falsepositives = fps.take();
    }
    if (!root["level"] || !root["level"].IsScalar())
        return Error{ErrorCode::MissingField, "level"};
    auto level = parse_level(root["level"].as<std::string>());
    if (!level) return Error{ErrorCode::InvalidLevel, root["level"].as<std::string>()};
    rule.level = *level;

    auto invariants = check_rule(rule);
    if (!invariants) return invariants.error();
    return rule;
}

// ============================================================================
// emit_rule
// ============================================================================

namespace detail {

inline void emit_value(YAML::Emitter& out, const FieldValue& value) {
    if (!value.is_list && value.values.size() == 1) {
        out << value.values[0];
        return;
    }
    out << YAML::BeginSeq;
    for (const auto& v : value.values) out << v;
    out << YAML::EndSeq;
}

}  // namespace detail

/// Emits canonical YAML. parse_rule(emit_rule(r)) structurally equals r.
/// Empty optional fields and empty lists are omitted.
inline Result<std::string> emit_rule(const SigmaRule& rule) {
    auto invariants = check_rule(rule);
    if (!invariants) return invariants.error();

    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "title" << YAML::Value << rule.title;
    if (rule.id) out << YAML::Key << "id" << YAML::Value << *rule.id;
    if (rule.status)
        out << YAML::Key << "status" << YAML::Value << std::string(to_string(*rule.status));
    if (!rule.description.empty())
        out << YAML::Key << "description" << YAML::Value << rule.description;
    out << YAML::Key << "references" << YAML::Value << YAML::BeginSeq;
    for (const auto& ref : rule.references) out << ref;
    out << YAML::EndSeq;
    if (!rule.author.empty()) out << YAML::Key << "author" << YAML::Value << rule.author;
    if (rule.date) out << YAML::Key << "date" << YAML::Value << *rule.date;
    if (rule.modified) out << YAML::Key << "modified" << YAML::Value << *rule.modified;
    if (!rule.tags.empty()) {
        out << YAML::Key << "tags" << YAML::Value << YAML::BeginSeq;
        for (const auto& tag : rule.tags) out << tag.str();
        out << YAML::EndSeq;
    }
    out << YAML::Key << "logsource" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "product" << YAML::Value << rule.logsource.product;
    out << YAML::Key << "service" << YAML::Value << rule.logsource.service;
    out << YAML::EndMap;
    out << YAML::Key << "detection" << YAML::Value << YAML::BeginMap;
    for (const auto& [name, block] : rule.detection.selections) {
        out << YAML::Key << name << YAML::Value << YAML::BeginMap;
        for (const auto& [key, value] : block.criteria) {
            out << YAML::Key << key.str() << YAML::Value;
            detail::emit_value(out, value);
        }
        out << YAML::EndMap;
    }
    out << YAML::Key << "condition" << YAML::Value
        << print_condition(rule.detection.condition);
    out << YAML::EndMap;
    if (!rule.falsepositives.empty()) {
        out << YAML::Key << "falsepositives" << YAML::Value << YAML::BeginSeq;
        for (const auto& fp : rule.falsepositives) out << fp;
        out << YAML::EndSeq;
    }
    out << YAML::Key << "level" << YAML::Value << std::string(to_string(rule.level));
    out << YAML::EndMap;

    if (!out.good()) return Error{ErrorCode::YamlSyntax, out.GetLastError()};
    return std::string(out.c_str()) + "\n";
}

}  // namespace ctiforge::sigma
