#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ctiforge/eval/metrics.hpp"
#include "ctiforge/ioc/iocs.hpp"
#include "ctiforge/refine/apis.hpp"

namespace ctiforge::eval {

// ============================================================================
// Entity/relationship taxonomy
// ============================================================================

enum class EntityType { ApiCall, Tactic, Technique, SubTechnique, Ioc, Other };

inline const std::vector<std::pair<EntityType, std::string>>& entity_type_names() {
    static const std::vector<std::pair<EntityType, std::string>> names = {
        {EntityType::ApiCall, "ApiCall"},           {EntityType::Tactic, "Tactic"},
        {EntityType::Technique, "Technique"},       {EntityType::SubTechnique, "SubTechnique"},
        {EntityType::Ioc, "IoC"},                   {EntityType::Other, "Other"},
    };
    return names;
}

inline std::string to_string(EntityType type) {
    for (const auto& [t, name] : entity_type_names())
        if (t == type) return name;
    return "Other";
}

inline Result<EntityType> entity_type_from_string(const std::string& name) {
    for (const auto& [type, type_name] : entity_type_names())
        if (strings::iequals(type_name, name)) return type;
    return Error{ErrorCode::UnknownEntityType, name};
}

enum class RelationType {
    DetectionEntitySigmaField,
    ApiTactic,
    ApiTechnique,
    ApiSubTechnique,
    ApiIoc,
    ApiOther,
};

inline const std::vector<std::pair<RelationType, std::string>>& relation_type_names() {
    static const std::vector<std::pair<RelationType, std::string>> names = {
        {RelationType::DetectionEntitySigmaField, "DetectionEntity-SigmaField"},
        {RelationType::ApiTactic, "ApiCall-Tactic"},
        {RelationType::ApiTechnique, "ApiCall-Technique"},
        {RelationType::ApiSubTechnique, "ApiCall-SubTechnique"},
        {RelationType::ApiIoc, "ApiCall-IoC"},
        {RelationType::ApiOther, "ApiCall-Other"},
    };
    return names;
}

inline std::string to_string(RelationType type) {
    for (const auto& [t, name] : relation_type_names())
        if (t == type) return name;
    return "DetectionEntity-SigmaField";
}

inline Result<RelationType> relation_type_from_string(const std::string& name) {
    for (const auto& [type, type_name] : relation_type_names())
        if (strings::iequals(type_name, name)) return type;
    return Error{ErrorCode::UnknownEntityType, name};
}

// ============================================================================
// Normalization (the matcher rules)
// ============================================================================

/// Exact-match normalization per type: eventNames stay case-sensitive, TTP
/// ids canonicalize ("attack.t1530" -> "T1530", tactic slug lowercase), IPs
/// canonicalize via inet_pton, Other is case-insensitive trimmed text.
inline std::string normalize_entity(EntityType type, const std::string& raw) {
    std::string value = strings::trim(raw);
    switch (type) {
        case EntityType::ApiCall:
            return value;
        case EntityType::Tactic: {
            std::string slug = strings::to_lower(value);
            if (slug.rfind("attack.", 0) == 0) slug = slug.substr(7);
            return slug;
        }
        case EntityType::Technique:
        case EntityType::SubTechnique: {
            std::string id = value;
            if (strings::to_lower(id).rfind("attack.", 0) == 0) id = id.substr(7);
            if (!id.empty()) id[0] = static_cast<char>(std::toupper(id[0]));
            return id;
        }
        case EntityType::Ioc: {
            if (auto canonical = ioc::canonicalize_ip(value)) return *canonical;
            return value;  // user agents match exactly after trimming
        }
        case EntityType::Other:
            return strings::to_lower(value);
    }
    return value;
}

struct Entity {
    EntityType type;
    std::string value;  // normalized

    auto operator<=>(const Entity& other) const = default;
};

struct Relationship {
    RelationType type;
    std::string left;   // normalized per the left end's entity type
    std::string right;  // normalized per the right end's entity type

    auto operator<=>(const Relationship& other) const = default;
};

// ============================================================================
// Ground truth
// ============================================================================

struct GroundTruth {
    int oscti_id = 0;
    std::set<Entity> entities;
    std::set<Relationship> relationships;
};

namespace detail {

inline std::pair<EntityType, EntityType> relation_end_types(RelationType type) {
    switch (type) {
        case RelationType::DetectionEntitySigmaField:
            // Left is a detection entity value, right a field path; matched
            // case-insensitively via the Other normalization.
            return {EntityType::Other, EntityType::Other};
        case RelationType::ApiTactic: return {EntityType::ApiCall, EntityType::Tactic};
        case RelationType::ApiTechnique: return {EntityType::ApiCall, EntityType::Technique};
        case RelationType::ApiSubTechnique:
            return {EntityType::ApiCall, EntityType::SubTechnique};
        case RelationType::ApiIoc: return {EntityType::ApiCall, EntityType::Ioc};
        case RelationType::ApiOther: return {EntityType::ApiCall, EntityType::Other};
    }
    return {EntityType::Other, EntityType::Other};
}

inline Relationship normalize_relationship(RelationType type, const std::string& left,
                                           const std::string& right) {
    auto [left_type, right_type] = relation_end_types(type);
    return Relationship{type, normalize_entity(left_type, left),
                        normalize_entity(right_type, right)};
}

}  // namespace detail

/// Parses one ground-truth document (see docs/ground_truth_schema.md).
inline Result<GroundTruth> ground_truth_from_json(const Json& node) {
    GroundTruth truth;
    if (!node.is_object() || !node.contains("oscti_id"))
        return Error{ErrorCode::Io, "ground truth needs an oscti_id"};
    truth.oscti_id = node["oscti_id"].get<int>();
    for (const auto& entity : node.value("entities", Json::array())) {
        auto type = entity_type_from_string(entity.value("type", ""));
        if (!type) return type.error();
        truth.entities.insert(
            Entity{type.value(), normalize_entity(type.value(), entity.value("value", ""))});
    }
    for (const auto& rel : node.value("relationships", Json::array())) {
        auto type = relation_type_from_string(rel.value("type", ""));
        if (!type) return type.error();
        truth.relationships.insert(detail::normalize_relationship(
            type.value(), rel.value("left", ""), rel.value("right", "")));
    }
    return truth;
}

// ============================================================================
// Prediction derivation from the final artifacts
// ============================================================================

struct Predictions {
    std::set<Entity> entities;
    std::set<Relationship> relationships;
};

namespace detail {

inline bool is_ioc_field(const std::string& path) {
    return strings::iequals(path, "sourceIPAddress") || strings::iequals(path, "userAgent");
}

inline bool is_api_field(const std::string& path) {
    return strings::iequals(path, "eventName") || strings::iequals(path, "eventSource");
}

}  // namespace detail

/// Derives predicted entities and relationships from the final rule set plus
/// the IoC sidecar: API pairs from detection logic, TTPs from tags, IoCs from
/// IoC selections and the sidecar, Other from the remaining criterion values.
/// Relationships come from co-occurrence: tags and IoCs join API calls at
/// rule scope, Other values at selection scope, and every criterion value
/// pairs with its field path.
inline Predictions derive_predictions(const refine::RuleSet& set, const ioc::IocSet& iocs) {
    Predictions out;

    for (const auto& ip : iocs.ip_addresses)
        out.entities.insert(Entity{EntityType::Ioc, normalize_entity(EntityType::Ioc, ip)});
    for (const auto& ua : iocs.user_agents)
        out.entities.insert(Entity{EntityType::Ioc, normalize_entity(EntityType::Ioc, ua)});

    for (const auto& rule : set.rules) {
        auto apis = refine::extract_apis(rule);
        std::vector<std::string> api_names;
        for (const auto& key : apis) {
            api_names.push_back(key.event_name);
            out.entities.insert(Entity{EntityType::ApiCall, key.event_name});
        }

        // Tags: tactic/technique/sub-technique entities plus API joins.
        for (const auto& tag : rule.tags) {
            EntityType type = tag.kind == sigma::TtpTag::Kind::Tactic ? EntityType::Tactic
                              : tag.kind == sigma::TtpTag::Kind::Technique
                                  ? EntityType::Technique
                                  : EntityType::SubTechnique;
            std::string value = normalize_entity(
                type, type == EntityType::Tactic ? tag.value : tag.technique_id());
            out.entities.insert(Entity{type, value});
            RelationType rel = type == EntityType::Tactic ? RelationType::ApiTactic
                               : type == EntityType::Technique ? RelationType::ApiTechnique
                                                               : RelationType::ApiSubTechnique;
            for (const auto& api : api_names)
                out.relationships.insert(Relationship{rel, api, value});
        }

        std::vector<std::string> rule_iocs;
        for (const auto& [name, block] : rule.detection.selections) {
            // APIs of this selection join its Other values.
            std::vector<std::string> selection_apis;
            if (const sigma::FieldValue* names = block.find("eventName"))
                for (const auto& api : names->values) selection_apis.push_back(api);

            for (const auto& [key, value] : block.criteria) {
                for (const auto& raw : value.values) {
                    // Every criterion value maps to its Sigma field.
                    out.relationships.insert(detail::normalize_relationship(
                        RelationType::DetectionEntitySigmaField, raw, key.path));
                    if (detail::is_ioc_field(key.path)) {
                        std::string ioc_value = normalize_entity(EntityType::Ioc, raw);
                        out.entities.insert(Entity{EntityType::Ioc, ioc_value});
                        rule_iocs.push_back(ioc_value);
                    } else if (!detail::is_api_field(key.path)) {
                        std::string other = normalize_entity(EntityType::Other, raw);
                        out.entities.insert(Entity{EntityType::Other, other});
                        for (const auto& api : selection_apis)
                            out.relationships.insert(
                                Relationship{RelationType::ApiOther, api, other});
                    }
                }
            }
        }
        // IoCs co-occurring with the rule's APIs (rule scope).
        for (const auto& api : api_names)
            for (const auto& ioc_value : rule_iocs)
                out.relationships.insert(Relationship{RelationType::ApiIoc, api, ioc_value});
    }
    return out;
}

// ============================================================================
// Matching
// ============================================================================

/// Exact matching after normalization, set semantics. Returns one counts cell
/// per entity type (types absent from both sides report zeros).
inline std::map<std::string, MatchCounts> match_entities(const std::set<Entity>& predicted,
                                                         const GroundTruth& truth) {
    std::map<std::string, MatchCounts> out;
    for (const auto& [type, name] : entity_type_names()) out[name] = MatchCounts{};
    for (const auto& entity : predicted) {
        if (truth.entities.count(entity) > 0)
            out[to_string(entity.type)].tp += 1;
        else
            out[to_string(entity.type)].fp += 1;
    }
    for (const auto& entity : truth.entities) {
        if (predicted.count(entity) == 0) out[to_string(entity.type)].fn += 1;
    }
    return out;
}

/// A predicted relationship is a true positive iff both endpoints and the
/// type match under entity normalization.
inline std::map<std::string, MatchCounts> match_relationships(
    const std::set<Relationship>& predicted, const GroundTruth& truth) {
    std::map<std::string, MatchCounts> out;
    for (const auto& [type, name] : relation_type_names()) out[name] = MatchCounts{};
    for (const auto& rel : predicted) {
        if (truth.relationships.count(rel) > 0)
            out[to_string(rel.type)].tp += 1;
        else
            out[to_string(rel.type)].fp += 1;
    }
    for (const auto& rel : truth.relationships) {
        if (predicted.count(rel) == 0) out[to_string(rel.type)].fn += 1;
    }
    return out;
}

}  // namespace ctiforge::eval
