#pragma once

#include <map>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include <ctiforge/embedded_assets.hpp>

#include "ctiforge/common.hpp"

namespace ctiforge::extract {

// ============================================================================
// ATT&CK cloud-matrix catalog (pinned asset; hallucination guard)
// ============================================================================

class TtpCatalog {
public:
    struct Technique {
        std::string id;
        std::string name;
        std::set<std::string> subtechniques;
    };
    struct Tactic {
        std::string id;    // TA....
        std::string slug;  // e.g. "collection"
        std::map<std::string, Technique> techniques;  // by technique id
    };

    static Result<TtpCatalog> from_json(const Json& doc) {
        if (!doc.is_object() || !doc.contains("tactics"))
            return Error{ErrorCode::Io, "catalog JSON needs a 'tactics' array"};
        TtpCatalog catalog;
        catalog.version_ = doc.value("version", "unversioned");
        catalog.raw_ = doc;
        for (const auto& t : doc["tactics"]) {
            Tactic tactic;
            tactic.id = t.value("id", "");
            tactic.slug = t.value("slug", "");
            for (const auto& tech : t.value("techniques", Json::array())) {
                Technique technique;
                technique.id = tech.value("id", "");
                technique.name = tech.value("name", "");
                for (const auto& sub : tech.value("subtechniques", Json::array()))
                    technique.subtechniques.insert(sub.value("id", ""));
                tactic.techniques[technique.id] = std::move(technique);
            }
            if (tactic.slug.empty())
                return Error{ErrorCode::Io, "catalog tactic without slug"};
            catalog.tactics_[tactic.slug] = std::move(tactic);
        }
        return catalog;
    }

    static Result<TtpCatalog> from_text(std::string_view text) {
        Json doc = Json::parse(text, nullptr, false);
        if (doc.is_discarded()) return Error{ErrorCode::Io, "catalog is not valid JSON"};
        return from_json(doc);
    }

    /// The pinned catalog shipped with the library.
    static const TtpCatalog& bundled() {
        static const TtpCatalog catalog = [] {
            auto loaded = from_text(assets::attack_catalog);
            return loaded.value();  // the embedded asset is known-good
        }();
        return catalog;
    }

    const std::string& version() const { return version_; }
    const Json& raw() const { return raw_; }

    bool has_tactic(const std::string& slug) const { return tactics_.count(slug) > 0; }

    bool technique_in_tactic(const std::string& slug, const std::string& technique_id) const {
        auto it = tactics_.find(slug);
        return it != tactics_.end() && it->second.techniques.count(technique_id) > 0;
    }

    bool subtechnique_in_technique(const std::string& slug, const std::string& technique_id,
                                   const std::string& subtechnique_id) const {
        auto it = tactics_.find(slug);
        if (it == tactics_.end()) return false;
        auto tech = it->second.techniques.find(technique_id);
        return tech != it->second.techniques.end() &&
               tech->second.subtechniques.count(subtechnique_id) > 0;
    }

    /// Full triple check; sub-technique may be empty.
    bool valid_assignment(const std::string& slug, const std::string& technique_id,
                          const std::string& subtechnique_id) const {
        if (!technique_in_tactic(slug, technique_id)) return false;
        if (subtechnique_id.empty()) return true;
        return subtechnique_in_technique(slug, technique_id, subtechnique_id);
    }

    /// Technique (or sub-technique) id present anywhere in the catalog.
    bool has_technique_anywhere(const std::string& id) const {
        for (const auto& [slug, tactic] : tactics_) {
            for (const auto& [tech_id, technique] : tactic.techniques) {
                if (tech_id == id || technique.subtechniques.count(id) > 0) return true;
            }
        }
        return false;
    }

    const std::map<std::string, Tactic>& tactics() const { return tactics_; }

private:
    std::string version_;
    Json raw_;
    std::map<std::string, Tactic> tactics_;
};

}  // namespace ctiforge::extract
