#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include <ctiforge/embedded_assets.hpp>

#include "ctiforge/common.hpp"

namespace ctiforge::prompts {

// ============================================================================
// Versioned prompt assets
//
// The embedded copies under assets/prompts/ are the defaults; a prompt
// directory configured at runtime overrides them file by file.
// ============================================================================

struct PromptSet {
    std::string image_analyzer{assets::image_analyzer_v1};
    std::string explicit_api{assets::explicit_api_v1};
    std::string implicit_api{assets::implicit_api_v1};
    std::string ttp_extractor{assets::ttp_extractor_v1};
    std::string rule_generator{assets::rule_generator_v1};
    std::string rule_optimizer{assets::rule_optimizer_v1};
    std::string candidate_selector{assets::candidate_selector_v1};
    std::string api_remover{assets::api_remover_v1};
    std::string ioc_extractor{assets::ioc_extractor_v1};

    /// name -> version, recorded in the run manifest.
    std::map<std::string, std::string> versions = {
        {"image_analyzer", "v1"},     {"explicit_api", "v1"}, {"implicit_api", "v1"},
        {"ttp_extractor", "v1"},      {"rule_generator", "v1"}, {"rule_optimizer", "v1"},
        {"candidate_selector", "v1"}, {"api_remover", "v1"},  {"ioc_extractor", "v1"},
    };
};

/// Loads overrides from a directory of <name>_<version>.txt files.
inline Result<PromptSet> load_overrides(const std::filesystem::path& dir) {
    PromptSet set;
    if (!std::filesystem::is_directory(dir))
        return Error{ErrorCode::Io, "prompt directory not found: " + dir.string()};
    auto read_if_present = [&](const std::string& name, std::string& target) {
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            std::string filename = entry.path().filename().string();
            if (filename.rfind(name + "_", 0) == 0 && entry.path().extension() == ".txt") {
                std::ifstream in(entry.path());
                std::ostringstream buffer;
                buffer << in.rdbuf();
                target = buffer.str();
                std::string stem = entry.path().stem().string();
                set.versions[name] = stem.substr(name.size() + 1);
                return;
            }
        }
    };
    read_if_present("image_analyzer", set.image_analyzer);
    read_if_present("explicit_api", set.explicit_api);
    read_if_present("implicit_api", set.implicit_api);
    read_if_present("ttp_extractor", set.ttp_extractor);
    read_if_present("rule_generator", set.rule_generator);
    read_if_present("rule_optimizer", set.rule_optimizer);
    read_if_present("candidate_selector", set.candidate_selector);
    read_if_present("api_remover", set.api_remover);
    read_if_present("ioc_extractor", set.ioc_extractor);
    return set;
}

/// Replaces {{KEY}} markers in a prompt template.
inline std::string render(std::string_view tmpl,
                          const std::map<std::string, std::string>& values) {
    std::string out(tmpl);
    for (const auto& [key, value] : values)
        out = strings::replace_all(std::move(out), "{{" + key + "}}", value);
    return out;
}

}  // namespace ctiforge::prompts
