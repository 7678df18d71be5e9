#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "ctiforge/extract/voting.hpp"
#include "ctiforge/ingest/filter.hpp"
#include "ctiforge/llm/request.hpp"

namespace ctiforge::pipeline {

// ============================================================================
// Pipeline configuration
// ============================================================================

struct ProviderSelection {
    std::string kind = "http";  // http | replay | mock
    std::string replay_dir;     // fixture directory for kind == replay
    llm::ProviderConfig http;
};

struct StageToggles {
    bool vision = true;         // image analyzer
    bool api_extractor = true;  // API call + TTP extraction
    bool optimizer = true;      // rule optimizer
};

/// Per-stage temperatures. Defaults: vision 1.0, explicit 0.0, implicit 0.9,
/// TTP 0.5, generator 0.7, optimizer 0.5, selector 0.5, remover 0.5, IoC 0.5.
struct Temperatures {
    double vision = 1.0;
    double explicit_api = 0.0;
    double implicit_api = 0.9;
    double ttp = 0.5;
    double generator = 0.7;
    double optimizer = 0.5;
    double selector = 0.5;
    double remover = 0.5;
    double ioc = 0.5;
};

struct PipelineConfig {
    ProviderSelection provider;
    extract::VotingConfig voting;
    StageToggles stages;
    Temperatures temperatures;
    std::vector<std::string> stopwords = ingest::default_stopwords();
    std::map<std::string, std::string> content_selectors;  // host -> selector
    std::string default_selector;                          // empty = built-in heuristic
    std::string output_dir = "ctiforge-out";
    std::string source_url_override;  // reported source for local files
    std::string prompts_dir;          // empty = embedded assets
    std::string author = "CTIForge";
    bool inline_images = false;
    uint64_t seed = 0;  // 0 = random rule ids
    int paragraph_workers = 8;

    Json to_json() const {
        Json out;
        out["schema_version"] = 1;
        out["provider"] = {{"kind", provider.kind},
                           {"replay_dir", provider.replay_dir},
                           {"endpoint_url", provider.http.endpoint_url},
                           {"model_name", provider.http.model_name},
                           {"api_key_env", provider.http.api_key_env},
                           {"request_timeout_s", provider.http.request_timeout_s},
                           {"max_retries", provider.http.max_retries},
                           {"max_concurrent_requests", provider.http.max_concurrent_requests}};
        out["voting"] = {{"n_explicit", voting.n_explicit},
                         {"t_explicit", voting.t_explicit},
                         {"t_implicit", voting.t_implicit}};
        out["stages"] = {{"vision", stages.vision},
                         {"api_extractor", stages.api_extractor},
                         {"optimizer", stages.optimizer}};
        out["temperatures"] = {{"vision", temperatures.vision},
                               {"explicit", temperatures.explicit_api},
                               {"implicit", temperatures.implicit_api},
                               {"ttp", temperatures.ttp},
                               {"generator", temperatures.generator},
                               {"optimizer", temperatures.optimizer},
                               {"selector", temperatures.selector},
                               {"remover", temperatures.remover},
                               {"ioc", temperatures.ioc}};
        out["stopwords"] = stopwords;
        out["content_selectors"] = content_selectors;
        out["default_selector"] = default_selector;
        out["output_dir"] = output_dir;
        out["source_url_override"] = source_url_override;
        out["prompts_dir"] = prompts_dir;
        out["author"] = author;
        out["inline_images"] = inline_images;
        out["seed"] = seed;
        out["paragraph_workers"] = paragraph_workers;
        return out;
    }

    static Result<PipelineConfig> from_json(const Json& node) {
        PipelineConfig config;
        if (node.contains("provider")) {
            const auto& p = node["provider"];
            config.provider.kind = p.value("kind", config.provider.kind);
            config.provider.replay_dir = p.value("replay_dir", "");
            config.provider.http.endpoint_url = p.value("endpoint_url", "");
            config.provider.http.model_name =
                p.value("model_name", config.provider.http.model_name);
            config.provider.http.api_key_env =
                p.value("api_key_env", config.provider.http.api_key_env);
            config.provider.http.request_timeout_s =
                p.value("request_timeout_s", config.provider.http.request_timeout_s);
            config.provider.http.max_retries =
                p.value("max_retries", config.provider.http.max_retries);
            config.provider.http.max_concurrent_requests = p.value(
                "max_concurrent_requests", config.provider.http.max_concurrent_requests);
        }
        if (node.contains("voting")) {
            const auto& v = node["voting"];
            config.voting.n_explicit = v.value("n_explicit", config.voting.n_explicit);
            config.voting.t_explicit = v.value("t_explicit", config.voting.t_explicit);
            config.voting.t_implicit = v.value("t_implicit", config.voting.t_implicit);
            auto valid = config.voting.validate();
            if (!valid) return valid.error();
        }
        if (node.contains("stages")) {
            const auto& s = node["stages"];
            config.stages.vision = s.value("vision", true);
            config.stages.api_extractor = s.value("api_extractor", true);
            config.stages.optimizer = s.value("optimizer", true);
        }
        if (node.contains("temperatures")) {
            const auto& t = node["temperatures"];
            config.temperatures.vision = t.value("vision", config.temperatures.vision);
            config.temperatures.explicit_api =
                t.value("explicit", config.temperatures.explicit_api);
            config.temperatures.implicit_api =
                t.value("implicit", config.temperatures.implicit_api);
            config.temperatures.ttp = t.value("ttp", config.temperatures.ttp);
            config.temperatures.generator = t.value("generator", config.temperatures.generator);
            config.temperatures.optimizer = t.value("optimizer", config.temperatures.optimizer);
            config.temperatures.selector = t.value("selector", config.temperatures.selector);
            config.temperatures.remover = t.value("remover", config.temperatures.remover);
            config.temperatures.ioc = t.value("ioc", config.temperatures.ioc);
        }
        if (node.contains("stopwords")) {
            config.stopwords.clear();
            for (const auto& word : node["stopwords"])
                config.stopwords.push_back(word.get<std::string>());
        }
        if (node.contains("content_selectors")) {
            for (const auto& [host, selector] : node["content_selectors"].items())
                config.content_selectors[host] = selector.get<std::string>();
        }
        config.default_selector = node.value("default_selector", "");
        config.output_dir = node.value("output_dir", config.output_dir);
        config.source_url_override = node.value("source_url_override", "");
        config.prompts_dir = node.value("prompts_dir", "");
        config.author = node.value("author", config.author);
        config.inline_images = node.value("inline_images", false);
        config.seed = node.value("seed", static_cast<uint64_t>(0));
        config.paragraph_workers = node.value("paragraph_workers", 8);
        return config;
    }

    static Result<PipelineConfig> load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) return Error{ErrorCode::Io, "cannot open config " + path.string()};
        Json doc = Json::parse(in, nullptr, false);
        if (doc.is_discarded())
            return Error{ErrorCode::Io, "config is not valid JSON: " + path.string()};
        return from_json(doc);
    }

    /// Stable hash of everything that affects outputs (seed excluded: it only
    /// drives generated rule ids).
    std::string hash() const {
        Json doc = to_json();
        doc.erase("seed");
        doc.erase("output_dir");
        return to_hex(fnv1a64(doc.dump()));
    }

    /// Content selector for a source URL: exact host-substring match in the
    /// per-site map, else the configured default.
    std::string selector_for(const std::string& url) const {
        for (const auto& [host, selector] : content_selectors) {
            if (url.find(host) != std::string::npos) return selector;
        }
        return default_selector;
    }
};

}  // namespace ctiforge::pipeline
