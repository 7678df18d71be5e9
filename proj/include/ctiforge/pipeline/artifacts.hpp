#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "ctiforge/common.hpp"

namespace ctiforge::pipeline {

// ============================================================================
// Stage artifacts
//
// Each stage writes <outdir>/stages/<stage>.json carrying an upstream hash
// (input identity + the config slice feeding that stage). On the next run the
// stage is skipped when the stored hash still matches, which makes long
// pipeline runs resumable and safe after config edits.
// ============================================================================

inline std::filesystem::path artifact_path(const std::filesystem::path& out_dir,
                                           const std::string& stage) {
    return out_dir / "stages" / (stage + ".json");
}

inline Status save_artifact(const std::filesystem::path& out_dir, const std::string& stage,
                            const std::string& upstream_hash, const Json& payload) {
    auto path = artifact_path(out_dir, stage);
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path);
    if (!out) return Error{ErrorCode::Io, "cannot write artifact " + path.string()};
    Json doc;
    doc["schema_version"] = 1;
    doc["stage"] = stage;
    doc["upstream_hash"] = upstream_hash;
    doc["payload"] = payload;
    out << doc.dump(1) << "\n";
    return ok_status();
}

/// The stored payload, provided the artifact exists and its upstream hash
/// matches; nullopt means the stage has to run.
inline std::optional<Json> load_artifact(const std::filesystem::path& out_dir,
                                         const std::string& stage,
                                         const std::string& upstream_hash) {
    auto path = artifact_path(out_dir, stage);
    std::ifstream in(path);
    if (!in) return std::nullopt;
    Json doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded()) return std::nullopt;
    if (doc.value("upstream_hash", "") != upstream_hash) return std::nullopt;
    if (!doc.contains("payload")) return std::nullopt;
    return doc["payload"];
}

}  // namespace ctiforge::pipeline
