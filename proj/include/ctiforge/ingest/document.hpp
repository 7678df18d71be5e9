#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctiforge/common.hpp"

namespace ctiforge::ingest {

// ============================================================================
// Normalized report text
// ============================================================================

struct ImageRef {
    int ordinal = 0;  // unique, dense from 1, document order
    std::string url;
    std::string alt_text;
    int paragraph_index = 0;

    bool operator==(const ImageRef& other) const = default;
};

struct Paragraph {
    int index = 0;
    // Heading stack in effect, outermost first; levels strictly increase.
    std::vector<std::pair<int, std::string>> heading_path;
    std::string body;  // may contain [IMG:<n>] tokens, '|' table rows, tab-nested lists
    std::vector<std::string> image_transcripts;  // filled by the vision stage

    bool operator==(const Paragraph& other) const = default;
};

/// A report converted to the unified text format. `paragraphs` is the
/// filtered working variant; `full_text` always keeps everything.
struct Document {
    std::string source_url;
    std::string title;
    std::vector<Paragraph> paragraphs;
    std::string full_text;
    std::vector<ImageRef> images;
    std::string fetched_at;  // ISO 8601

    bool operator==(const Document& other) const = default;
};

inline std::string image_placeholder(int ordinal) {
    return "[IMG:" + std::to_string(ordinal) + "]";
}

// ============================================================================
// JSON schema (schema_version 1) — the on-disk form used for stage artifacts
// ============================================================================

inline Json to_json(const Document& doc) {
    Json out;
    out["schema_version"] = 1;
    out["source_url"] = doc.source_url;
    out["title"] = doc.title;
    out["fetched_at"] = doc.fetched_at;
    Json paragraphs = Json::array();
    for (const auto& paragraph : doc.paragraphs) {
        Json p;
        p["index"] = paragraph.index;
        Json path = Json::array();
        for (const auto& [level, text] : paragraph.heading_path)
            path.push_back({{"level", level}, {"text", text}});
        p["heading_path"] = path;
        p["body"] = paragraph.body;
        p["image_transcripts"] = paragraph.image_transcripts;
        paragraphs.push_back(std::move(p));
    }
    out["paragraphs"] = paragraphs;
    out["full_text"] = doc.full_text;
    Json images = Json::array();
    for (const auto& image : doc.images) {
        images.push_back({{"ordinal", image.ordinal},
                          {"url", image.url},
                          {"alt_text", image.alt_text},
                          {"paragraph_index", image.paragraph_index}});
    }
    out["images"] = images;
    return out;
}

inline Result<Document> document_from_json(const Json& node) {
    if (!node.is_object() || node.value("schema_version", 0) != 1)
        return Error{ErrorCode::Io, "unsupported document schema"};
    Document doc;
    doc.source_url = node.value("source_url", "");
    doc.title = node.value("title", "");
    doc.fetched_at = node.value("fetched_at", "");
    for (const auto& p : node.value("paragraphs", Json::array())) {
        Paragraph paragraph;
        paragraph.index = p.value("index", 0);
        for (const auto& h : p.value("heading_path", Json::array()))
            paragraph.heading_path.emplace_back(h.value("level", 1), h.value("text", ""));
        paragraph.body = p.value("body", "");
        for (const auto& t : p.value("image_transcripts", Json::array()))
            paragraph.image_transcripts.push_back(t.get<std::string>());
        doc.paragraphs.push_back(std::move(paragraph));
    }
    doc.full_text = node.value("full_text", "");
    for (const auto& i : node.value("images", Json::array())) {
        ImageRef image;
        image.ordinal = i.value("ordinal", 0);
        image.url = i.value("url", "");
        image.alt_text = i.value("alt_text", "");
        image.paragraph_index = i.value("paragraph_index", 0);
        doc.images.push_back(image);
    }
    return doc;
}

}  // namespace ctiforge::ingest
