#pragma once

#include <regex>
#include <string>
#include <vector>

#include "ctiforge/ingest/document.hpp"

namespace ctiforge::ingest {

// ============================================================================
// Non-essential section filtering
// ============================================================================

/// Default heading stopwords. Entries containing regex metacharacters are
/// treated as case-insensitive regular expressions, the rest as plain
/// case-insensitive substrings. Config can override the whole list.
inline const std::vector<std::string>& default_stopwords() {
    static const std::vector<std::string> words = {
        "recommendation", "conclusion", "about ",    "overview",
        "summary",        "mitigation", "how .* can help",
    };
    return words;
}

namespace detail {

inline bool heading_matches_stopword(const std::string& heading,
                                     const std::vector<std::string>& stopwords) {
    for (const auto& word : stopwords) {
        if (word.find_first_of(".*?[](){}\\^$+") != std::string::npos) {
            try {
                std::regex re(word, std::regex::icase);
                if (std::regex_search(heading, re)) return true;
            } catch (const std::regex_error&) {
                if (strings::icontains(heading, word)) return true;
            }
        } else if (strings::icontains(heading, word)) {
            return true;
        }
    }
    return false;
}

}  // namespace detail

/// Removes every paragraph governed by a stopword heading: the paragraph
/// under the matching heading and everything after it until the next heading
/// of equal or higher level. Because heading_path is the exact heading stack,
/// this is the same as dropping paragraphs whose path contains a match.
/// full_text and images are left untouched; idempotent.
inline Document filter_sections(Document doc, const std::vector<std::string>& stopwords) {
    std::vector<Paragraph> kept;
    kept.reserve(doc.paragraphs.size());
    for (auto& paragraph : doc.paragraphs) {
        bool blocked = false;
        for (const auto& [level, text] : paragraph.heading_path) {
            if (detail::heading_matches_stopword(text, stopwords)) {
                blocked = true;
                break;
            }
        }
        if (!blocked) kept.push_back(std::move(paragraph));
    }
    doc.paragraphs = std::move(kept);
    return doc;
}

inline Document filter_sections(Document doc) {
    return filter_sections(std::move(doc), default_stopwords());
}

}  // namespace ctiforge::ingest
