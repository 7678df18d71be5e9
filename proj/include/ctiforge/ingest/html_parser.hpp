#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctiforge/ingest/document.hpp"

namespace ctiforge::ingest {

// ============================================================================
// Error-tolerant HTML -> unified text conversion
//
// The unified format follows four rules:
//   1. blank lines separate content blocks (paragraphs, code, tables, lists);
//   2. headings are marked with '#' times their level;
//   3. tables render one row per line with ' | ' between columns, nested list
//      items are indented with one tab per nesting level;
//   4. images become [IMG:<n>] placeholders at their original positions.
// ============================================================================

namespace html {

struct Token {
    enum class Kind { StartTag, EndTag, Text };
    Kind kind = Kind::Text;
    std::string name;                                        // tags, lowercase
    std::vector<std::pair<std::string, std::string>> attrs;  // tags
    std::string text;                                        // Text
    bool self_closing = false;

    const std::string* attr(std::string_view key) const {
        for (const auto& [k, v] : attrs) {
            if (strings::iequals(k, key)) return &v;
        }
        return nullptr;
    }
};

inline std::string decode_entities(std::string_view in) {
    static const std::map<std::string, std::string, std::less<>> named = {
        {"amp", "&"},   {"lt", "<"},     {"gt", ">"},     {"quot", "\""},    {"apos", "'"},
        {"nbsp", " "},  {"ndash", "-"},  {"mdash", "-"},  {"hellip", "..."}, {"rsquo", "'"},
        {"lsquo", "'"}, {"rdquo", "\""}, {"ldquo", "\""}, {"copy", "(c)"},
    };
    std::string out;
    out.reserve(in.size());
    size_t i = 0;
    while (i < in.size()) {
        if (in[i] != '&') {
            out += in[i++];
            continue;
        }
        size_t semi = in.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 12) {
            out += in[i++];
            continue;
        }
        std::string_view body = in.substr(i + 1, semi - i - 1);
        if (!body.empty() && body[0] == '#') {
            long code = 0;
            if (body.size() > 1 && (body[1] == 'x' || body[1] == 'X'))
                code = std::strtol(std::string(body.substr(2)).c_str(), nullptr, 16);
            else if (body.size() > 1)
                code = std::strtol(std::string(body.substr(1)).c_str(), nullptr, 10);
            if (code > 0) {
                if (code < 0x80) {
                    out += static_cast<char>(code);
                } else if (code < 0x800) {
                    out += static_cast<char>(0xC0 | (code >> 6));
                    out += static_cast<char>(0x80 | (code & 0x3F));
                } else {
                    out += static_cast<char>(0xE0 | (code >> 12));
                    out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                    out += static_cast<char>(0x80 | (code & 0x3F));
                }
                i = semi + 1;
                continue;
            }
        }
        auto it = named.find(body);
        if (it != named.end()) {
            out += it->second;
            i = semi + 1;
        } else {
            out += in[i++];
        }
    }
    return out;
}

/// Splits HTML into tags and decoded text, skipping comments, doctype, and
/// the contents of script/style/noscript. Unclosed tags are tolerated.
inline std::vector<Token> tokenize(std::string_view html) {
    std::vector<Token> tokens;
    size_t i = 0;
    std::string skip_until_close;

    while (i < html.size()) {
        if (!skip_until_close.empty()) {
            size_t close = i;
            while (true) {
                close = html.find('<', close);
                if (close == std::string_view::npos) return tokens;
                std::string_view rest = html.substr(close);
                if (rest.size() > 2 + skip_until_close.size() && rest[1] == '/' &&
                    strings::iequals(rest.substr(2, skip_until_close.size()),
                                     skip_until_close)) {
                    break;
                }
                ++close;
            }
            i = html.find('>', close);
            if (i == std::string_view::npos) return tokens;
            ++i;
            skip_until_close.clear();
            continue;
        }

        if (html[i] == '<') {
            if (html.compare(i, 4, "<!--") == 0) {
                size_t end = html.find("-->", i + 4);
                i = end == std::string_view::npos ? html.size() : end + 3;
                continue;
            }
            if (i + 1 < html.size() && (html[i + 1] == '!' || html[i + 1] == '?')) {
                size_t end = html.find('>', i);
                i = end == std::string_view::npos ? html.size() : end + 1;
                continue;
            }
            size_t end = html.find('>', i);
            if (end == std::string_view::npos) break;  // truncated tag: stop
            std::string_view raw = html.substr(i + 1, end - i - 1);
            i = end + 1;
            if (raw.empty()) continue;

            Token token;
            token.kind = Token::Kind::StartTag;
            if (raw[0] == '/') {
                token.kind = Token::Kind::EndTag;
                raw = raw.substr(1);
            }
            if (!raw.empty() && raw.back() == '/') {
                token.self_closing = true;
                raw = raw.substr(0, raw.size() - 1);
            }
            size_t p = 0;
            while (p < raw.size() && !std::isspace(static_cast<unsigned char>(raw[p]))) ++p;
            token.name = strings::to_lower(raw.substr(0, p));
            while (p < raw.size()) {
                while (p < raw.size() && std::isspace(static_cast<unsigned char>(raw[p]))) ++p;
                size_t key_start = p;
                while (p < raw.size() && raw[p] != '=' && raw[p] != '/' &&
                       !std::isspace(static_cast<unsigned char>(raw[p])))
                    ++p;
                if (p == key_start) {
                    ++p;
                    continue;
                }
                std::string key = strings::to_lower(raw.substr(key_start, p - key_start));
                std::string value;
                while (p < raw.size() && std::isspace(static_cast<unsigned char>(raw[p]))) ++p;
                if (p < raw.size() && raw[p] == '=') {
                    ++p;
                    while (p < raw.size() && std::isspace(static_cast<unsigned char>(raw[p])))
                        ++p;
                    if (p < raw.size() && (raw[p] == '"' || raw[p] == '\'')) {
                        char quote = raw[p++];
                        size_t value_start = p;
                        while (p < raw.size() && raw[p] != quote) ++p;
                        value = std::string(raw.substr(value_start, p - value_start));
                        if (p < raw.size()) ++p;
                    } else {
                        size_t value_start = p;
                        while (p < raw.size() &&
                               !std::isspace(static_cast<unsigned char>(raw[p])))
                            ++p;
                        value = std::string(raw.substr(value_start, p - value_start));
                    }
                }
                token.attrs.emplace_back(std::move(key), decode_entities(value));
            }
            if (token.kind == Token::Kind::StartTag && !token.self_closing &&
                (token.name == "script" || token.name == "style" ||
                 token.name == "noscript")) {
                skip_until_close = token.name;
            }
            tokens.push_back(std::move(token));
        } else {
            size_t end = html.find('<', i);
            if (end == std::string_view::npos) end = html.size();
            Token token;
            token.kind = Token::Kind::Text;
            token.text = decode_entities(html.substr(i, end - i));
            tokens.push_back(std::move(token));
            i = end;
        }
    }
    return tokens;
}

// ----------------------------------------------------------------------------
// Content selection: "tag", "#id", or ".class" -> token range of the subtree.
// ----------------------------------------------------------------------------

struct SelectorMatch {
    size_t begin = 0;
    size_t end = 0;
    size_t text_size = 0;
};

inline bool selector_matches(const Token& token, std::string_view selector) {
    if (selector.empty()) return false;
    if (selector[0] == '#') {
        const std::string* id = token.attr("id");
        return id != nullptr && *id == selector.substr(1);
    }
    if (selector[0] == '.') {
        const std::string* classes = token.attr("class");
        if (classes == nullptr) return false;
        for (const auto& cls : strings::split(*classes, ' ')) {
            if (cls == selector.substr(1)) return true;
        }
        return false;
    }
    return token.name == selector;
}

inline std::vector<SelectorMatch> find_subtrees(const std::vector<Token>& tokens,
                                                std::string_view selector) {
    std::vector<SelectorMatch> matches;
    for (size_t i = 0; i < tokens.size(); ++i) {
        const Token& token = tokens[i];
        if (token.kind != Token::Kind::StartTag || token.self_closing) continue;
        if (!selector_matches(token, selector)) continue;
        int depth = 1;
        size_t text_size = 0;
        size_t j = i + 1;
        while (j < tokens.size() && depth > 0) {
            if (tokens[j].kind == Token::Kind::StartTag && tokens[j].name == token.name &&
                !tokens[j].self_closing)
                ++depth;
            else if (tokens[j].kind == Token::Kind::EndTag && tokens[j].name == token.name)
                --depth;
            else if (tokens[j].kind == Token::Kind::Text)
                text_size += tokens[j].text.size();
            ++j;
        }
        size_t subtree_end = depth == 0 ? j - 1 : tokens.size();
        matches.push_back({i + 1, subtree_end, text_size});
    }
    return matches;
}

}  // namespace html

namespace detail {

inline std::string collapse_ws(std::string_view in) {
    std::string out;
    bool pending_space = false;
    for (char c : in) {
        if (std::isspace(static_cast<unsigned char>(c)) && c != '\n') {
            pending_space = true;
        } else if (c == '\n') {
            // explicit line breaks survive collapsing
            while (!out.empty() && out.back() == ' ') out.pop_back();
            out += '\n';
            pending_space = false;
        } else {
            if (pending_space && !out.empty() && out.back() != '\n') out += ' ';
            pending_space = false;
            out += c;
        }
    }
    while (!out.empty() && (out.back() == ' ' || out.back() == '\n')) out.pop_back();
    return out;
}

inline bool is_heading(const std::string& name) {
    return name.size() == 2 && name[0] == 'h' && name[1] >= '1' && name[1] <= '6';
}

inline bool is_block(const std::string& name) {
    static const char* blocks[] = {"p",      "div",        "section", "article",
                                   "blockquote", "figure", "figcaption", "header",
                                   "footer", "aside",      "main"};
    for (const char* b : blocks) {
        if (name == b) return true;
    }
    return false;
}

struct TableState {
    std::vector<std::string> rows;
    std::vector<std::string> current_row;
    std::string current_cell;
    bool in_cell = false;
};

// Assembles paragraphs and full text while the token walk routes content here.
class UnifiedTextBuilder {
public:
    explicit UnifiedTextBuilder(Document& doc) : doc_(doc) {}

    void heading(int level, const std::string& text) {
        flush_paragraph(false);
        std::string clean = collapse_ws(text);
        if (clean.empty()) return;
        while (!heading_stack_.empty() && heading_stack_.back().first >= level)
            heading_stack_.pop_back();
        heading_stack_.emplace_back(level, clean);
        full_blocks_.push_back(std::string(static_cast<size_t>(level), '#') + " " + clean);
        if (doc_.title.empty() && level == 1) doc_.title = clean;
    }

    void inline_text(std::string_view text) { current_ += text; }

    void line_break() { current_ += '\n'; }

    /// Records an image and returns its placeholder token; the caller splices
    /// the token wherever the image sat.
    std::string register_image(const std::string& url, const std::string& alt) {
        ImageRef ref;
        ref.ordinal = static_cast<int>(doc_.images.size()) + 1;
        ref.url = url;
        ref.alt_text = alt;
        doc_.images.push_back(ref);
        pending_images_.push_back(ref.ordinal);
        return image_placeholder(ref.ordinal);
    }

    /// Tables, lists, and code blocks become standalone paragraphs with their
    /// internal line structure preserved.
    void verbatim_block(std::string text) {
        flush_paragraph(false);
        current_ = std::move(text);
        flush_paragraph(true);
    }

    void block_boundary() { flush_paragraph(false); }

    void finish() {
        flush_paragraph(false);
        doc_.full_text = strings::join(full_blocks_, "\n\n");
    }

private:
    void flush_paragraph(bool verbatim) {
        std::string body = verbatim ? strings::trim(current_) : collapse_ws(current_);
        current_.clear();
        if (body.empty()) return;  // pending images stay for the block that has their token
        Paragraph paragraph;
        paragraph.index = static_cast<int>(doc_.paragraphs.size());
        paragraph.heading_path = heading_stack_;
        paragraph.body = body;
        for (int ordinal : pending_images_)
            doc_.images[static_cast<size_t>(ordinal - 1)].paragraph_index = paragraph.index;
        pending_images_.clear();
        doc_.paragraphs.push_back(std::move(paragraph));
        full_blocks_.push_back(body);
    }

    Document& doc_;
    std::vector<std::pair<int, std::string>> heading_stack_;
    std::vector<std::string> full_blocks_;
    std::string current_;
    std::vector<int> pending_images_;
};

}  // namespace detail

/// Converts HTML to a Document in the unified text format. `content_selector`
/// ("tag", "#id", or ".class") restricts parsing to that subtree; when empty,
/// the largest <article>, then <main>, then <body>, then the whole input is
/// used. Paragraphs are unfiltered at this stage.
inline Result<Document> parse_html(std::string_view html_text,
                                   std::string_view content_selector = "",
                                   std::string_view source_url = "") {
    std::vector<html::Token> tokens = html::tokenize(html_text);

    size_t range_begin = 0, range_end = tokens.size();
    auto narrow_to_largest = [&](std::string_view selector) {
        auto matches = html::find_subtrees(tokens, selector);
        if (matches.empty()) return false;
        const auto& best = *std::max_element(
            matches.begin(), matches.end(),
            [](const auto& a, const auto& b) { return a.text_size < b.text_size; });
        range_begin = best.begin;
        range_end = best.end;
        return true;
    };
    if (!content_selector.empty()) {
        if (!narrow_to_largest(content_selector))
            return Error{ErrorCode::EmptyContent, "content selector '" +
                                                      std::string(content_selector) +
                                                      "' matched nothing"};
    } else {
        for (const char* candidate : {"article", "main", "body"}) {
            if (narrow_to_largest(candidate)) break;
        }
    }

    Document doc;
    doc.source_url = std::string(source_url);
    for (size_t i = 0; i + 1 < tokens.size(); ++i) {
        if (tokens[i].kind == html::Token::Kind::StartTag && tokens[i].name == "title" &&
            tokens[i + 1].kind == html::Token::Kind::Text) {
            doc.title = detail::collapse_ws(tokens[i + 1].text);
            break;
        }
    }

    detail::UnifiedTextBuilder builder(doc);

    int heading_level = 0;
    std::string heading_text;
    int pre_depth = 0;
    std::string pre_text;
    std::vector<detail::TableState> tables;
    int list_depth = -1;
    std::string list_item;
    bool in_list_item = false;
    std::vector<std::string> list_lines;

    auto flush_list_item = [&] {
        if (!in_list_item) return;
        std::string clean = detail::collapse_ws(list_item);
        if (!clean.empty())
            list_lines.push_back(
                std::string(static_cast<size_t>(std::max(0, list_depth)), '\t') + clean);
        list_item.clear();
        in_list_item = false;
    };
    // Routes flowing text into whichever construct is currently open.
    auto sink = [&](const std::string& text) {
        if (heading_level > 0)
            heading_text += text;
        else if (!tables.empty()) {
            if (tables.back().in_cell) tables.back().current_cell += text;
        } else if (in_list_item)
            list_item += text;
        else if (pre_depth > 0)
            pre_text += text;
        else
            builder.inline_text(text);
    };

    for (size_t i = range_begin; i < range_end && i < tokens.size(); ++i) {
        const html::Token& token = tokens[i];
        switch (token.kind) {
            case html::Token::Kind::StartTag: {
                const std::string& name = token.name;
                if (detail::is_heading(name)) {
                    heading_level = name[1] - '0';
                    heading_text.clear();
                } else if (name == "table") {
                    tables.emplace_back();
                } else if (!tables.empty() && (name == "td" || name == "th")) {
                    tables.back().in_cell = true;
                    tables.back().current_cell.clear();
                } else if (!tables.empty() && name == "tr") {
                    tables.back().current_row.clear();
                } else if (name == "ul" || name == "ol") {
                    flush_list_item();
                    ++list_depth;
                } else if (name == "li") {
                    flush_list_item();
                    in_list_item = true;
                } else if (name == "pre") {
                    builder.block_boundary();
                    ++pre_depth;
                } else if (name == "br") {
                    sink(pre_depth > 0 ? "\n" : " ");
                } else if (name == "img") {
                    const std::string* src = token.attr("src");
                    const std::string* alt = token.attr("alt");
                    if (src != nullptr && !src->empty()) {
                        std::string token_text =
                            builder.register_image(*src, alt ? *alt : "");
                        sink(" " + token_text + " ");
                    }
                } else if (detail::is_block(name) && tables.empty() && !in_list_item &&
                           pre_depth == 0 && heading_level == 0) {
                    builder.block_boundary();
                }
                break;
            }
            case html::Token::Kind::EndTag: {
                const std::string& name = token.name;
                if (detail::is_heading(name) && heading_level > 0) {
                    builder.heading(heading_level, heading_text);
                    heading_level = 0;
                    heading_text.clear();
                } else if (name == "table" && !tables.empty()) {
                    detail::TableState table = std::move(tables.back());
                    tables.pop_back();
                    if (table.in_cell && !detail::collapse_ws(table.current_cell).empty())
                        table.current_row.push_back(detail::collapse_ws(table.current_cell));
                    if (!table.current_row.empty())
                        table.rows.push_back(strings::join(table.current_row, " | "));
                    std::string block = strings::join(table.rows, "\n");
                    if (!block.empty()) builder.verbatim_block(std::move(block));
                } else if (!tables.empty() && (name == "td" || name == "th")) {
                    auto& table = tables.back();
                    if (table.in_cell) {
                        table.current_row.push_back(detail::collapse_ws(table.current_cell));
                        table.in_cell = false;
                    }
                } else if (!tables.empty() && name == "tr") {
                    auto& table = tables.back();
                    if (!table.current_row.empty()) {
                        table.rows.push_back(strings::join(table.current_row, " | "));
                        table.current_row.clear();
                    }
                } else if (name == "ul" || name == "ol") {
                    flush_list_item();
                    --list_depth;
                    if (list_depth < 0 && !list_lines.empty()) {
                        builder.verbatim_block(strings::join(list_lines, "\n"));
                        list_lines.clear();
                    }
                } else if (name == "li") {
                    flush_list_item();
                } else if (name == "pre") {
                    if (pre_depth > 0 && --pre_depth == 0) {
                        builder.verbatim_block(std::move(pre_text));
                        pre_text.clear();
                    }
                } else if (detail::is_block(name) && tables.empty() && !in_list_item &&
                           pre_depth == 0 && heading_level == 0) {
                    builder.block_boundary();
                }
                break;
            }
            case html::Token::Kind::Text:
                sink(token.text);
                break;
        }
    }
    flush_list_item();
    if (!list_lines.empty()) builder.verbatim_block(strings::join(list_lines, "\n"));
    if (pre_depth > 0 && !pre_text.empty()) builder.verbatim_block(std::move(pre_text));
    builder.finish();

    if (doc.paragraphs.empty() && doc.images.empty())
        return Error{ErrorCode::EmptyContent, "no content found"};
    return doc;
}

}  // namespace ctiforge::ingest
