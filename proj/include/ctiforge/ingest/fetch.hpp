#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <httplib.h>

#include "ctiforge/common.hpp"

namespace ctiforge::ingest {

// ============================================================================
// Report download
// ============================================================================

struct FetchResult {
    std::string html;
    std::string final_url;
};

namespace detail {

struct UrlParts {
    std::string scheme;
    std::string host_port;
    std::string path;
};

inline Result<UrlParts> split_url(const std::string& url) {
    size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        return Error{ErrorCode::InvalidArgument, "URL must be http(s): " + url};
    UrlParts parts;
    parts.scheme = strings::to_lower(url.substr(0, scheme_end));
    if (parts.scheme != "http" && parts.scheme != "https")
        return Error{ErrorCode::InvalidArgument, "unsupported scheme: " + parts.scheme};
    size_t path_begin = url.find('/', scheme_end + 3);
    if (path_begin == std::string::npos) {
        parts.host_port = url.substr(scheme_end + 3);
        parts.path = "/";
    } else {
        parts.host_port = url.substr(scheme_end + 3, path_begin - scheme_end - 3);
        parts.path = url.substr(path_begin);
    }
    if (parts.host_port.empty())
        return Error{ErrorCode::InvalidArgument, "URL has no host: " + url};
    return parts;
}

/// Promotes ISO-8859-1 / Windows-1252 bytes to UTF-8; UTF-8 passes through.
inline std::string decode_charset(const std::string& body, const std::string& content_type) {
    std::string lowered = strings::to_lower(content_type);
    bool latin1 = lowered.find("iso-8859-1") != std::string::npos ||
                  lowered.find("windows-1252") != std::string::npos ||
                  lowered.find("latin-1") != std::string::npos;
    if (!latin1) return body;  // default: UTF-8
    std::string out;
    out.reserve(body.size());
    for (unsigned char c : body) {
        if (c < 0x80) {
            out += static_cast<char>(c);
        } else {
            out += static_cast<char>(0xC0 | (c >> 6));
            out += static_cast<char>(0x80 | (c & 0x3F));
        }
    }
    return out;
}

inline bool is_html_content_type(const std::string& content_type) {
    if (content_type.empty()) return true;  // absent header: assume HTML
    std::string lowered = strings::to_lower(content_type);
    return lowered.find("text/html") != std::string::npos ||
           lowered.find("application/xhtml") != std::string::npos;
}

}  // namespace detail

/// Downloads a report page. Follows redirects; decodes the body per the
/// declared charset, defaulting to UTF-8.
inline Result<FetchResult> fetch(const std::string& url, int timeout_s = 30) {
    auto parts = detail::split_url(url);
    if (!parts) return parts.error();

    std::string base = parts.value().scheme + "://" + parts.value().host_port;
    httplib::Client client(base);
    client.set_follow_location(true);
    client.set_connection_timeout(timeout_s, 0);
    client.set_read_timeout(timeout_s, 0);

    auto res = client.Get(parts.value().path);
    if (!res) return Error{ErrorCode::Network, httplib::to_string(res.error())};
    if (res->status < 200 || res->status >= 300)
        return Error{ErrorCode::HttpStatus, "HTTP " + std::to_string(res->status) + " for " + url,
                     res->status};
    std::string content_type = res->get_header_value("Content-Type");
    if (!detail::is_html_content_type(content_type))
        return Error{ErrorCode::NonHtmlContent, "content-type is " + content_type};
    FetchResult out;
    out.html = detail::decode_charset(res->body, content_type);
    out.final_url = url;
    return out;
}

struct BytesResult {
    std::string body;
    std::string media_type;
};

/// Raw download without content-type checks (used to inline images).
inline Result<BytesResult> fetch_bytes(const std::string& url, int timeout_s = 30) {
    auto parts = detail::split_url(url);
    if (!parts) return parts.error();
    httplib::Client client(parts.value().scheme + "://" + parts.value().host_port);
    client.set_follow_location(true);
    client.set_connection_timeout(timeout_s, 0);
    client.set_read_timeout(timeout_s, 0);
    auto res = client.Get(parts.value().path);
    if (!res) return Error{ErrorCode::Network, httplib::to_string(res.error())};
    if (res->status < 200 || res->status >= 300)
        return Error{ErrorCode::HttpStatus, "HTTP " + std::to_string(res->status), res->status};
    std::string media_type = res->get_header_value("Content-Type");
    if (media_type.empty()) media_type = "application/octet-stream";
    size_t semi = media_type.find(';');
    if (semi != std::string::npos) media_type = media_type.substr(0, semi);
    return BytesResult{res->body, media_type};
}

/// Accepts either an http(s) URL or a local file path.
inline Result<FetchResult> load_source(const std::string& url_or_path, int timeout_s = 30) {
    if (url_or_path.starts_with("http://") || url_or_path.starts_with("https://"))
        return fetch(url_or_path, timeout_s);
    std::ifstream in(url_or_path, std::ios::binary);
    if (!in) return Error{ErrorCode::Io, "cannot open file " + url_or_path};
    std::ostringstream buffer;
    buffer << in.rdbuf();
    FetchResult out;
    out.html = buffer.str();
    out.final_url = "file://" + std::filesystem::absolute(url_or_path).string();
    return out;
}

}  // namespace ctiforge::ingest
