#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace ctiforge {

/// Project-wide JSON type. Insertion-ordered: selection and criteria order in
/// rule drafts is significant and must survive parse/serialize cycles.
using Json = nlohmann::ordered_json;

// ============================================================================
// Errors
// ============================================================================

enum class ErrorCode {
    // sigma
    YamlSyntax,
    MissingField,
    UnknownConditionIdentifier,
    UnreferencedSelection,
    InvalidLevel,
    InvalidStatus,
    InvalidTag,
    NestedValueStructure,
    DuplicateFieldKey,
    InvalidSelectionName,
    UnbalancedParens,
    UnexpectedToken,
    UnknownModifier,
    EmptySelection,
    // llm gateway
    Transport,
    RateLimited,
    SchemaViolation,
    Timeout,
    MissingFixture,
    ProviderMisconfigured,
    // ingest
    Network,
    NonHtmlContent,
    HttpStatus,
    EmptyContent,
    // extraction / rulegen / refine
    CatalogMiss,
    PostconditionViolation,
    Rejected,
    // eval
    UnknownEntityType,
    AnnotationMismatch,
    // generic
    InvalidArgument,
    Io,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::YamlSyntax: return "YamlSyntax";
        case ErrorCode::MissingField: return "MissingField";
        case ErrorCode::UnknownConditionIdentifier: return "UnknownConditionIdentifier";
        case ErrorCode::UnreferencedSelection: return "UnreferencedSelection";
        case ErrorCode::InvalidLevel: return "InvalidLevel";
        case ErrorCode::InvalidStatus: return "InvalidStatus";
        case ErrorCode::InvalidTag: return "InvalidTag";
        case ErrorCode::NestedValueStructure: return "NestedValueStructure";
        case ErrorCode::DuplicateFieldKey: return "DuplicateFieldKey";
        case ErrorCode::InvalidSelectionName: return "InvalidSelectionName";
        case ErrorCode::UnbalancedParens: return "UnbalancedParens";
        case ErrorCode::UnexpectedToken: return "UnexpectedToken";
        case ErrorCode::UnknownModifier: return "UnknownModifier";
        case ErrorCode::EmptySelection: return "EmptySelection";
        case ErrorCode::Transport: return "Transport";
        case ErrorCode::RateLimited: return "RateLimited";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::MissingFixture: return "MissingFixture";
        case ErrorCode::ProviderMisconfigured: return "ProviderMisconfigured";
        case ErrorCode::Network: return "Network";
        case ErrorCode::NonHtmlContent: return "NonHtmlContent";
        case ErrorCode::HttpStatus: return "HttpStatus";
        case ErrorCode::EmptyContent: return "EmptyContent";
        case ErrorCode::CatalogMiss: return "CatalogMiss";
        case ErrorCode::PostconditionViolation: return "PostconditionViolation";
        case ErrorCode::Rejected: return "Rejected";
        case ErrorCode::UnknownEntityType: return "UnknownEntityType";
        case ErrorCode::AnnotationMismatch: return "AnnotationMismatch";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

struct Error {
    ErrorCode code = ErrorCode::InvalidArgument;
    std::string message;
    int status = 0;  // HTTP status when code == HttpStatus

    std::string format() const {
        std::string out(to_string(code));
        if (status != 0) {
            out += "(" + std::to_string(status) + ")";
        }
        if (!message.empty()) {
            out += ": " + message;
        }
        return out;
    }
};

/// Value-or-error carrier used at module boundaries.
template <typename T>
class Result {
public:
    Result(T value) : data_(std::move(value)) {}
    Result(Error error) : data_(std::move(error)) {}
    Result(ErrorCode code, std::string message) : data_(Error{code, std::move(message)}) {}

    explicit operator bool() const { return std::holds_alternative<T>(data_); }
    bool ok() const { return std::holds_alternative<T>(data_); }

    const T& value() const& { return std::get<T>(data_); }
    T& value() & { return std::get<T>(data_); }
    T take() { return std::move(std::get<T>(data_)); }

    const Error& error() const { return std::get<Error>(data_); }

private:
    std::variant<T, Error> data_;
};

struct Unit {};
using Status = Result<Unit>;

inline Status ok_status() { return Status(Unit{}); }

// ============================================================================
// String helpers
// ============================================================================

namespace strings {

inline std::string trim(std::string_view s) {
    size_t begin = 0;
    size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return std::string(s.substr(begin, end - begin));
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
               return std::tolower(x) == std::tolower(y);
           });
}

inline bool icontains(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                          [](unsigned char x, unsigned char y) {
                              return std::tolower(x) == std::tolower(y);
                          });
    return it != haystack.end();
}

inline std::vector<std::string> split(std::string_view s, char delim) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = s.find(delim, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

inline std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    if (from.empty()) return s;
    size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

}  // namespace strings

// ============================================================================
// Hashing / ids / time
// ============================================================================

inline std::string base64_encode(std::string_view data) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve(((data.size() + 2) / 3) * 4);
    unsigned int acc = 0;
    int bits = -6;
    for (unsigned char c : data) {
        acc = (acc << 8) + c;
        bits += 8;
        while (bits >= 0) {
            out.push_back(alphabet[(acc >> bits) & 0x3F]);
            bits -= 6;
        }
    }
    if (bits > -6) out.push_back(alphabet[((acc << 8) >> (bits + 8)) & 0x3F]);
    while (out.size() % 4 != 0) out.push_back('=');
    return out;
}

/// FNV-1a 64-bit. Stable across platforms; used for fixture keys and
/// stage-artifact content addressing, not for security.
inline uint64_t fnv1a64(std::string_view data, uint64_t seed = 1469598103934665603ULL) {
    uint64_t hash = seed;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

inline std::string to_hex(uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

/// Random version-4 UUID from the given engine (seedable for reproducible runs).
inline std::string uuid4(std::mt19937_64& rng) {
    std::uniform_int_distribution<uint64_t> dist;
    uint64_t hi = dist(rng);
    uint64_t lo = dist(rng);
    hi = (hi & 0xFFFFFFFFFFFF0FFFULL) | 0x0000000000004000ULL;  // version 4
    lo = (lo & 0x3FFFFFFFFFFFFFFFULL) | 0x8000000000000000ULL;  // variant 10
    std::string hex = to_hex(hi) + to_hex(lo);
    return hex.substr(0, 8) + "-" + hex.substr(8, 4) + "-" + hex.substr(12, 4) + "-" +
           hex.substr(16, 4) + "-" + hex.substr(20, 12);
}

/// Current date as YYYY/MM/DD (the Sigma metadata convention).
inline std::string current_date() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d/%02d/%02d", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday);
    return buf;
}

inline std::string iso8601_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

}  // namespace ctiforge
