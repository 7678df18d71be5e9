#pragma once

// Independent reference implementations the tests check the library against.
// These deliberately avoid the code paths under test.

#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace ctiforge::testing {

// ----------------------------------------------------------------------------
// Boolean-expression oracle: shunting-yard evaluation straight from the
// precedence table (not 3 > and 2 > or 1), independent of the AST parser.
// ----------------------------------------------------------------------------

class ShuntingYardEvaluator {
public:
    explicit ShuntingYardEvaluator(const std::map<std::string, bool>& env) : env_(env) {}

    // Returns the value of the expression; throws std::runtime_error on
    // malformed input (tests only feed well-formed text).
    bool evaluate(const std::string& text) {
        std::vector<std::string> output;  // RPN
        std::vector<std::string> ops;
        for (const auto& token : tokenize(text)) {
            if (token == "(") {
                ops.push_back(token);
            } else if (token == ")") {
                while (!ops.empty() && ops.back() != "(") {
                    output.push_back(ops.back());
                    ops.pop_back();
                }
                if (ops.empty()) throw std::runtime_error("unbalanced parens");
                ops.pop_back();
            } else if (is_operator(token)) {
                // `not` is right-associative; `and`/`or` left-associative.
                while (!ops.empty() && ops.back() != "(" &&
                       (prec(ops.back()) > prec(token) ||
                        (prec(ops.back()) == prec(token) && token != "not"))) {
                    output.push_back(ops.back());
                    ops.pop_back();
                }
                ops.push_back(token);
            } else {
                output.push_back(token);
            }
        }
        while (!ops.empty()) {
            if (ops.back() == "(") throw std::runtime_error("unbalanced parens");
            output.push_back(ops.back());
            ops.pop_back();
        }

        std::vector<bool> stack;
        for (const auto& token : output) {
            if (token == "not") {
                bool a = stack.back();
                stack.pop_back();
                stack.push_back(!a);
            } else if (token == "and" || token == "or") {
                bool b = stack.back();
                stack.pop_back();
                bool a = stack.back();
                stack.pop_back();
                stack.push_back(token == "and" ? (a && b) : (a || b));
            } else {
                stack.push_back(env_.at(token));
            }
        }
        if (stack.size() != 1) throw std::runtime_error("bad expression");
        return stack.back();
    }

private:
    static bool is_operator(const std::string& t) {
        return t == "and" || t == "or" || t == "not";
    }
    static int prec(const std::string& t) {
        if (t == "not") return 3;
        if (t == "and") return 2;
        return 1;
    }
    static std::vector<std::string> tokenize(const std::string& text) {
        std::vector<std::string> tokens;
        std::string current;
        for (char c : text) {
            if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')') {
                if (!current.empty()) {
                    tokens.push_back(current);
                    current.clear();
                }
                if (c == '(' || c == ')') tokens.emplace_back(1, c);
            } else {
                current += c;
            }
        }
        if (!current.empty()) tokens.push_back(current);
        return tokens;
    }

    std::map<std::string, bool> env_;
};

// ----------------------------------------------------------------------------
// Majority-vote oracle: plain multiset count over run results.
// ----------------------------------------------------------------------------

inline std::vector<std::pair<std::string, int>> brute_force_tally(
    const std::vector<std::set<std::string>>& runs, int threshold) {
    std::map<std::string, int> counts;
    for (const auto& run : runs)
        for (const auto& item : run) counts[item] += 1;
    std::vector<std::pair<std::string, int>> out;
    for (const auto& [name, votes] : counts)
        if (votes >= threshold) out.emplace_back(name, votes);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

// ----------------------------------------------------------------------------
// Section-filtering oracle: literal sequential scan with the level rule
// ("remove until the next heading of equal or higher level").
// ----------------------------------------------------------------------------

struct OracleParagraph {
    // Innermost heading that governs this paragraph: level and text, plus the
    // full stack for the library's representation.
    std::vector<std::pair<int, std::string>> heading_path;
    std::string body;
};

inline std::vector<size_t> oracle_filter_indices(
    const std::vector<OracleParagraph>& paragraphs,
    const std::vector<std::string>& stopwords) {
    auto matches = [&](const std::string& heading) {
        for (const auto& word : stopwords) {
            auto lower_heading = heading;
            auto lower_word = word;
            for (auto& c : lower_heading) c = static_cast<char>(std::tolower((unsigned char)c));
            for (auto& c : lower_word) c = static_cast<char>(std::tolower((unsigned char)c));
            if (lower_heading.find(lower_word) != std::string::npos) return true;
        }
        return false;
    };

    std::vector<size_t> kept;
    bool blocked = false;
    int blocked_level = 0;
    std::vector<std::pair<int, std::string>> prev;
    for (size_t i = 0; i < paragraphs.size(); ++i) {
        const auto& path = paragraphs[i].heading_path;
        // Walk headings this paragraph newly introduces, outermost first.
        size_t common = 0;
        while (common < path.size() && common < prev.size() && path[common] == prev[common])
            ++common;
        for (size_t h = common; h < path.size(); ++h) {
            int level = path[h].first;
            if (blocked && level <= blocked_level) blocked = false;
            if (!blocked && matches(path[h].second)) {
                blocked = true;
                blocked_level = level;
            }
        }
        if (!blocked) kept.push_back(i);
        prev = path;
    }
    return kept;
}

// ----------------------------------------------------------------------------
// Weighted-average oracle: straightforward arithmetic over (#, P, R) rows.
// ----------------------------------------------------------------------------

struct OracleMetricsRow {
    double count = 0, precision = 0, recall = 0;
};

inline void oracle_weighted(const std::vector<OracleMetricsRow>& rows, double& precision,
                            double& recall, double& f1) {
    double total = 0, sum_p = 0, sum_r = 0, sum_f = 0;
    for (const auto& row : rows) {
        total += row.count;
        sum_p += row.count * row.precision;
        sum_r += row.count * row.recall;
        double row_f = (row.precision + row.recall) > 0
                           ? 2 * row.precision * row.recall / (row.precision + row.recall)
                           : 0.0;
        sum_f += row.count * row_f;
    }
    precision = total > 0 ? sum_p / total : 0.0;
    recall = total > 0 ? sum_r / total : 0.0;
    f1 = total > 0 ? sum_f / total : 0.0;
}

}  // namespace ctiforge::testing
