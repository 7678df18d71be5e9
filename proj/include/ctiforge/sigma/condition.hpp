#pragma once

#include <cctype>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ctiforge/common.hpp"

namespace ctiforge::sigma {

// ============================================================================
// Condition expression AST
//
// Grammar (precedence low to high: or < and < not):
//   or_expr  := and_expr ( "or" and_expr )*
//   and_expr := not_expr ( "and" not_expr )*
//   not_expr := "not" not_expr | primary
//   primary  := identifier | "(" or_expr ")"
// ============================================================================

class ConditionExpr;
using ConditionPtr = std::shared_ptr<const ConditionExpr>;

/// Immutable boolean expression over selection identifiers.
class ConditionExpr {
public:
    enum class Kind { Identifier, Not, And, Or };

    static ConditionPtr identifier(std::string name) {
        return std::make_shared<ConditionExpr>(Kind::Identifier, std::move(name), nullptr,
                                               nullptr);
    }
    static ConditionPtr negate(ConditionPtr operand) {
        return std::make_shared<ConditionExpr>(Kind::Not, "", std::move(operand), nullptr);
    }
    static ConditionPtr conjunction(ConditionPtr lhs, ConditionPtr rhs) {
        return std::make_shared<ConditionExpr>(Kind::And, "", std::move(lhs), std::move(rhs));
    }
    static ConditionPtr disjunction(ConditionPtr lhs, ConditionPtr rhs) {
        return std::make_shared<ConditionExpr>(Kind::Or, "", std::move(lhs), std::move(rhs));
    }

    ConditionExpr(Kind kind, std::string name, ConditionPtr lhs, ConditionPtr rhs)
        : kind_(kind), name_(std::move(name)), lhs_(std::move(lhs)), rhs_(std::move(rhs)) {}

    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    const ConditionPtr& lhs() const { return lhs_; }
    const ConditionPtr& rhs() const { return rhs_; }

private:
    Kind kind_;
    std::string name_;   // Identifier only
    ConditionPtr lhs_;   // Not: operand; And/Or: left
    ConditionPtr rhs_;   // And/Or: right
};

inline bool equal(const ConditionPtr& a, const ConditionPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind() != b->kind()) return false;
    switch (a->kind()) {
        case ConditionExpr::Kind::Identifier:
            return a->name() == b->name();
        case ConditionExpr::Kind::Not:
            return equal(a->lhs(), b->lhs());
        case ConditionExpr::Kind::And:
        case ConditionExpr::Kind::Or:
            return equal(a->lhs(), b->lhs()) && equal(a->rhs(), b->rhs());
    }
    return false;
}

/// All identifiers referenced by the expression, in first-appearance order.
inline void collect_identifiers(const ConditionPtr& expr, std::vector<std::string>& out) {
    if (!expr) return;
    switch (expr->kind()) {
        case ConditionExpr::Kind::Identifier: {
            for (const auto& existing : out) {
                if (existing == expr->name()) return;
            }
            out.push_back(expr->name());
            return;
        }
        case ConditionExpr::Kind::Not:
            collect_identifiers(expr->lhs(), out);
            return;
        case ConditionExpr::Kind::And:
        case ConditionExpr::Kind::Or:
            collect_identifiers(expr->lhs(), out);
            collect_identifiers(expr->rhs(), out);
            return;
    }
}

inline std::vector<std::string> referenced_identifiers(const ConditionPtr& expr) {
    std::vector<std::string> out;
    collect_identifiers(expr, out);
    return out;
}

/// Removes the named identifiers from the expression, simplifying the
/// surviving logic: And(x, removed) -> x, Or(x, removed) -> x, Not(removed)
/// drops the enclosing conjunct. Returns nullptr when nothing survives.
inline ConditionPtr prune_identifiers(const ConditionPtr& expr,
                                      const std::vector<std::string>& removed) {
    switch (expr->kind()) {
        case ConditionExpr::Kind::Identifier: {
            for (const auto& name : removed)
                if (name == expr->name()) return nullptr;
            return expr;
        }
        case ConditionExpr::Kind::Not: {
            auto child = prune_identifiers(expr->lhs(), removed);
            if (!child) return nullptr;
            if (child == expr->lhs()) return expr;
            return ConditionExpr::negate(child);
        }
        case ConditionExpr::Kind::And:
        case ConditionExpr::Kind::Or: {
            auto lhs = prune_identifiers(expr->lhs(), removed);
            auto rhs = prune_identifiers(expr->rhs(), removed);
            if (lhs && rhs) {
                if (lhs == expr->lhs() && rhs == expr->rhs()) return expr;
                return expr->kind() == ConditionExpr::Kind::And
                           ? ConditionExpr::conjunction(lhs, rhs)
                           : ConditionExpr::disjunction(lhs, rhs);
            }
            if (lhs) return lhs;
            if (rhs) return rhs;
            return nullptr;
        }
    }
    return nullptr;
}

// ============================================================================
// Printing
// ============================================================================

namespace detail {

inline int precedence(ConditionExpr::Kind kind) {
    switch (kind) {
        case ConditionExpr::Kind::Or: return 1;
        case ConditionExpr::Kind::And: return 2;
        case ConditionExpr::Kind::Not: return 3;
        case ConditionExpr::Kind::Identifier: return 4;
    }
    return 4;
}

inline void print_expr(const ConditionPtr& expr, int parent_prec, std::string& out) {
    int prec = precedence(expr->kind());
    bool parens = prec < parent_prec;
    if (parens) out += '(';
    switch (expr->kind()) {
        case ConditionExpr::Kind::Identifier:
            out += expr->name();
            break;
        case ConditionExpr::Kind::Not:
            out += "not ";
            print_expr(expr->lhs(), prec, out);
            break;
        case ConditionExpr::Kind::And:
            print_expr(expr->lhs(), prec, out);
            out += " and ";
            // Right child needs parens when it is also an `and`: keep the
            // printed tree left-associative so reparsing reproduces the AST.
            print_expr(expr->rhs(), prec + 1, out);
            break;
        case ConditionExpr::Kind::Or:
            print_expr(expr->lhs(), prec, out);
            out += " or ";
            print_expr(expr->rhs(), prec + 1, out);
            break;
    }
    if (parens) out += ')';
}

}  // namespace detail

/// Textual form; parse_condition(print_condition(e)) reproduces e exactly.
inline std::string print_condition(const ConditionPtr& expr) {
    std::string out;
    if (expr) detail::print_expr(expr, 0, out);
    return out;
}

// ============================================================================
// Parsing
// ============================================================================

namespace detail {

struct ConditionLexer {
    std::string_view text;
    size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    // Tokens: "(", ")", "and", "or", "not", identifier. Empty string = end.
    std::string peek() {
        size_t saved = pos;
        std::string tok = next();
        pos = saved;
        return tok;
    }

    std::string next() {
        skip_ws();
        if (pos >= text.size()) return "";
        char c = text[pos];
        if (c == '(' || c == ')') {
            ++pos;
            return std::string(1, c);
        }
        size_t start = pos;
        while (pos < text.size()) {
            char d = text[pos];
            if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')') break;
            ++pos;
        }
        return std::string(text.substr(start, pos - start));
    }
};

class ConditionParser {
public:
    explicit ConditionParser(std::string_view text) : lexer_{text} {}

    Result<ConditionPtr> parse() {
        auto expr = parse_or();
        if (!expr) return expr;
        std::string rest = lexer_.next();
        if (rest == ")") return Error{ErrorCode::UnbalancedParens, "unmatched ')'"};
        if (!rest.empty())
            return Error{ErrorCode::UnexpectedToken, "trailing token '" + rest + "'"};
        return expr;
    }

private:
    Result<ConditionPtr> parse_or() {
        auto lhs = parse_and();
        if (!lhs) return lhs;
        ConditionPtr expr = lhs.value();
        while (lexer_.peek() == "or") {
            lexer_.next();
            auto rhs = parse_and();
            if (!rhs) return rhs;
            expr = ConditionExpr::disjunction(expr, rhs.value());
        }
        return expr;
    }

    Result<ConditionPtr> parse_and() {
        auto lhs = parse_not();
        if (!lhs) return lhs;
        ConditionPtr expr = lhs.value();
        while (lexer_.peek() == "and") {
            lexer_.next();
            auto rhs = parse_not();
            if (!rhs) return rhs;
            expr = ConditionExpr::conjunction(expr, rhs.value());
        }
        return expr;
    }

    Result<ConditionPtr> parse_not() {
        if (lexer_.peek() == "not") {
            lexer_.next();
            auto operand = parse_not();
            if (!operand) return operand;
            return ConditionExpr::negate(operand.value());
        }
        return parse_primary();
    }

    Result<ConditionPtr> parse_primary() {
        std::string tok = lexer_.next();
        if (tok.empty())
            return Error{ErrorCode::UnexpectedToken, "expected identifier, got end of input"};
        if (tok == "(") {
            auto inner = parse_or();
            if (!inner) return inner;
            std::string close = lexer_.next();
            if (close != ")") return Error{ErrorCode::UnbalancedParens, "missing ')'"};
            return inner;
        }
        if (tok == ")") return Error{ErrorCode::UnbalancedParens, "unexpected ')'"};
        if (tok == "and" || tok == "or" || tok == "not")
            return Error{ErrorCode::UnexpectedToken, "unexpected keyword '" + tok + "'"};
        return ConditionExpr::identifier(tok);
    }

    ConditionLexer lexer_;
};

}  // namespace detail

/// Parses a condition string into an AST honoring not > and > or precedence.
inline Result<ConditionPtr> parse_condition(std::string_view text) {
    if (strings::trim(text).empty())
        return Error{ErrorCode::UnexpectedToken, "empty condition"};
    return detail::ConditionParser(text).parse();
}

}  // namespace ctiforge::sigma
