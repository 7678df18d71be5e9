#pragma once

#include <string>

#include "ctiforge/sigma/rule.hpp"

namespace ctiforge::sigma {

// ============================================================================
// Internal query dialect
//
// Each selection becomes a conjunction of field=value atoms; list values
// become a parenthesized OR; the condition AST composes selections with
// uppercase AND / OR / NOT. The exact form is documented bit-for-bit in
// docs/query_dialect.md. Compiling is the executability check: it is total
// on every rule that passes parse-level validation.
// ============================================================================

namespace detail {

inline std::string quote_value(std::string_view value) {
    std::string out = "\"";
    for (char c : value) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += '"';
    return out;
}

inline Result<std::string> compile_atom(const FieldKey& key, std::string_view value) {
    if (key.modifier.empty()) return key.path + "=" + quote_value(value);
    if (key.modifier == "contains") return key.path + " contains " + quote_value(value);
    return Error{ErrorCode::UnknownModifier, key.modifier};
}

inline Result<std::string> compile_criterion(const FieldKey& key, const FieldValue& value) {
    if (value.values.empty())
        return Error{ErrorCode::EmptySelection, "criterion '" + key.str() + "' has no values"};
    if (value.values.size() == 1 && !value.is_list)
        return compile_atom(key, value.values[0]);
    std::string out = "(";
    for (size_t i = 0; i < value.values.size(); ++i) {
        auto atom = compile_atom(key, value.values[i]);
        if (!atom) return atom;
        if (i > 0) out += " OR ";
        out += atom.value();
    }
    out += ")";
    return out;
}

inline Result<std::string> compile_selection(const std::string& name,
                                             const SelectionBlock& block) {
    if (block.empty())
        return Error{ErrorCode::EmptySelection, "selection '" + name + "' is empty"};
    std::vector<std::string> parts;
    for (const auto& [key, value] : block.criteria) {
        auto part = compile_criterion(key, value);
        if (!part) return part;
        parts.push_back(part.take());
    }
    if (parts.size() == 1) return parts[0];
    std::string out = "(";
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += " AND ";
        out += parts[i];
    }
    out += ")";
    return out;
}

inline Result<std::string> compile_condition(const ConditionPtr& expr, const SigmaRule& rule,
                                             int parent_prec) {
    int prec = precedence(expr->kind());
    std::string out;
    switch (expr->kind()) {
        case ConditionExpr::Kind::Identifier: {
            const SelectionBlock* block = rule.detection.find(expr->name());
            if (block == nullptr)
                return Error{ErrorCode::UnknownConditionIdentifier, expr->name()};
            return compile_selection(expr->name(), *block);
        }
        case ConditionExpr::Kind::Not: {
            auto operand = compile_condition(expr->lhs(), rule, prec);
            if (!operand) return operand;
            out = "NOT " + operand.value();
            break;
        }
        case ConditionExpr::Kind::And:
        case ConditionExpr::Kind::Or: {
            auto lhs = compile_condition(expr->lhs(), rule, prec);
            if (!lhs) return lhs;
            auto rhs = compile_condition(expr->rhs(), rule, prec + 1);
            if (!rhs) return rhs;
            out = lhs.value() +
                  (expr->kind() == ConditionExpr::Kind::And ? " AND " : " OR ") + rhs.value();
            break;
        }
    }
    if (prec < parent_prec) out = "(" + out + ")";
    return out;
}

}  // namespace detail

/// Compiles a rule into the internal query dialect.
inline Result<std::string> compile_rule(const SigmaRule& rule) {
    auto invariants = check_rule(rule);
    if (!invariants) return invariants.error();
    return detail::compile_condition(rule.detection.condition, rule, 0);
}

}  // namespace ctiforge::sigma
