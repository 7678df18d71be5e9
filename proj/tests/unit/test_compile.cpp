#include <catch2/catch_amalgamated.hpp>

#include "ctiforge/sigma/compile.hpp"
#include "ctiforge/sigma/yaml.hpp"
#include "support/generators.hpp"

using namespace ctiforge;

namespace {

sigma::SigmaRule minimal_rule() {
    sigma::SigmaRule rule;
    rule.title = "Minimal";
    rule.references = {"https://example.com"};
    rule.logsource = {"aws", "cloudtrail"};
    rule.level = sigma::RuleLevel::Medium;
    return rule;
}

}  // namespace

TEST_CASE("compile_rule golden: terraform-file rule") {
    // Hand-compiled per the dialect definition; fixture frozen before the
    // compiler was written.
    const std::string expected =
        "(eventSource=\"s3.amazonaws.com\" AND eventName=\"GetObject\" AND "
        "requestParameters.key=\"terraform.tfstate\") AND "
        "(sourceIPAddress=\"80.239.140.66\" OR sourceIPAddress=\"45.9.148.221\" OR "
        "sourceIPAddress=\"45.9.148.121\" OR sourceIPAddress=\"45.9.249.58\")";

    auto rule = minimal_rule();
    sigma::SelectionBlock event_block;
    event_block.criteria = {
        {sigma::FieldKey{"eventSource", ""}, sigma::FieldValue::scalar("s3.amazonaws.com")},
        {sigma::FieldKey{"eventName", ""}, sigma::FieldValue::scalar("GetObject")},
        {sigma::FieldKey{"requestParameters.key", ""},
         sigma::FieldValue::scalar("terraform.tfstate")},
    };
    sigma::SelectionBlock ip_block;
    ip_block.criteria = {{sigma::FieldKey{"sourceIPAddress", ""},
                          sigma::FieldValue::list({"80.239.140.66", "45.9.148.221",
                                                   "45.9.148.121", "45.9.249.58"})}};
    rule.detection.selections = {{"selection_event", event_block},
                                 {"selection_ip_address", ip_block}};
    rule.detection.condition = sigma::ConditionExpr::conjunction(
        sigma::ConditionExpr::identifier("selection_event"),
        sigma::ConditionExpr::identifier("selection_ip_address"));

    auto compiled = sigma::compile_rule(rule);
    REQUIRE(compiled.ok());
    CHECK(compiled.value() == expected);
}

TEST_CASE("compile_rule single scalar criterion is a bare atom") {
    auto rule = minimal_rule();
    sigma::SelectionBlock block;
    block.criteria = {{sigma::FieldKey{"eventName", ""}, sigma::FieldValue::scalar("GetObject")}};
    rule.detection.selections = {{"selection", block}};
    rule.detection.condition = sigma::ConditionExpr::identifier("selection");

    auto compiled = sigma::compile_rule(rule);
    REQUIRE(compiled.ok());
    CHECK(compiled.value() == "eventName=\"GetObject\"");
}

TEST_CASE("compile_rule contains modifier") {
    auto rule = minimal_rule();
    sigma::SelectionBlock block;
    block.criteria = {
        {sigma::FieldKey{"userAgent", "contains"}, sigma::FieldValue::scalar("Mozilla/5.0")}};
    rule.detection.selections = {{"selection", block}};
    rule.detection.condition = sigma::ConditionExpr::identifier("selection");

    auto compiled = sigma::compile_rule(rule);
    REQUIRE(compiled.ok());
    CHECK(compiled.value() == "userAgent contains \"Mozilla/5.0\"");
}

TEST_CASE("compile_rule quoting escapes embedded quotes and backslashes") {
    auto rule = minimal_rule();
    sigma::SelectionBlock block;
    block.criteria = {
        {sigma::FieldKey{"requestParameters.key", ""},
         sigma::FieldValue::scalar("say \"hi\" \\ bye")}};
    rule.detection.selections = {{"selection", block}};
    rule.detection.condition = sigma::ConditionExpr::identifier("selection");

    auto compiled = sigma::compile_rule(rule);
    REQUIRE(compiled.ok());
    CHECK(compiled.value() == "requestParameters.key=\"say \\\"hi\\\" \\\\ bye\"");
}

TEST_CASE("compile_rule error paths") {
    SECTION("unknown modifier") {
        auto rule = minimal_rule();
        sigma::SelectionBlock block;
        block.criteria = {
            {sigma::FieldKey{"eventName", "re"}, sigma::FieldValue::scalar("Get.*")}};
        rule.detection.selections = {{"selection", block}};
        rule.detection.condition = sigma::ConditionExpr::identifier("selection");
        auto compiled = sigma::compile_rule(rule);
        REQUIRE_FALSE(compiled.ok());
        CHECK(compiled.error().code == ErrorCode::UnknownModifier);
    }
    SECTION("empty selection") {
        auto rule = minimal_rule();
        rule.detection.selections = {{"selection", sigma::SelectionBlock{}}};
        rule.detection.condition = sigma::ConditionExpr::identifier("selection");
        auto compiled = sigma::compile_rule(rule);
        REQUIRE_FALSE(compiled.ok());
        CHECK(compiled.error().code == ErrorCode::EmptySelection);
    }
}

TEST_CASE("compile_rule with not and nested condition") {
    auto rule = minimal_rule();
    sigma::SelectionBlock a;
    a.criteria = {{sigma::FieldKey{"eventName", ""}, sigma::FieldValue::scalar("GetObject")}};
    sigma::SelectionBlock b;
    b.criteria = {{sigma::FieldKey{"awsRegion", ""}, sigma::FieldValue::scalar("us-east-1")}};
    rule.detection.selections = {{"selection", a}, {"selection_2", b}};
    rule.detection.condition = sigma::ConditionExpr::conjunction(
        sigma::ConditionExpr::identifier("selection"),
        sigma::ConditionExpr::negate(sigma::ConditionExpr::identifier("selection_2")));

    auto compiled = sigma::compile_rule(rule);
    REQUIRE(compiled.ok());
    CHECK(compiled.value() == "eventName=\"GetObject\" AND NOT awsRegion=\"us-east-1\"");
}

TEST_CASE("compile_rule succeeds on every rule parse_rule accepts") {
    std::mt19937_64 rng(99123);
    for (int i = 0; i < 300; ++i) {
        auto rule = testing::random_rule(rng);
        auto emitted = sigma::emit_rule(rule);
        REQUIRE(emitted.ok());
        auto parsed = sigma::parse_rule(emitted.value());
        REQUIRE(parsed.ok());
        auto compiled = sigma::compile_rule(parsed.value());
        if (!compiled.ok()) {
            INFO(emitted.value());
            FAIL("compile failed: " << compiled.error().format());
        }
    }
}
