#include <catch2/catch_amalgamated.hpp>

#include "ctiforge/rulegen/generator.hpp"
#include "ctiforge/sigma/compile.hpp"
#include "support/generators.hpp"
#include "support/providers.hpp"

using namespace ctiforge;

namespace {

const std::string kGeneratorPrompt = prompts::PromptSet{}.rule_generator;

Json minimal_draft() {
    return Json{
        {"title", "Suspicious access"},
        {"description", "Detects something."},
        {"references", {"https://example.com/report"}},
        {"tags", {"attack.collection", "attack.t1530"}},
        {"logsource", {{"product", "aws"}, {"service", "cloudtrail"}}},
        {"detection",
         {{"selection", {{"eventSource", "s3.amazonaws.com"}, {"eventName", "GetObject"}}},
          {"condition", "selection"}}},
        {"falsepositives", {"Admin activity"}},
        {"level", "high"},
    };
}

rulegen::ValidateOptions test_options() {
    rulegen::ValidateOptions options;
    options.run_date = "2024/08/07";
    options.catalog = &extract::TtpCatalog::bundled();
    return options;
}

rulegen::EnrichedParagraph terraform_paragraph() {
    rulegen::EnrichedParagraph ep;
    ep.paragraph.index = 3;
    ep.paragraph.body =
        "The attacker used the initial access to run an S3 sync and downloaded the "
        "terraform.tfstate file from the bucket.";
    extract::ApiCallCandidate get_object;
    get_object.event_name = "GetObject";
    get_object.event_source = "s3.amazonaws.com";
    get_object.votes = 3;
    get_object.paragraph_index = 3;
    extract::TtpAssignment ttp;
    ttp.event_name = "GetObject";
    ttp.event_source = "s3.amazonaws.com";
    ttp.tactic_slug = "collection";
    ttp.tactic_id = "TA0009";
    ttp.technique_id = "T1530";
    rulegen::EnrichedCall call{get_object, ttp};
    ep.api_calls.push_back(call);

    extract::ApiCallCandidate list_buckets = get_object;
    list_buckets.event_name = "ListBuckets";
    list_buckets.origin = extract::CallOrigin::Implicit;
    extract::TtpAssignment list_ttp = ttp;
    list_ttp.event_name = "ListBuckets";
    list_ttp.technique_id = "T1619";
    list_ttp.tactic_slug = "discovery";
    list_ttp.tactic_id = "TA0007";
    ep.api_calls.push_back(rulegen::EnrichedCall{list_buckets, list_ttp});
    return ep;
}

std::string terraform_batch_json() {
    Json terraform_rule = {
        {"title", "Access to Terraform File"},
        {"description",
         "Detects requests for terraform.tfstate file. This file contains sensitive "
         "infrastructure information and secrets, indicating potential compromise or "
         "unauthorized access."},
        {"references",
         {"https://sysdig.com/blog/cloud-breach-terraform-data-theft/",
          "https://docs.aws.amazon.com/AmazonS3/latest/API/API_GetObject.html"}},
        {"tags", {"attack.collection", "attack.t1530"}},
        {"logsource", {{"product", "aws"}, {"service", "cloudtrail"}}},
        {"detection",
         {{"selection_event",
           {{"eventSource", "s3.amazonaws.com"},
            {"eventName", "GetObject"},
            {"requestParameters.key", "terraform.tfstate"}}},
          {"condition", "selection_event"}}},
        {"falsepositives",
         {"Automated CI/CD pipeline operations",
          "DevOps engineers manually running Terraform commands"}},
        {"level", "high"},
    };
    Json listing_rule = {
        {"title", "S3 Bucket Enumeration"},
        {"description", "Detects bucket listing during the sync operation."},
        {"references", {"https://sysdig.com/blog/cloud-breach-terraform-data-theft/"}},
        {"tags", {"attack.discovery", "attack.t1619"}},
        {"logsource", {{"product", "aws"}, {"service", "cloudtrail"}}},
        {"detection",
         {{"selection_event",
           {{"eventSource", "s3.amazonaws.com"}, {"eventName", "ListBuckets"}}},
          {"condition", "selection_event"}}},
        {"falsepositives", {"Inventory tooling"}},
        {"level", "medium"},
    };
    return Json{{"rules", {terraform_rule, listing_rule}}}.dump();
}

}  // namespace

// ---------------------------------------------------------------------------
// validate_rule
// ---------------------------------------------------------------------------

TEST_CASE("validate_rule removes errorcode criteria but keeps the rule intact") {
    Json draft = minimal_draft();
    draft["detection"]["selection"]["errorcode"] = "AccessDenied";
    auto validated = rulegen::validate_rule(draft, test_options());
    REQUIRE(validated.ok());
    const auto& rule = validated.value();
    REQUIRE(rule.detection.selections.size() == 1);
    const auto& block = rule.detection.selections[0].second;
    CHECK(block.criteria.size() == 2);
    CHECK(block.find("errorcode") == nullptr);
    CHECK(block.find("eventName") != nullptr);
}

TEST_CASE("validate_rule strips errormessage and eventtime case-insensitively") {
    Json draft = minimal_draft();
    draft["detection"]["selection"]["ErrorMessage"] = "denied";
    draft["detection"]["selection"]["eventTime"] = "2024-01-01T00:00:00Z";
    auto validated = rulegen::validate_rule(draft, test_options());
    REQUIRE(validated.ok());
    CHECK(validated.value().detection.selections[0].second.criteria.size() == 2);
}

TEST_CASE("validate_rule removes ARN-valued criteria") {
    Json draft = minimal_draft();
    draft["detection"]["selection"]["userIdentity.arn"] =
        "arn:aws:iam::123456789012:user/alice";
    auto validated = rulegen::validate_rule(draft, test_options());
    REQUIRE(validated.ok());
    const auto& block = validated.value().detection.selections[0].second;
    CHECK(block.criteria.size() == 2);
    CHECK(block.find("userIdentity.arn") == nullptr);
}

TEST_CASE("validate_rule flattens nested map values into dotted keys") {
    Json draft = minimal_draft();
    draft["detection"]["selection"]["requestParameters"] =
        Json{{"key", "terraform.tfstate"}};
    auto validated = rulegen::validate_rule(draft, test_options());
    REQUIRE(validated.ok());
    const auto& block = validated.value().detection.selections[0].second;
    const auto* value = block.find("requestParameters.key");
    REQUIRE(value != nullptr);
    CHECK(*value == sigma::FieldValue::scalar("terraform.tfstate"));
}

TEST_CASE("validate_rule flattens nested lists and unwraps singleton lists") {
    Json draft = minimal_draft();
    draft["detection"]["selection"]["sourceIPAddress"] =
        Json::array({Json::array({"1.2.3.4", "5.6.7.8"}), "9.10.11.12"});
    draft["detection"]["selection"]["awsRegion"] = Json::array({"us-east-1"});
    auto validated = rulegen::validate_rule(draft, test_options());
    REQUIRE(validated.ok());
    const auto& block = validated.value().detection.selections[0].second;
    CHECK(*block.find("sourceIPAddress") ==
          sigma::FieldValue::list({"1.2.3.4", "5.6.7.8", "9.10.11.12"}));
    CHECK(*block.find("awsRegion") == sigma::FieldValue::scalar("us-east-1"));
}

TEST_CASE("validate_rule metadata repairs") {
    Json draft = minimal_draft();
    draft["author"] = "somebody else";
    draft["references"] = {"https://example.com/ok", "not a url", "ftp://nope/x"};
    draft["date"] = "yesterday";
    auto validated = rulegen::validate_rule(draft, test_options());
    REQUIRE(validated.ok());
    const auto& rule = validated.value();
    CHECK(rule.author == "CTIForge");
    CHECK(rule.references == std::vector<std::string>{"https://example.com/ok"});
    CHECK(rule.date == "2024/08/07");
    CHECK(rule.modified == "2024/08/07");
}

TEST_CASE("validate_rule drops hallucinated technique tags via the catalog") {
    Json draft = minimal_draft();
    draft["tags"] = {"attack.collection", "attack.t1530", "attack.t9999"};
    auto validated = rulegen::validate_rule(draft, test_options());
    REQUIRE(validated.ok());
    REQUIRE(validated.value().tags.size() == 2);
    CHECK(validated.value().tags[1].value == "t1530");
}

TEST_CASE("selections emptied by sanitation disappear and the condition simplifies") {
    Json draft = minimal_draft();
    draft["detection"]["selection_noise"] = Json{{"errorcode", "AccessDenied"}};
    draft["detection"]["condition"] = "selection and selection_noise";
    auto validated = rulegen::validate_rule(draft, test_options());
    REQUIRE(validated.ok());
    const auto& rule = validated.value();
    REQUIRE(rule.detection.selections.size() == 1);
    CHECK(sigma::print_condition(rule.detection.condition) == "selection");
}

TEST_CASE("a rule whose condition empties out is rejected") {
    Json draft = minimal_draft();
    draft["detection"] = Json{{"selection", Json{{"errorcode", "AccessDenied"}}},
                              {"condition", "selection"}};
    auto validated = rulegen::validate_rule(draft, test_options());
    REQUIRE_FALSE(validated.ok());
    CHECK(validated.error().code == ErrorCode::Rejected);
}

TEST_CASE("not over a removed selection drops the enclosing conjunct") {
    Json draft = minimal_draft();
    draft["detection"]["selection_gone"] = Json{{"eventtime", "x"}};
    draft["detection"]["condition"] = "selection and not selection_gone";
    auto validated = rulegen::validate_rule(draft, test_options());
    REQUIRE(validated.ok());
    CHECK(sigma::print_condition(validated.value().detection.condition) == "selection");
}

TEST_CASE("validate_rule is idempotent and its output compiles") {
    std::mt19937_64 rng(31337);
    auto options = test_options();
    int accepted = 0;
    for (int i = 0; i < 400; ++i) {
        auto draft = testing::random_draft(rng);
        auto first = rulegen::validate_rule(draft, options);
        if (!first.ok()) continue;  // rejected drafts stay rejected; nothing to re-validate
        ++accepted;
        auto second = rulegen::validate_rule(first.value(), options);
        REQUIRE(second.ok());
        CHECK(first.value() == second.value());
        auto compiled = sigma::compile_rule(first.value());
        if (!compiled.ok()) FAIL("validated rule failed to compile: " << compiled.error().format());
    }
    CHECK(accepted > 100);
}

// ---------------------------------------------------------------------------
// generate_rules
// ---------------------------------------------------------------------------

TEST_CASE("generate_rules maps the terraform paragraph to the initial rule") {
    auto provider = std::make_shared<testing::LambdaProvider>(
        [](const llm::LlmRequest&) { return testing::reply(terraform_batch_json()); });
    auto gateway = testing::make_gateway(provider);

    rulegen::GenerateOptions options;
    options.source_url = "https://sysdig.com/blog/cloud-breach-terraform-data-theft/";
    options.run_date = "2024/08/07";
    options.catalog = &extract::TtpCatalog::bundled();
    auto batch = rulegen::generate_rules(terraform_paragraph(), *gateway, kGeneratorPrompt,
                                         options);
    REQUIRE(batch.ok());
    REQUIRE(batch.value().rules.size() == 2);

    const auto& rule = batch.value().rules[0];
    CHECK(rule.title == "Access to Terraform File");
    CHECK(rule.level == sigma::RuleLevel::High);
    CHECK(rule.logsource == sigma::LogSource{"aws", "cloudtrail"});
    CHECK(rule.author == "CTIForge");
    REQUIRE(rule.detection.selections.size() == 1);
    CHECK(rule.detection.selections[0].first == "selection_event");
    const auto& block = rule.detection.selections[0].second;
    CHECK(*block.find("eventSource") == sigma::FieldValue::scalar("s3.amazonaws.com"));
    CHECK(*block.find("eventName") == sigma::FieldValue::scalar("GetObject"));
    CHECK(*block.find("requestParameters.key") ==
          sigma::FieldValue::scalar("terraform.tfstate"));
    CHECK(sigma::print_condition(rule.detection.condition) == "selection_event");
    REQUIRE(rule.tags.size() == 2);
    CHECK(rule.tags[0].value == "collection");
    CHECK(rule.tags[1].value == "t1530");
    // References keep the source URL.
    bool has_source = false;
    for (const auto& ref : rule.references)
        if (ref == options.source_url) has_source = true;
    CHECK(has_source);
}

TEST_CASE("single-call paragraph yields a batch of exactly one rule") {
    auto provider = std::make_shared<testing::LambdaProvider>([](const llm::LlmRequest&) {
        Json rule = minimal_draft();
        return testing::reply(Json{{"rules", {rule}}}.dump());
    });
    auto gateway = testing::make_gateway(provider);

    auto ep = terraform_paragraph();
    ep.api_calls.resize(1);  // GetObject only
    rulegen::GenerateOptions options;
    options.source_url = "https://example.com/report";
    options.run_date = "2024/08/07";
    auto batch = rulegen::generate_rules(ep, *gateway, kGeneratorPrompt, options);
    REQUIRE(batch.ok());
    CHECK(batch.value().rules.size() == 1);
    CHECK(batch.value().paragraph_index == 3);
}

TEST_CASE("coverage violation triggers one corrective re-prompt then hard error") {
    SECTION("second attempt fixes the omission") {
        std::atomic<int> calls{0};
        auto provider = std::make_shared<testing::LambdaProvider>(
            [&calls](const llm::LlmRequest&) -> Result<llm::ProviderReply> {
                if (calls.fetch_add(1) == 0) {
                    Json rule = minimal_draft();  // GetObject only; ListBuckets missing
                    return testing::reply(Json{{"rules", {rule}}}.dump());
                }
                return testing::reply(terraform_batch_json());
            });
        auto gateway = testing::make_gateway(provider);
        rulegen::GenerateOptions options;
        options.run_date = "2024/08/07";
        auto batch =
            rulegen::generate_rules(terraform_paragraph(), *gateway, kGeneratorPrompt, options);
        REQUIRE(batch.ok());
        CHECK(batch.value().rules.size() == 2);
        CHECK(calls.load() == 2);
    }
    SECTION("persistent violation becomes PostconditionViolation") {
        auto provider = std::make_shared<testing::LambdaProvider>([](const llm::LlmRequest&) {
            Json rule = minimal_draft();
            return testing::reply(Json{{"rules", {rule}}}.dump());
        });
        auto gateway = testing::make_gateway(provider);
        rulegen::GenerateOptions options;
        options.run_date = "2024/08/07";
        auto batch =
            rulegen::generate_rules(terraform_paragraph(), *gateway, kGeneratorPrompt, options);
        REQUIRE_FALSE(batch.ok());
        CHECK(batch.error().code == ErrorCode::PostconditionViolation);
        CHECK(batch.error().message.find("ListBuckets") != std::string::npos);
    }
    SECTION("duplicated call is also a violation") {
        auto provider = std::make_shared<testing::LambdaProvider>([](const llm::LlmRequest&) {
            Json rule_a = minimal_draft();
            Json rule_b = minimal_draft();
            rule_b["title"] = "Duplicate";
            return testing::reply(Json{{"rules", {rule_a, rule_b}}}.dump());
        });
        auto gateway = testing::make_gateway(provider);
        auto ep = terraform_paragraph();
        ep.api_calls.resize(1);
        rulegen::GenerateOptions options;
        options.run_date = "2024/08/07";
        auto batch = rulegen::generate_rules(ep, *gateway, kGeneratorPrompt, options);
        REQUIRE_FALSE(batch.ok());
        CHECK(batch.error().message.find("ApiCallDuplicated") != std::string::npos);
    }
}

TEST_CASE("rejected drafts are excluded but recorded") {
    auto provider = std::make_shared<testing::LambdaProvider>([](const llm::LlmRequest&) {
        Json good = minimal_draft();
        Json bad = minimal_draft();
        bad["level"] = "sky-high";
        return testing::reply(Json{{"rules", {good, bad}}}.dump());
    });
    auto gateway = testing::make_gateway(provider);
    auto ep = terraform_paragraph();
    ep.api_calls.resize(1);
    rulegen::GenerateOptions options;
    options.run_date = "2024/08/07";
    auto batch = rulegen::generate_rules(ep, *gateway, kGeneratorPrompt, options);
    REQUIRE(batch.ok());
    CHECK(batch.value().rules.size() == 1);
    REQUIRE(batch.value().rejected.size() == 1);
    CHECK(batch.value().rejected[0].find("sky-high") != std::string::npos);
}

TEST_CASE("extract_apis reads pairs out of detection logic") {
    auto validated = rulegen::validate_rule(minimal_draft(), test_options());
    REQUIRE(validated.ok());
    auto apis = refine::extract_apis(validated.value());
    REQUIRE(apis.size() == 1);
    CHECK(apis.begin()->event_name == "GetObject");
    CHECK(apis.begin()->event_source == "s3.amazonaws.com");

    SECTION("OR-list of event names yields both pairs") {
        Json draft = minimal_draft();
        draft["detection"]["selection"]["eventName"] =
            Json::array({"GetObject", "PutObject"});
        auto rule = rulegen::validate_rule(draft, test_options());
        REQUIRE(rule.ok());
        CHECK(refine::extract_apis(rule.value()).size() == 2);
    }
    SECTION("no eventName criterion yields the empty set") {
        Json draft = minimal_draft();
        draft["detection"]["selection"] = Json{{"sourceIPAddress", "1.2.3.4"}};
        auto rule = rulegen::validate_rule(draft, test_options());
        REQUIRE(rule.ok());
        CHECK(refine::extract_apis(rule.value()).empty());
    }
}
