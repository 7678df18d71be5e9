#include <fstream>

#include <catch2/catch_amalgamated.hpp>

#include "ctiforge/eval/candidates.hpp"
#include "ctiforge/eval/entities.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace ctiforge;

namespace {

Json load_fixture(const std::string& name) {
    std::ifstream in(std::string(CTIFORGE_FIXTURES_DIR) + "/" + name);
    REQUIRE(in.good());
    return Json::parse(in);
}

eval::GroundTruth truth_of(const std::vector<std::pair<std::string, std::string>>& entities) {
    Json doc;
    doc["oscti_id"] = 1;
    doc["entities"] = Json::array();
    for (const auto& [type, value] : entities)
        doc["entities"].push_back({{"type", type}, {"value", value}});
    auto parsed = eval::ground_truth_from_json(doc);
    REQUIRE(parsed.ok());
    return parsed.value();
}

std::set<eval::Entity> predicted_of(
    const std::vector<std::pair<eval::EntityType, std::string>>& entities) {
    std::set<eval::Entity> out;
    for (const auto& [type, value] : entities)
        out.insert(eval::Entity{type, eval::normalize_entity(type, value)});
    return out;
}

// The final terraform rule (Listing-1 shape) for prediction derivation.
refine::RuleSet final_terraform_set() {
    sigma::SigmaRule rule;
    rule.title = "Access to Terraform File from Malicious IPs";
    rule.description = "d";
    rule.references = {"https://example.com"};
    rule.author = "CTIForge";
    rule.tags = {{sigma::TtpTag::Kind::Tactic, "collection"},
                 {sigma::TtpTag::Kind::Technique, "t1530"}};
    rule.logsource = {"aws", "cloudtrail"};
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
    rule.level = sigma::RuleLevel::High;

    refine::RuleSet set;
    set.rules = {rule};
    set.provenance = {0};
    return set;
}

}  // namespace

TEST_CASE("match_entities on the textbook cases") {
    SECTION("exact hit") {
        auto counts = eval::match_entities(predicted_of({{eval::EntityType::ApiCall,
                                                          "GetObject"}}),
                                           truth_of({{"ApiCall", "GetObject"}}));
        CHECK(counts["ApiCall"] == eval::MatchCounts{1, 0, 0});
    }
    SECTION("one hit one miss gives P=0.5 R=1.0") {
        auto counts = eval::match_entities(
            predicted_of({{eval::EntityType::ApiCall, "GetObject"},
                          {eval::EntityType::ApiCall, "PutObject"}}),
            truth_of({{"ApiCall", "GetObject"}}));
        CHECK(counts["ApiCall"] == eval::MatchCounts{1, 1, 0});
        CHECK(counts["ApiCall"].precision() == 0.5);
        CHECK(counts["ApiCall"].recall() == 1.0);
    }
    SECTION("empty prediction against non-empty truth") {
        auto counts = eval::match_entities({}, truth_of({{"ApiCall", "GetObject"}}));
        CHECK(counts["ApiCall"] == eval::MatchCounts{0, 0, 1});
        CHECK(counts["ApiCall"].precision() == 0.0);  // degenerate convention
        CHECK(counts["ApiCall"].recall() == 0.0);
    }
}

TEST_CASE("normalization rules per entity type") {
    // eventNames are case-sensitive.
    auto api = eval::match_entities(predicted_of({{eval::EntityType::ApiCall, "getobject"}}),
                                    truth_of({{"ApiCall", "GetObject"}}));
    CHECK(api["ApiCall"] == eval::MatchCounts{0, 1, 1});

    // TTP ids canonicalize from tag form.
    CHECK(eval::normalize_entity(eval::EntityType::Technique, "attack.t1530") == "T1530");
    CHECK(eval::normalize_entity(eval::EntityType::SubTechnique, "t1098.001") == "T1098.001");
    CHECK(eval::normalize_entity(eval::EntityType::Tactic, "attack.Collection") ==
          "collection");

    // IPs canonicalize; user agents stay verbatim.
    CHECK(eval::normalize_entity(eval::EntityType::Ioc,
                                 "2001:0db8:0000:0000:0000:0000:0000:0001") == "2001:db8::1");
    CHECK(eval::normalize_entity(eval::EntityType::Ioc, " Mozilla/5.0 ") == "Mozilla/5.0");

    // Other is case-insensitive trimmed.
    auto other = eval::match_entities(
        predicted_of({{eval::EntityType::Other, " Terraform.TFState "}}),
        truth_of({{"Other", "terraform.tfstate"}}));
    CHECK(other["Other"] == eval::MatchCounts{1, 0, 0});

    // Unknown entity type in a truth file errors.
    Json bad = {{"oscti_id", 1},
                {"entities", Json::array({Json{{"type", "Gadget"}, {"value", "x"}}})}};
    auto parsed = eval::ground_truth_from_json(bad);
    REQUIRE_FALSE(parsed.ok());
    CHECK(parsed.error().code == ErrorCode::UnknownEntityType);
}

TEST_CASE("duplicates collapse under set semantics") {
    auto counts = eval::match_entities(
        predicted_of({{eval::EntityType::ApiCall, "GetObject"},
                      {eval::EntityType::ApiCall, "GetObject"}}),
        truth_of({{"ApiCall", "GetObject"}, {"ApiCall", "GetObject"}}));
    CHECK(counts["ApiCall"] == eval::MatchCounts{1, 0, 0});
}

TEST_CASE("swapping predicted and truth swaps precision and recall") {
    std::mt19937_64 rng(777001);
    std::vector<std::string> pool = {"A", "B", "C", "D", "E", "F"};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::pair<std::string, std::string>> left, right;
        std::vector<std::pair<eval::EntityType, std::string>> left_pred, right_pred;
        for (const auto& name : pool) {
            if (rng() % 2) {
                left.push_back({"ApiCall", name});
                left_pred.push_back({eval::EntityType::ApiCall, name});
            }
            if (rng() % 2) {
                right.push_back({"ApiCall", name});
                right_pred.push_back({eval::EntityType::ApiCall, name});
            }
        }
        auto forward = eval::match_entities(predicted_of(left_pred), truth_of(right));
        auto backward = eval::match_entities(predicted_of(right_pred), truth_of(left));
        CHECK(forward["ApiCall"].precision() == backward["ApiCall"].recall());
        CHECK(forward["ApiCall"].recall() == backward["ApiCall"].precision());
    }
}

TEST_CASE("compute_report weighted averages match the independent oracle") {
    std::mt19937_64 rng(31001);
    for (int trial = 0; trial < 200; ++trial) {
        std::map<int, std::map<std::string, eval::MetricsRow>> per_oscti;
        std::vector<testing::OracleMetricsRow> oracle_rows;
        int oscti_count = 1 + static_cast<int>(rng() % 12);
        for (int i = 1; i <= oscti_count; ++i) {
            double count = static_cast<double>(rng() % 50);
            double precision = static_cast<double>(rng() % 101) / 100.0;
            double recall = static_cast<double>(rng() % 101) / 100.0;
            per_oscti[i]["X"] = eval::MetricsRow::from_values(count, precision, recall);
            oracle_rows.push_back({count, precision, recall});
        }
        auto report = eval::compute_report(per_oscti);
        double op, orc, of;
        testing::oracle_weighted(oracle_rows, op, orc, of);
        CHECK(report.weighted_avg["X"].precision == Catch::Approx(op).margin(1e-12));
        CHECK(report.weighted_avg["X"].recall == Catch::Approx(orc).margin(1e-12));
        CHECK(report.weighted_avg["X"].f1 == Catch::Approx(of).margin(1e-12));
    }
}

TEST_CASE("single-OSCTI weighted average equals the row itself") {
    std::map<int, std::map<std::string, eval::MetricsRow>> per_oscti;
    per_oscti[4]["ApiCall"] = eval::MetricsRow::from_values(9, 0.75, 0.5);
    auto report = eval::compute_report(per_oscti);
    CHECK(report.weighted_avg["ApiCall"].precision == 0.75);
    CHECK(report.weighted_avg["ApiCall"].recall == 0.5);
}

TEST_CASE("zero-count rows contribute zero weight") {
    std::map<int, std::map<std::string, eval::MetricsRow>> per_oscti;
    per_oscti[1]["X"] = eval::MetricsRow::from_values(0, 0.1, 0.1);
    per_oscti[2]["X"] = eval::MetricsRow::from_values(10, 0.9, 0.8);
    auto report = eval::compute_report(per_oscti);
    CHECK(report.weighted_avg["X"].precision == Catch::Approx(0.9));
    CHECK(report.weighted_avg["X"].recall == Catch::Approx(0.8));
}

TEST_CASE("paper Table 3 and Table 4 weighted rows reproduce within tolerance") {
    for (const char* fixture :
         {"eval/table3_entities.json", "eval/table4_relationships.json"}) {
        Json doc = load_fixture(fixture);
        std::map<int, std::map<std::string, eval::MetricsRow>> per_oscti;
        for (const auto& row : doc["rows"]) {
            per_oscti[row["oscti"].get<int>()][row["type"].get<std::string>()] =
                eval::MetricsRow::from_values(row["count"].get<double>(),
                                              row["precision"].get<double>(),
                                              row["recall"].get<double>());
        }
        auto report = eval::compute_report(per_oscti);
        double tolerance = doc["tolerance"].get<double>();
        for (const auto& [type, target] : doc["weighted_targets"].items()) {
            INFO(fixture << " / " << type);
            const auto& row = report.weighted_avg.at(type);
            CHECK(row.precision ==
                  Catch::Approx(target["precision"].get<double>()).margin(tolerance));
            CHECK(row.recall ==
                  Catch::Approx(target["recall"].get<double>()).margin(tolerance));
            CHECK(row.f1 == Catch::Approx(target["f1"].get<double>()).margin(tolerance));
        }
    }
}

TEST_CASE("derive_predictions reads the final terraform rule") {
    ioc::IocSet iocs;
    iocs.ip_addresses = {"80.239.140.66", "45.9.148.221", "45.9.148.121", "45.9.249.58"};
    auto predictions = eval::derive_predictions(final_terraform_set(), iocs);

    auto has_entity = [&](eval::EntityType type, const std::string& value) {
        return predictions.entities.count(
                   eval::Entity{type, eval::normalize_entity(type, value)}) > 0;
    };
    CHECK(has_entity(eval::EntityType::ApiCall, "GetObject"));
    CHECK(has_entity(eval::EntityType::Tactic, "collection"));
    CHECK(has_entity(eval::EntityType::Technique, "T1530"));
    CHECK(has_entity(eval::EntityType::Ioc, "80.239.140.66"));
    CHECK(has_entity(eval::EntityType::Other, "terraform.tfstate"));

    auto has_rel = [&](eval::RelationType type, const std::string& left,
                       const std::string& right) {
        for (const auto& rel : predictions.relationships)
            if (rel.type == type && rel.left == left && rel.right == right) return true;
        return false;
    };
    CHECK(has_rel(eval::RelationType::ApiTechnique, "GetObject", "T1530"));
    CHECK(has_rel(eval::RelationType::ApiTactic, "GetObject", "collection"));
    CHECK(has_rel(eval::RelationType::ApiIoc, "GetObject", "80.239.140.66"));
    CHECK(has_rel(eval::RelationType::DetectionEntitySigmaField, "terraform.tfstate",
                  "requestparameters.key"));
    CHECK(has_rel(eval::RelationType::ApiOther, "GetObject", "terraform.tfstate"));
}

TEST_CASE("no rules means all-zero relationship counts") {
    auto predictions = eval::derive_predictions(refine::RuleSet{}, ioc::IocSet{});
    CHECK(predictions.entities.empty());
    CHECK(predictions.relationships.empty());
    Json doc = {{"oscti_id", 1}, {"entities", Json::array()},
                {"relationships", Json::array()}};
    auto truth = eval::ground_truth_from_json(doc);
    REQUIRE(truth.ok());
    auto counts = eval::match_relationships({}, truth.value());
    for (const auto& [type, cell] : counts) CHECK(cell == eval::MatchCounts{0, 0, 0});
}

TEST_CASE("check_candidates computes executability and condition accuracy") {
    // 122 rules, one of which cannot compile (unknown modifier smuggled past
    // construction): 121/122 = 99.18%.
    refine::RuleSet set;
    std::mt19937_64 rng(2222);
    for (int i = 0; i < 122; ++i) {
        set.rules.push_back(testing::random_pool_rule(rng, testing::ApiPool{}, i));
        set.provenance.push_back(i);
    }
    set.rules[60].detection.selections[0].second.criteria[0].first.modifier = "re";

    auto summary = eval::check_candidates(set);
    REQUIRE(summary.ok());
    CHECK(summary.value().total == 122);
    CHECK(summary.value().executable == 121);
    CHECK(summary.value().executable_pct() == Catch::Approx(99.18).margin(0.005));
    CHECK(summary.value().condition_accuracy_pct() == 100.0);
    CHECK(eval::render_candidate_summary(summary.value()).find("n/a") != std::string::npos);
}

TEST_CASE("check_candidates merges manual annotations") {
    refine::RuleSet set;
    std::mt19937_64 rng(2223);
    for (int i = 0; i < 2; ++i) {
        set.rules.push_back(testing::random_pool_rule(rng, testing::ApiPool{}, i));
        set.provenance.push_back(i);
    }
    Json annotations = {
        {set.rules[0].title,
         {{"criticality_accurate", true}, {"descriptive_aligned", false}}}};
    auto summary = eval::check_candidates(set, annotations);
    REQUIRE(summary.ok());
    CHECK(summary.value().criticality_annotated == 1);
    CHECK(summary.value().criticality_accurate == 1);
    CHECK(summary.value().descriptive_annotated == 1);
    CHECK(summary.value().descriptive_aligned == 0);

    Json mismatched = {{"No Such Rule", {{"criticality_accurate", true}}}};
    auto failure = eval::check_candidates(set, mismatched);
    REQUIRE_FALSE(failure.ok());
    CHECK(failure.error().code == ErrorCode::AnnotationMismatch);
}
