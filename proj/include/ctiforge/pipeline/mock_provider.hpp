#pragma once

#include <regex>
#include <string>
#include <vector>

#include "ctiforge/extract/voting.hpp"
#include "ctiforge/ioc/iocs.hpp"
#include "ctiforge/llm/gateway.hpp"
#include "ctiforge/refine/set_refiner.hpp"
#include "ctiforge/rulegen/validator.hpp"

namespace ctiforge::pipeline {

// ============================================================================
// Deterministic mock provider
//
// A rule-based stand-in for the chat model: answers every pipeline schema
// from the request content alone, with no randomness. Good enough to run the
// whole pipeline offline and to record replay fixtures from.
// ============================================================================

class MockProvider : public llm::Provider {
public:
    Result<llm::ProviderReply> complete(const llm::LlmRequest& request) override {
        std::string text;
        for (const auto& part : request.user_content)
            if (part.kind == llm::ContentPart::Kind::Text) text += part.text + "\n";

        Json response;
        const std::string& schema = request.response_schema;
        if (schema == llm::schemas::kImageTranscript) {
            response = transcribe(request);
        } else if (schema == llm::schemas::kApiCalls) {
            response = api_calls(text);
        } else if (schema == llm::schemas::kTtpAssignment) {
            response = ttp(text);
        } else if (schema == llm::schemas::kRuleBatch) {
            response = rule_batch(text);
        } else if (schema == llm::schemas::kRule) {
            response = rule(text);
        } else if (schema == llm::schemas::kSelectionIndex) {
            response = selection_index(text);
        } else if (schema == llm::schemas::kIocSet) {
            response = iocs(text);
        } else {
            return Error{ErrorCode::SchemaViolation, "mock cannot answer schema " + schema};
        }
        llm::ProviderReply reply;
        reply.raw_text = response.dump();
        reply.usage.prompt = static_cast<long long>(text.size() / 4);
        reply.usage.completion = static_cast<long long>(reply.raw_text.size() / 4);
        return reply;
    }

    std::string name() const override { return "mock"; }

private:
    // Section of the prompt following the given marker line.
    static std::string section_after(const std::string& text, const std::string& marker) {
        size_t pos = text.find(marker);
        if (pos == std::string::npos) return "";
        return text.substr(pos + marker.size());
    }

    // First balanced JSON object starting at or after `from`.
    static Json embedded_json(const std::string& text, size_t from) {
        size_t start = text.find('{', from);
        if (start == std::string::npos) return Json::object();
        int depth = 0;
        bool in_string = false;
        for (size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (c == '\\')
                    ++i;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            if (c == '{') ++depth;
            if (c == '}') {
                if (--depth == 0) {
                    Json parsed =
                        Json::parse(text.substr(start, i - start + 1), nullptr, false);
                    return parsed.is_discarded() ? Json::object() : parsed;
                }
            }
        }
        return Json::object();
    }

    static Json transcribe(const llm::LlmRequest& request) {
        std::string url, alt;
        for (const auto& part : request.user_content) {
            if (part.kind == llm::ContentPart::Kind::ImageUrl) url = part.url;
            if (part.kind == llm::ContentPart::Kind::Text &&
                part.text.rfind("Alt text: ", 0) == 0)
                alt = part.text.substr(10);
        }
        std::string transcript = alt.empty() ? "Screenshot from " + url
                                             : alt + " (transcribed from " + url + ")";
        return Json{{"transcript", transcript}};
    }

    Json api_calls(const std::string& text) const {
        bool implicit = text.find("implied") != std::string::npos ||
                        text.find("infer") != std::string::npos;
        std::string paragraph = section_after(text, "Paragraph:\n");
        size_t cut = paragraph.find("\nRespond with JSON");
        if (cut != std::string::npos) paragraph = paragraph.substr(0, cut);

        Json calls = Json::array();
        auto add = [&calls](const std::string& name, const std::string& source) {
            for (const auto& existing : calls)
                if (existing["eventName"] == name) return;
            calls.push_back({{"eventName", name}, {"eventSource", source}});
        };
        if (implicit) {
            // Operational phrases that imply CloudTrail events.
            std::string lowered = strings::to_lower(paragraph);
            if (lowered.find("sync") != std::string::npos &&
                (lowered.find("bucket") != std::string::npos ||
                 lowered.find("s3") != std::string::npos)) {
                add("ListBuckets", "s3.amazonaws.com");
                add("GetObject", "s3.amazonaws.com");
            }
            if (lowered.find("enumerated iam users") != std::string::npos ||
                lowered.find("listed the iam users") != std::string::npos)
                add("ListUsers", "iam.amazonaws.com");
        } else {
            // Word-boundary scan for known CloudTrail action names.
            for (const auto& [action, source] : extract::aws_event_source_table()) {
                size_t pos = 0;
                while ((pos = paragraph.find(action, pos)) != std::string::npos) {
                    bool left_ok =
                        pos == 0 || !std::isalnum(static_cast<unsigned char>(paragraph[pos - 1]));
                    size_t end = pos + action.size();
                    bool right_ok = end >= paragraph.size() ||
                                    !std::isalnum(static_cast<unsigned char>(paragraph[end]));
                    if (left_ok && right_ok) {
                        add(action, source);
                        break;
                    }
                    pos = end;
                }
            }
        }
        return Json{{"api_calls", calls}};
    }

    static Json ttp(const std::string& text) {
        std::string name = strings::trim(section_after(text, "API call: "));
        size_t paren = name.find(" (");
        std::string source;
        if (paren != std::string::npos) {
            size_t close = name.find(')', paren);
            source = name.substr(paren + 2, close - paren - 2);
            if (source.rfind("eventSource: ", 0) == 0) source = source.substr(13);
            name = name.substr(0, paren);
        }
        struct Mapping {
            const char* service;
            const char* tactic;
            const char* technique;
            const char* subtechnique;
        };
        static const Mapping mappings[] = {
            {"s3.amazonaws.com", "collection", "T1530", ""},
            {"iam.amazonaws.com", "persistence", "T1098", "T1098.001"},
            {"sts.amazonaws.com", "privilege-escalation", "T1078", "T1078.004"},
            {"ec2.amazonaws.com", "impact", "T1496", ""},
            {"lambda.amazonaws.com", "execution", "T1648", ""},
            {"secretsmanager.amazonaws.com", "credential-access", "T1555", "T1555.006"},
            {"ssm.amazonaws.com", "execution", "T1651", ""},
            {"cloudtrail.amazonaws.com", "defense-evasion", "T1562", "T1562.008"},
            {"logs.amazonaws.com", "defense-evasion", "T1562", "T1562.008"},
        };
        for (const auto& mapping : mappings) {
            if (source == mapping.service)
                return Json{{"tactic", mapping.tactic},
                            {"technique", mapping.technique},
                            {"subTechnique", mapping.subtechnique}};
        }
        return Json{{"tactic", "execution"}, {"technique", "T1059"},
                    {"subTechnique", "T1059.009"}};
    }

    Json rule_batch(const std::string& text) const {
        // Calls arrive as enrichment lines:
        //   - Name (eventSource: src) | tactic: t | technique: Tnnnn [| sub-technique: ...]
        struct Call {
            std::string name, source, tactic, technique, subtechnique;
        };
        std::vector<Call> calls;
        static const std::regex line_re(
            R"(- (\w+) \(eventSource: ([^)]+)\) \| tactic: ([a-z-]+) \| technique: (T[\d.]+)( \| sub-technique: (T[\d.]+))?)");
        for (auto it = std::sregex_iterator(text.begin(), text.end(), line_re);
             it != std::sregex_iterator(); ++it) {
            Call call;
            call.name = (*it)[1];
            call.source = (*it)[2];
            call.tactic = (*it)[3];
            call.technique = (*it)[4];
            call.subtechnique = (*it)[6];
            calls.push_back(std::move(call));
        }
        std::string report_url = "https://example.invalid/report";
        {
            static const std::regex url_re(R"(Report URL: (\S+))");
            std::smatch match;
            if (std::regex_search(text, match, url_re)) report_url = match[1];
        }
        if (calls.empty()) {
            // No enrichment (the extractor stage is disabled): scan the raw
            // paragraph for action names and emit one coarse rule.
            Json fallback = api_calls("Paragraph:\n" +
                                      section_after(text, "Enriched paragraph:\n"));
            for (const auto& entry : fallback["api_calls"]) {
                Call call;
                call.name = entry["eventName"];
                call.source = entry["eventSource"];
                call.tactic = "execution";
                call.technique = "T1059";
                calls.push_back(std::move(call));
            }
        }
        if (calls.empty()) return Json{{"rules", Json::array()}};

        // One rule per (tactic, technique) group, per the merge instruction.
        std::vector<std::pair<std::string, std::vector<Call>>> groups;
        for (const auto& call : calls) {
            std::string key = call.tactic + "/" + call.technique + "/" + call.subtechnique;
            bool found = false;
            for (auto& [existing, members] : groups) {
                if (existing == key) {
                    members.push_back(call);
                    found = true;
                }
            }
            if (!found) groups.push_back({key, {call}});
        }

        static const std::map<std::string, std::string> level_by_tactic = {
            {"collection", "high"},        {"credential-access", "high"},
            {"exfiltration", "high"},      {"impact", "critical"},
            {"initial-access", "high"},    {"privilege-escalation", "high"},
            {"persistence", "medium"},     {"defense-evasion", "medium"},
            {"execution", "medium"},       {"lateral-movement", "medium"},
            {"discovery", "low"},          {"command-and-control", "medium"},
        };

        Json rules = Json::array();
        for (const auto& [key, members] : groups) {
            Json detection = Json::object();
            // One selection per event source within the group.
            std::vector<std::pair<std::string, std::vector<std::string>>> by_source;
            for (const auto& call : members) {
                bool found = false;
                for (auto& [source, names] : by_source) {
                    if (source == call.source) {
                        bool dup = false;
                        for (const auto& name : names)
                            if (name == call.name) dup = true;
                        if (!dup) names.push_back(call.name);
                        found = true;
                    }
                }
                if (!found) by_source.push_back({call.source, {call.name}});
            }
            std::vector<std::string> selection_names;
            int index = 0;
            for (const auto& [source, names] : by_source) {
                Json block = Json::object();
                block["eventSource"] = source;
                block["eventName"] =
                    names.size() == 1 ? Json(names[0]) : Json(names);
                std::string selection =
                    index == 0 ? "selection_event" : "selection_event_" + std::to_string(index + 1);
                detection[selection] = block;
                selection_names.push_back(selection);
                ++index;
            }
            std::string condition = selection_names[0];
            for (size_t i = 1; i < selection_names.size(); ++i)
                condition += " or " + selection_names[i];
            detection["condition"] = condition;

            const Call& head = members[0];
            std::string title = "AWS " + head.tactic + " activity:";
            for (const auto& call : members) title += " " + call.name;
            Json tags = Json::array();
            tags.push_back("attack." + head.tactic);
            std::string technique_tag = strings::to_lower(head.technique);
            tags.push_back("attack." + technique_tag);
            if (!head.subtechnique.empty())
                tags.push_back("attack." + strings::to_lower(head.subtechnique));
            std::string level = "medium";
            auto level_it = level_by_tactic.find(head.tactic);
            if (level_it != level_by_tactic.end()) level = level_it->second;

            rules.push_back(Json{
                {"title", title},
                {"description",
                 "Detects the " + head.tactic + " stage activity described in the report."},
                {"references", {report_url}},
                {"tags", tags},
                {"logsource", {{"product", "aws"}, {"service", "cloudtrail"}}},
                {"detection", detection},
                {"falsepositives", {"Legitimate administrative activity"}},
                {"level", level},
            });
        }
        return Json{{"rules", rules}};
    }

    Json rule(const std::string& text) const {
        bool remover = text.find("API call to remove:") != std::string::npos;
        size_t rule_pos = text.find("Rule (JSON):");
        Json draft = embedded_json(text, rule_pos == std::string::npos ? 0 : rule_pos);
        if (!remover) return Json{{"rule", draft}};  // optimizer: already coherent

        std::string spec = strings::trim(section_after(text, "API call to remove: "));
        size_t newline = spec.find('\n');
        if (newline != std::string::npos) spec = spec.substr(0, newline);
        std::string name = spec;
        std::string source;
        size_t paren = spec.find(" (");
        if (paren != std::string::npos) {
            size_t close = spec.find(')', paren);
            source = spec.substr(paren + 2, close - paren - 2);
            if (source.rfind("eventSource: ", 0) == 0) source = source.substr(13);
            name = spec.substr(0, paren);
        }
        auto parsed = rulegen::validate_rule(draft);
        if (!parsed) return Json{{"rule", draft}};
        auto adjusted = refine::mechanical_remove_api(
            parsed.value(), extract::ApiCallKey{name, strings::to_lower(source)});
        if (!adjusted) return Json{{"rule", draft}};
        return Json{{"rule", sigma::to_draft_json(*adjusted)}};
    }

    static Json selection_index(const std::string& text) {
        size_t pos = text.find("Candidates (JSON array");
        size_t array_start = text.find('[', pos == std::string::npos ? 0 : pos);
        long long best = 0;
        if (array_start != std::string::npos) {
            // Count criteria per candidate: most specific wins, first on ties.
            int depth = 0;
            bool in_string = false;
            size_t end = array_start;
            for (size_t i = array_start; i < text.size(); ++i) {
                char c = text[i];
                if (in_string) {
                    if (c == '\\')
                        ++i;
                    else if (c == '"')
                        in_string = false;
                    continue;
                }
                if (c == '"') in_string = true;
                if (c == '[') ++depth;
                if (c == ']' && --depth == 0) {
                    end = i;
                    break;
                }
            }
            Json candidates =
                Json::parse(text.substr(array_start, end - array_start + 1), nullptr, false);
            if (!candidates.is_discarded() && candidates.is_array()) {
                size_t best_count = 0;
                for (size_t i = 0; i < candidates.size(); ++i) {
                    size_t count = 0;
                    if (candidates[i].contains("detection")) {
                        for (const auto& [key, block] : candidates[i]["detection"].items()) {
                            if (key != "condition" && block.is_object())
                                count += block.size();
                        }
                    }
                    if (count > best_count) {
                        best_count = count;
                        best = static_cast<long long>(i);
                    }
                }
            }
        }
        return Json{{"selected_index", best}};
    }

    static Json iocs(const std::string& text) {
        std::string body = section_after(text, "Report text:\n");
        if (body.empty()) body = text;
        body = ioc::deobfuscate(body);

        Json ips = Json::array();
        static const std::regex ip_re(R"((\d{1,3}\.\d{1,3}\.\d{1,3}\.\d{1,3}))");
        for (auto it = std::sregex_iterator(body.begin(), body.end(), ip_re);
             it != std::sregex_iterator(); ++it) {
            std::string candidate = (*it)[1];
            if (!ioc::canonicalize_ip(candidate)) continue;
            bool seen = false;
            for (const auto& existing : ips)
                if (existing == candidate) seen = true;
            if (!seen) ips.push_back(candidate);
        }
        Json agents = Json::array();
        static const std::regex ua_re(R"((Mozilla/[^\s"]\S*[^\s".,;]|S3 Browser [\d.]+))");
        for (auto it = std::sregex_iterator(body.begin(), body.end(), ua_re);
             it != std::sregex_iterator(); ++it) {
            std::string agent = (*it)[1];
            bool seen = false;
            for (const auto& existing : agents)
                if (existing == agent) seen = true;
            if (!seen) agents.push_back(agent);
        }
        return Json{{"ip_addresses", ips}, {"user_agents", agents}};
    }
};

}  // namespace ctiforge::pipeline
