#pragma once

#include <map>
#include <string>
#include <vector>

#include "ctiforge/common.hpp"

namespace ctiforge::eval {

// ============================================================================
// Precision/recall arithmetic with #-weighted averages
// ============================================================================

struct MatchCounts {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;

    long long truth_count() const { return tp + fn; }  // the '#' column

    double precision() const {
        long long denom = tp + fp;
        return denom == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(denom);
    }
    double recall() const {
        long long denom = tp + fn;
        return denom == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(denom);
    }

    bool operator==(const MatchCounts& other) const = default;
};

inline double f1_score(double precision, double recall) {
    double denom = precision + recall;
    return denom == 0.0 ? 0.0 : 2.0 * precision * recall / denom;
}

/// One (#, P, R, F1) cell of the report.
struct MetricsRow {
    double count = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;

    static MetricsRow from_counts(const MatchCounts& counts) {
        MetricsRow row;
        row.count = static_cast<double>(counts.truth_count());
        row.precision = counts.precision();
        row.recall = counts.recall();
        row.f1 = f1_score(row.precision, row.recall);
        return row;
    }
    static MetricsRow from_values(double count, double precision, double recall) {
        MetricsRow row;
        row.count = count;
        row.precision = precision;
        row.recall = recall;
        row.f1 = f1_score(precision, recall);
        return row;
    }
};

/// Per-OSCTI rows and the #-weighted average per type. Row keys are the
/// entity/relationship type names; OSCTI keys are report ids.
struct MetricsReport {
    std::map<int, std::map<std::string, MetricsRow>> per_oscti;
    std::map<std::string, MetricsRow> weighted_avg;
};

/// Weighted averages over per-OSCTI (#, P, R) rows: each row weighs in by its
/// # column; rows with # = 0 contribute nothing.
inline MetricsReport compute_report(
    const std::map<int, std::map<std::string, MetricsRow>>& per_oscti) {
    MetricsReport report;
    report.per_oscti = per_oscti;

    std::map<std::string, double> total, sum_p, sum_r, sum_f;
    for (const auto& [oscti_id, rows] : per_oscti) {
        for (const auto& [type, row] : rows) {
            total[type] += row.count;
            sum_p[type] += row.count * row.precision;
            sum_r[type] += row.count * row.recall;
            sum_f[type] += row.count * row.f1;
        }
    }
    for (const auto& [type, weight] : total) {
        MetricsRow row;
        row.count = weight;
        if (weight > 0) {
            row.precision = sum_p[type] / weight;
            row.recall = sum_r[type] / weight;
            row.f1 = sum_f[type] / weight;
        }
        report.weighted_avg[type] = row;
    }
    return report;
}

inline Json to_json(const MetricsReport& report) {
    Json out;
    out["schema_version"] = 1;
    Json per = Json::object();
    for (const auto& [oscti_id, rows] : report.per_oscti) {
        Json row_obj = Json::object();
        for (const auto& [type, row] : rows)
            row_obj[type] = {{"count", row.count},
                             {"precision", row.precision},
                             {"recall", row.recall},
                             {"f1", row.f1}};
        per[std::to_string(oscti_id)] = row_obj;
    }
    out["per_oscti"] = per;
    Json avg = Json::object();
    for (const auto& [type, row] : report.weighted_avg)
        avg[type] = {{"count", row.count},
                     {"precision", row.precision},
                     {"recall", row.recall},
                     {"f1", row.f1}};
    out["weighted_avg"] = avg;
    return out;
}

/// Aligned-column text rendering (one block per type group).
inline std::string render_table(const MetricsReport& report) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-10s %-28s %8s %8s %8s %8s\n", "OSCTI", "Type", "#",
                  "P", "R", "F1");
    out += line;
    for (const auto& [oscti_id, rows] : report.per_oscti) {
        for (const auto& [type, row] : rows) {
            std::snprintf(line, sizeof(line), "%-10d %-28s %8.0f %8.2f %8.2f %8.2f\n",
                          oscti_id, type.c_str(), row.count, row.precision, row.recall,
                          row.f1);
            out += line;
        }
    }
    for (const auto& [type, row] : report.weighted_avg) {
        std::snprintf(line, sizeof(line), "%-10s %-28s %8.0f %8.2f %8.2f %8.2f\n", "Weighted",
                      type.c_str(), row.count, row.precision, row.recall, row.f1);
        out += line;
    }
    return out;
}

}  // namespace ctiforge::eval
