#include "qcoder/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "qcoder/errors.hpp"
#include "qcoder/geometry.hpp"

namespace qcoder {

std::vector<MatchRow> match_themes(const std::vector<Theme>& themes,
                                   const std::vector<std::string>& truth_subthemes,
                                   const RunConfig& cfg, Gateway& gateway) {
    if (themes.empty() || truth_subthemes.empty()) {
        throw PreconditionError("match_themes requires non-empty theme and sub-theme lists");
    }

    // Both sides run through the same normalization so verbatim matches land
    // at similarity 1.0 regardless of case or spacing.
    std::vector<std::string> theme_texts;
    for (const auto& t : themes) theme_texts.push_back(normalize_code_label(t.name));
    std::vector<std::string> truth_texts;
    for (const auto& s : truth_subthemes) truth_texts.push_back(normalize_code_label(s));

    std::vector<std::string> batch = theme_texts;
    batch.insert(batch.end(), truth_texts.begin(), truth_texts.end());
    auto vectors = gateway.embed(batch, cfg.embed_model_id);

    std::vector<MatchRow> rows;
    rows.reserve(truth_subthemes.size());
    for (std::size_t s = 0; s < truth_subthemes.size(); ++s) {
        const EmbeddingVector& sub_vec = vectors[themes.size() + s];
        std::vector<std::pair<double, std::size_t>> scored;
        scored.reserve(themes.size());
        for (std::size_t t = 0; t < themes.size(); ++t) {
            scored.emplace_back(cosine_similarity(sub_vec, vectors[t]), t);
        }
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });

        MatchRow row;
        row.sub_theme = truth_subthemes[s];
        for (std::size_t i = 0; i < std::min<std::size_t>(3, scored.size()); ++i) {
            row.top_matches.emplace_back(themes[scored[i].second].name, scored[i].first);
        }
        row.matched = !row.top_matches.empty() &&
                      row.top_matches.front().second >= cfg.match_threshold;
        rows.push_back(std::move(row));
    }
    return rows;
}

CoverageReport coverage_report(const std::vector<MatchRow>& rows) {
    if (rows.empty()) {
        throw PreconditionError("coverage report requires at least one match row");
    }
    CoverageReport report;
    std::size_t matched = 0;
    for (const auto& r : rows) {
        if (r.matched) ++matched;
    }
    report.pct_matched = 100.0 * static_cast<double>(matched) / static_cast<double>(rows.size());
    report.pct_unmatched = 100.0 * static_cast<double>(rows.size() - matched) /
                           static_cast<double>(rows.size());

    std::vector<MatchRow> sorted = rows;
    std::stable_sort(sorted.begin(), sorted.end(), [](const MatchRow& a, const MatchRow& b) {
        double sa = a.top_matches.empty() ? -2.0 : a.top_matches.front().second;
        double sb = b.top_matches.empty() ? -2.0 : b.top_matches.front().second;
        return sa < sb;
    });
    sorted.resize(std::min<std::size_t>(5, sorted.size()));
    report.worst_rows = std::move(sorted);
    return report;
}

CreationRateReport creation_rate_report(const Codebook& codebook, std::size_t response_count,
                                        std::size_t theme_count) {
    if (codebook.creation_log().empty()) {
        throw PreconditionError("creation rate report requires a creation log");
    }
    CreationRateReport report;
    report.starter_count = codebook.starter_count();
    int cumulative = static_cast<int>(report.starter_count);
    int ordinal = 0;
    for (const auto& [cluster_ordinal, created] : codebook.creation_log()) {
        ++ordinal;
        cumulative += created;
        report.rows.push_back(CreationRateRow{
            cluster_ordinal, cumulative, static_cast<int>(report.starter_count) + ordinal});
    }
    report.final_codes = static_cast<std::size_t>(cumulative);
    if (response_count > 0 && theme_count > 0) {
        report.responses_per_theme =
            static_cast<double>(response_count) / static_cast<double>(theme_count);
    }
    return report;
}

std::string creation_rate_csv(const CreationRateReport& report) {
    std::ostringstream out;
    out << "cluster_ordinal,cumulative_codes,diagonal_reference\n";
    for (const auto& row : report.rows) {
        out << row.cluster_ordinal << "," << row.cumulative_codes << ","
            << row.diagonal_reference << "\n";
    }
    return out.str();
}

namespace {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::string format_similarity(double s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", s);
    return buf;
}

}  // namespace

std::string match_table_csv(const std::vector<MatchRow>& rows) {
    std::ostringstream out;
    out << "sub_theme,matched,match_1,similarity_1,match_2,similarity_2,match_3,similarity_3\n";
    for (const auto& row : rows) {
        out << csv_escape(row.sub_theme) << "," << (row.matched ? "true" : "false");
        for (std::size_t i = 0; i < 3; ++i) {
            if (i < row.top_matches.size()) {
                out << "," << csv_escape(row.top_matches[i].first) << ","
                    << format_similarity(row.top_matches[i].second);
            } else {
                out << ",,";
            }
        }
        out << "\n";
    }
    return out.str();
}

std::string match_table_markdown(const std::vector<MatchRow>& rows) {
    std::ostringstream out;
    out << "| Original Sub-Theme | Closest Matches | Matched |\n";
    out << "| --- | --- | --- |\n";
    for (const auto& row : rows) {
        out << "| " << row.sub_theme << " | ";
        for (std::size_t i = 0; i < row.top_matches.size(); ++i) {
            if (i > 0) out << "; ";
            out << row.top_matches[i].first << " (" << format_similarity(row.top_matches[i].second)
                << ")";
        }
        out << " | " << (row.matched ? "yes" : "no") << " |\n";
    }
    return out.str();
}

}  // namespace qcoder
