#pragma once

#include <string>
#include <vector>

#include "qcoder/domain.hpp"
#include "qcoder/gateway.hpp"

namespace qcoder {

struct MatchRow {
    std::string sub_theme;
    std::vector<std::pair<std::string, double>> top_matches;  // <= 3, descending similarity
    bool matched = false;  // top similarity >= cfg.match_threshold
};

// Embeds normalized theme names and sub-theme strings, scores every pair by
// cosine, and keeps the top 3 per sub-theme. Ties keep theme list order.
std::vector<MatchRow> match_themes(const std::vector<Theme>& themes,
                                   const std::vector<std::string>& truth_subthemes,
                                   const RunConfig& cfg, Gateway& gateway);

struct CoverageReport {
    double pct_matched = 0.0;
    double pct_unmatched = 0.0;
    std::vector<MatchRow> worst_rows;  // bottom 5 by top similarity
};

CoverageReport coverage_report(const std::vector<MatchRow>& rows);

struct CreationRateRow {
    int cluster_ordinal = 0;
    int cumulative_codes = 0;
    int diagonal_reference = 0;  // one-new-code-per-cluster trajectory
};

struct CreationRateReport {
    std::vector<CreationRateRow> rows;
    std::size_t starter_count = 0;
    std::size_t final_codes = 0;
    // responses-per-theme ratio; 0 when counts were not supplied.
    double responses_per_theme = 0.0;
};

CreationRateReport creation_rate_report(const Codebook& codebook, std::size_t response_count = 0,
                                        std::size_t theme_count = 0);

std::string creation_rate_csv(const CreationRateReport& report);
std::string match_table_csv(const std::vector<MatchRow>& rows);
std::string match_table_markdown(const std::vector<MatchRow>& rows);

}  // namespace qcoder
