#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "qcoder/domain.hpp"
#include "qcoder/gateway.hpp"
#include "qcoder/templates.hpp"

namespace qcoder {

struct ThemeReflection {
    std::string broad_or_narrow_themes;
    std::string contradictions_or_unexpected_patterns;
    std::string potential_subthemes;
    std::vector<std::string> unclassified_codes;
};

// Mirrors the theme prompt's JSON response structure.
struct ThemeAnalysis {
    std::vector<std::string> initial_observations;
    std::vector<Theme> suggested_themes;
    ThemeReflection reflection;
};

// Embeds the code labels and reuses the reduction + agglomerative pipeline
// with cfg.theme_cluster_size codes per cluster. Returns label groups in
// cluster id order.
std::vector<std::vector<std::string>> cluster_codes(const Codebook& codebook,
                                                    const RunConfig& cfg, Gateway& gateway,
                                                    std::uint64_t seed);

std::string build_theme_prompt(const std::vector<std::string>& labels, const RunConfig& cfg,
                               const TemplateSet& templates);

// Strict JSON parse after stripping an optional fenced-code wrapper. Theme
// code labels are normalized. The reflection's unclassified_codes accepts an
// array or a free-text string (split on commas/semicolons).
ThemeAnalysis parse_theme_json(const std::string& raw);

struct ConsolidationResult {
    std::vector<Theme> themes;
    std::vector<std::string> unclassified;    // codebook labels no theme claimed
    std::vector<ThemeAnalysis> analyses;      // per-cluster log, cluster order
    std::vector<int> theme_source_cluster;    // parallel to themes: 1-based code-cluster ordinal
    std::vector<std::string> warnings;
    std::size_t failed_clusters = 0;
    // (cluster_ordinal, prompt, response) in order; repair retries appear as
    // additional entries for the same ordinal.
    std::vector<std::tuple<int, std::string, std::string>> exchanges;
};

// Runs theme identification over every code cluster and assembles the final
// list: names deduplicated by normalized form (first occurrence wins, later
// duplicates merge their code lists), every codebook label accounted for in
// exactly one of {some theme's codes, unclassified}. A cluster whose JSON
// stays invalid after one repair re-prompt routes its codes to unclassified;
// all clusters failing fails the stage.
ConsolidationResult consolidate(const Codebook& codebook, const RunConfig& cfg,
                                const TemplateSet& templates, Gateway& gateway,
                                std::uint64_t seed);

}  // namespace qcoder
