#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "qcoder/domain.hpp"
#include "qcoder/gateway.hpp"
#include "qcoder/geometry.hpp"
#include "qcoder/templates.hpp"

namespace qcoder {

struct ProposedCode {
    std::string label;       // normalized
    std::string definition;
};

struct InductionDecision {
    int cluster_id = 0;
    std::string analysis_text;  // full model reasoning, kept for audit
    bool no_new_codes = false;
    std::vector<ProposedCode> new_codes;  // non-empty iff !no_new_codes
};

// The numbered "1. Code 1 ... N. Code N" block the starter prompt ends with.
std::string starter_code_template(int count);

// Asks the chat model for cfg.starter_code_count hypothetical codes. A short
// or duplicate-heavy list is re-requested once; lingering duplicates are
// dropped with a warning, a lingering short list fails the stage.
std::vector<CodeEntry> generate_starter_codes(const RunConfig& cfg, const TemplateSet& templates,
                                              Gateway& gateway,
                                              std::vector<std::string>* warnings = nullptr);

// k nearest codes per member, concatenated in member order, deduplicated
// keeping first occurrence. Size is bounded by members * k.
std::vector<std::string> nearest_codes_for_cluster(
    const Cluster& cluster, const std::map<std::string, EmbeddingVector>& embeddings,
    const CodeIndex& index, int k);

std::string build_induction_prompt(const std::vector<std::string>& cluster_summaries,
                                   const std::vector<std::string>& nearest,
                                   const RunConfig& cfg, const TemplateSet& templates);

// Locates "My logical recommendation:" (case-insensitive) and reads the
// trailing section: either "no new codes needed" or one or more
// "Code:"/"Definition:" pairs.
InductionDecision parse_induction_output(const std::string& raw);

struct InductionResult {
    Codebook codebook;
    std::vector<InductionDecision> decisions;
    std::vector<std::string> warnings;
    std::size_t unparseable_clusters = 0;
    // (cluster_id, prompt, response) per cluster, in processing order.
    std::vector<std::tuple<int, std::string, std::string>> exchanges;
    // Labels in the retrieval index at the end of the run; always mirrors the
    // codebook's label set.
    std::vector<std::string> index_labels;
};

// Iterates clusters in ascending id. Each decision sees the codebook state
// left by the previous one: accepted codes are embedded and inserted into
// the index before the next retrieval. Unparseable decisions skip their
// cluster (no codebook change) and are tallied; more than 20% of clusters
// unparseable fails the stage.
InductionResult induce_codebook(const std::vector<Cluster>& clusters,
                                const std::map<std::string, SummaryPoint>& summaries,
                                const std::map<std::string, EmbeddingVector>& embeddings,
                                const std::vector<CodeEntry>& starter, const RunConfig& cfg,
                                const TemplateSet& templates, Gateway& gateway);

}  // namespace qcoder
