#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "qcoder/domain.hpp"
#include "qcoder/gateway.hpp"
#include "qcoder/templates.hpp"

namespace qcoder {

struct WritingLength {
    std::string name;
    int min_sentences = 1;
    int max_sentences = 5;
};

struct StudySpec {
    std::string data_type;
    std::string data_collection_context;
    int theme_count = 8;
    int subthemes_per_theme = 8;
    int samples_per_subtheme = 18;
    std::vector<std::string> writing_styles;
    std::vector<WritingLength> writing_lengths;
    std::vector<std::string> generator_model_ids;

    static StudySpec from_json(const json& j);
    json to_json() const;
};

struct NamedDescription {
    std::string name;
    std::string description;

    bool operator==(const NamedDescription&) const = default;
};

struct ThemeTree {
    std::string theme;
    std::vector<std::string> subthemes;
};

// Ground truth for a simulated study: model-specified criteria persisted for
// the recovery evaluation.
struct CriteriaSet {
    std::vector<NamedDescription> personas;
    std::vector<NamedDescription> contexts;
    std::vector<ThemeTree> themes;

    json to_json() const;
    static CriteriaSet from_json(const json& j);
};

struct GenerationPlan {
    std::vector<GenerationCriteria> rows;
    std::uint64_t seed = 0;
};

// Number of personas the criteria prompt requests.
inline constexpr int kPersonaCount = 10;
// The study design fixes four imagined collection contexts.
inline constexpr int kContextCount = 4;

// Prompts the chat model for personas, contexts, themes, and per-theme
// sub-themes. Short lists are re-requested once, then fail the stage.
// Sub-themes duplicated verbatim across themes are dropped.
CriteriaSet generate_criteria(const StudySpec& spec, const RunConfig& cfg,
                              const TemplateSet& templates, Gateway& gateway,
                              std::vector<std::string>* warnings = nullptr);

// For each (theme, sub-theme), draws samples_per_subtheme distinct
// persona/context/style/length/model combinations with the seeded generator,
// then shuffles all rows deterministically. Pure function of
// (spec, criteria, seed).
GenerationPlan sample_plan(const StudySpec& spec, const CriteriaSet& criteria,
                           std::uint64_t seed);

struct RejectionReport {
    std::size_t planned = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t duplicates = 0;
    std::vector<std::string> sample_rejections;  // up to 10 rejected texts
};

struct SynthesisResult {
    std::vector<Document> documents;
    RejectionReport report;
    std::vector<std::tuple<std::string, std::string, std::string>> exchanges;  // (doc id, prompt, response)
};

// One chat call per plan row; responses are validated mechanically
// (non-empty, within 4x the requested sentence band, no AI-meta markers),
// deduplicated by text, and become Documents carrying their ground-truth
// criteria. More than 50% rejection fails the stage.
SynthesisResult synthesize_documents(const GenerationPlan& plan, const RunConfig& cfg,
                                     const TemplateSet& templates, Gateway& gateway);

// "short (1-3 sentences)" — the plan stores the formatted band so the
// validity filter can recover it.
std::string format_writing_length(const WritingLength& length);

}  // namespace qcoder
