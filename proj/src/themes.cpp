#include "qcoder/themes.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "qcoder/errors.hpp"
#include "qcoder/geometry.hpp"
#include "qcoder/textutil.hpp"

namespace qcoder {

namespace {

// Strips a ```...``` fence (with optional language tag) if one wraps the body.
std::string strip_fence(const std::string& raw) {
    std::string t = trim_copy(raw);
    if (t.rfind("```", 0) != 0) return t;
    std::size_t first_newline = t.find('\n');
    if (first_newline == std::string::npos) return t;
    std::size_t closing = t.rfind("```");
    if (closing <= first_newline) return t;
    return trim_copy(t.substr(first_newline + 1, closing - first_newline - 1));
}

std::vector<std::string> split_listish(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    for (char c : text) {
        if (c == ',' || c == ';') {
            std::string item = trim_copy(current);
            if (!item.empty()) out.push_back(item);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    std::string item = trim_copy(current);
    if (!item.empty()) out.push_back(item);
    return out;
}

bool means_none(const std::string& s) {
    std::string t = to_lower_copy(trim_copy(s));
    return t.empty() || t == "none" || t == "n/a" || t == "none." || t == "no unclassified codes" ||
           t == "no unclassified codes.";
}

}  // namespace

std::vector<std::vector<std::string>> cluster_codes(const Codebook& codebook,
                                                    const RunConfig& cfg, Gateway& gateway,
                                                    std::uint64_t seed) {
    if (codebook.entries().empty()) {
        throw PreconditionError("cannot cluster an empty codebook");
    }
    std::vector<std::string> labels;
    for (const auto& entry : codebook.entries()) labels.push_back(entry.label);

    if (labels.size() == 1) {
        return {labels};
    }

    auto vectors = gateway.embed(labels, cfg.embed_model_id);
    RowMatrix matrix(labels.size(), static_cast<std::size_t>(vectors.front().dims));
    for (std::size_t r = 0; r < labels.size(); ++r) {
        auto unit = normalize(vectors[r]);
        for (std::size_t c = 0; c < matrix.cols; ++c) matrix.at(r, c) = unit.values[c];
    }

    RowMatrix coords;
    try {
        PcaResult pca = pca_fit_transform(matrix, cfg.pca_variance_target);
        coords = neighbor_embed(pca.projected, cfg.reduced_dims, seed).coords;
    } catch (const PreconditionError&) {
        // Degenerate geometry (e.g. identical labels after caching); cluster
        // the raw unit vectors directly.
        coords = matrix;
    }

    auto clusters = agglomerative_cluster(coords, labels, cfg.theme_cluster_size);
    std::vector<std::vector<std::string>> groups;
    groups.reserve(clusters.size());
    for (const auto& c : clusters) groups.push_back(c.member_ids);
    return groups;
}

std::string build_theme_prompt(const std::vector<std::string>& labels, const RunConfig& cfg,
                               const TemplateSet& templates) {
    if (labels.empty()) {
        throw PreconditionError("theme prompt requires a non-empty label list");
    }
    if (cfg.research_question.empty()) {
        throw PreconditionError("research_question must be configured for theme identification");
    }
    std::ostringstream block;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i > 0) block << '\n';
        block << (i + 1) << ". " << labels[i];
    }
    return render(templates.get("themes"),
                  {{"research_question", cfg.research_question},
                   {"data_type", cfg.data_type},
                   {"data_collection_context", cfg.data_collection_context},
                   {"labels", block.str()}});
}

ThemeAnalysis parse_theme_json(const std::string& raw) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(strip_fence(raw));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("theme response is not valid JSON: " + std::string(e.what()));
    }

    ThemeAnalysis analysis;
    try {
        for (const auto& obs : j.at("initial_observations")) {
            analysis.initial_observations.push_back(obs.get<std::string>());
        }
        for (const auto& t : j.at("suggested_themes")) {
            Theme theme;
            theme.name = t.at("theme_name").get<std::string>();
            theme.concept_text = t.at("concept").get<std::string>();
            for (const auto& code : t.at("codes")) {
                theme.codes.push_back(normalize_code_label(code.get<std::string>()));
            }
            theme.relationship = t.at("relationship").get<std::string>();
            analysis.suggested_themes.push_back(std::move(theme));
        }
        const auto& r = j.at("reflection");
        analysis.reflection.broad_or_narrow_themes =
            r.at("broad_or_narrow_themes").get<std::string>();
        analysis.reflection.contradictions_or_unexpected_patterns =
            r.at("contradictions_or_unexpected_patterns").get<std::string>();
        analysis.reflection.potential_subthemes = r.at("potential_subthemes").get<std::string>();
        const auto& unclassified = r.at("unclassified_codes");
        if (unclassified.is_array()) {
            for (const auto& code : unclassified) {
                analysis.reflection.unclassified_codes.push_back(code.get<std::string>());
            }
        } else if (unclassified.is_string()) {
            std::string text = unclassified.get<std::string>();
            if (!means_none(text)) {
                analysis.reflection.unclassified_codes = split_listish(text);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("theme JSON is missing required structure: " + std::string(e.what()));
    }
    if (analysis.suggested_themes.empty()) {
        throw ParseError("theme JSON contains no suggested themes");
    }
    return analysis;
}

ConsolidationResult consolidate(const Codebook& codebook, const RunConfig& cfg,
                                const TemplateSet& templates, Gateway& gateway,
                                std::uint64_t seed) {
    if (codebook.entries().empty()) {
        throw PreconditionError("cannot consolidate an empty codebook");
    }

    auto groups = cluster_codes(codebook, cfg, gateway, seed);

    ConsolidationResult result;
    std::set<std::string> codebook_labels;
    for (const auto& entry : codebook.entries()) codebook_labels.insert(entry.label);

    std::map<std::string, std::size_t> theme_by_norm_name;
    std::set<std::string> claimed;

    for (std::size_t g = 0; g < groups.size(); ++g) {
        const int ordinal = static_cast<int>(g) + 1;
        std::string prompt = build_theme_prompt(groups[g], cfg, templates);
        std::string response =
            gateway.chat(ChatRequest{cfg.chat_model_id, prompt, cfg.temperature});
        result.exchanges.emplace_back(ordinal, prompt, response);

        ThemeAnalysis analysis;
        bool parsed = false;
        try {
            analysis = parse_theme_json(response);
            parsed = true;
        } catch (const ParseError&) {
            // One repair attempt: same prompt plus an emit-only-JSON reminder.
            std::string repair_prompt =
                prompt +
                "\nYour previous response was not a valid JSON object. Respond again with only "
                "the JSON object and no other text.";
            std::string repair_response =
                gateway.chat(ChatRequest{cfg.chat_model_id, repair_prompt, cfg.temperature});
            result.exchanges.emplace_back(ordinal, repair_prompt, repair_response);
            try {
                analysis = parse_theme_json(repair_response);
                parsed = true;
            } catch (const ParseError& e) {
                ++result.failed_clusters;
                result.warnings.push_back("code cluster " + std::to_string(ordinal) +
                                          " failed theme JSON parsing: " + e.what());
            }
        }
        if (!parsed) continue;
        result.analyses.push_back(analysis);

        for (const auto& suggested : analysis.suggested_themes) {
            // Keep only codes that exist in this codebook; models sometimes
            // invent labels or echo paraphrases.
            Theme theme = suggested;
            std::vector<std::string> kept;
            for (const auto& code : theme.codes) {
                if (codebook_labels.count(code)) {
                    kept.push_back(code);
                    claimed.insert(code);
                } else {
                    result.warnings.push_back("theme \"" + theme.name +
                                              "\" lists unknown code \"" + code + "\"");
                }
            }
            theme.codes = std::move(kept);

            std::string norm_name = normalize_code_label(theme.name);
            auto it = theme_by_norm_name.find(norm_name);
            if (it == theme_by_norm_name.end()) {
                theme_by_norm_name[norm_name] = result.themes.size();
                result.themes.push_back(std::move(theme));
                result.theme_source_cluster.push_back(ordinal);
            } else {
                Theme& existing = result.themes[it->second];
                for (const auto& code : theme.codes) {
                    if (std::find(existing.codes.begin(), existing.codes.end(), code) ==
                        existing.codes.end()) {
                        existing.codes.push_back(code);
                    }
                }
            }
        }
    }

    if (result.failed_clusters == groups.size()) {
        throw StageError("theme identification failed for every code cluster");
    }

    for (const auto& label : codebook_labels) {
        if (!claimed.count(label)) result.unclassified.push_back(label);
    }
    return result;
}

}  // namespace qcoder
