#include "qcoder/induction.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <sstream>

#include "qcoder/errors.hpp"
#include "qcoder/textutil.hpp"

namespace qcoder {

namespace {

std::string numbered_block(const std::vector<std::string>& items) {
    std::ostringstream out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out << '\n';
        out << (i + 1) << ". " << items[i];
    }
    return out.str();
}

// Parses "N. text" list items from a starter-code response.
std::vector<std::string> parse_numbered_items(const std::string& raw) {
    std::vector<std::string> items;
    std::istringstream in(raw);
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim_copy(line);
        std::size_t digits = 0;
        while (digits < t.size() && std::isdigit(static_cast<unsigned char>(t[digits]))) ++digits;
        if (digits == 0 || digits >= t.size()) continue;
        if (t[digits] != '.' && t[digits] != ')') continue;
        std::string content = trim_copy(t.substr(digits + 1));
        if (!content.empty()) items.push_back(content);
    }
    return items;
}

std::size_t find_case_insensitive(const std::string& haystack, const std::string& lowered_needle) {
    std::string lowered = to_lower_copy(haystack);
    return lowered.find(lowered_needle);
}

}  // namespace

std::string starter_code_template(int count) {
    std::ostringstream out;
    for (int i = 1; i <= count; ++i) {
        if (i > 1) out << '\n';
        out << i << ". Code " << i;
    }
    return out.str();
}

std::vector<CodeEntry> generate_starter_codes(const RunConfig& cfg, const TemplateSet& templates,
                                              Gateway& gateway,
                                              std::vector<std::string>* warnings) {
    const int want = cfg.starter_code_count;
    std::string prompt = render(templates.get("starter_codes"),
                                {{"k_to_start", std::to_string(want)},
                                 {"data_type", cfg.data_type},
                                 {"data_collection_context", cfg.data_collection_context},
                                 {"code_template", starter_code_template(want)}});

    auto attempt = [&]() -> std::vector<std::string> {
        std::string response =
            gateway.chat(ChatRequest{cfg.chat_model_id, prompt, cfg.temperature});
        std::vector<std::string> labels;
        std::set<std::string> seen;
        for (const auto& item : parse_numbered_items(response)) {
            std::string label;
            try {
                label = normalize_code_label(item);
            } catch (const ParseError&) {
                continue;
            }
            if (seen.insert(label).second) labels.push_back(label);
        }
        return labels;
    };

    auto labels = attempt();
    if (static_cast<int>(labels.size()) < want) {
        // One retry; with temperature 0 or replay this usually reproduces the
        // same list, in which case the count contract decides below.
        labels = attempt();
        if (static_cast<int>(labels.size()) < want) {
            if (static_cast<int>(labels.size()) > 0 && warnings) {
                warnings->push_back("starter codes deduplicated to " +
                                    std::to_string(labels.size()) + " of " + std::to_string(want));
            }
            throw StageError("starter code generation yielded " + std::to_string(labels.size()) +
                             " unique codes, wanted " + std::to_string(want));
        }
        if (warnings) warnings->push_back("starter code list required a retry");
    }
    labels.resize(static_cast<std::size_t>(want));

    std::vector<CodeEntry> out;
    out.reserve(labels.size());
    int index = 1;
    for (const auto& label : labels) {
        out.push_back(CodeEntry{label, "starter code (hypothetical)", CodeOrigin::make_starter(),
                                index++});
    }
    return out;
}

std::vector<std::string> nearest_codes_for_cluster(
    const Cluster& cluster, const std::map<std::string, EmbeddingVector>& embeddings,
    const CodeIndex& index, int k) {
    std::vector<std::string> unique;
    std::set<std::string> seen;
    for (const auto& member_id : cluster.member_ids) {
        auto it = embeddings.find(member_id);
        if (it == embeddings.end()) {
            throw PreconditionError("summary point " + member_id + " has no embedding");
        }
        for (const auto& [label, sim] : knn_codes(it->second, index, k)) {
            if (seen.insert(label).second) unique.push_back(label);
        }
    }
    return unique;
}

std::string build_induction_prompt(const std::vector<std::string>& cluster_summaries,
                                   const std::vector<std::string>& nearest,
                                   const RunConfig& cfg, const TemplateSet& templates) {
    if (nearest.empty()) {
        throw PreconditionError("induction prompt requires nearest codes");
    }
    if (cluster_summaries.empty()) {
        throw PreconditionError("induction prompt requires cluster summaries");
    }
    return render(templates.get("induction"),
                  {{"data_type", cfg.data_type},
                   {"data_collection_context", cfg.data_collection_context},
                   {"redundancy_example", cfg.redundancy_example},
                   {"codes", numbered_block(nearest)},
                   {"text", numbered_block(cluster_summaries)}});
}

InductionDecision parse_induction_output(const std::string& raw) {
    InductionDecision decision;
    decision.analysis_text = raw;

    const std::string marker = "my logical recommendation:";
    std::size_t pos = find_case_insensitive(raw, marker);
    if (pos == std::string::npos) {
        throw ParseError("induction output lacks the recommendation marker");
    }
    std::string tail = raw.substr(pos + marker.size());

    if (find_case_insensitive(tail, "no new codes needed") != std::string::npos) {
        decision.no_new_codes = true;
        return decision;
    }

    std::istringstream in(tail);
    std::string line;
    std::optional<std::string> pending_code;
    while (std::getline(in, line)) {
        std::string t = trim_copy(line);
        std::string lowered = to_lower_copy(t);
        if (lowered.rfind("code:", 0) == 0) {
            if (pending_code) {
                throw ParseError("code \"" + *pending_code + "\" has no definition");
            }
            pending_code = trim_copy(t.substr(5));
            if (pending_code->empty()) {
                throw ParseError("empty code line in induction output");
            }
        } else if (lowered.rfind("definition:", 0) == 0) {
            if (!pending_code) {
                throw ParseError("definition without a preceding code line");
            }
            std::string definition = trim_copy(t.substr(11));
            decision.new_codes.push_back(
                ProposedCode{normalize_code_label(*pending_code), definition});
            pending_code.reset();
        }
    }
    if (pending_code) {
        throw ParseError("code \"" + *pending_code + "\" has no definition");
    }
    if (decision.new_codes.empty()) {
        throw ParseError("recommendation section contains neither a decline nor a code");
    }
    return decision;
}

InductionResult induce_codebook(const std::vector<Cluster>& clusters,
                                const std::map<std::string, SummaryPoint>& summaries,
                                const std::map<std::string, EmbeddingVector>& embeddings,
                                const std::vector<CodeEntry>& starter, const RunConfig& cfg,
                                const TemplateSet& templates, Gateway& gateway) {
    if (clusters.empty()) {
        throw PreconditionError("induction requires at least one cluster");
    }
    if (starter.empty()) {
        throw PreconditionError("induction requires starter codes");
    }

    InductionResult result;
    CodeIndex index;
    {
        std::vector<std::string> labels;
        for (const auto& entry : starter) labels.push_back(entry.label);
        auto vectors = gateway.embed(labels, cfg.embed_model_id);
        for (std::size_t i = 0; i < starter.size(); ++i) {
            result.codebook.insert(starter[i].label, starter[i].definition, starter[i].origin);
            index.insert(starter[i].label, vectors[i]);
        }
    }

    std::vector<Cluster> ordered = clusters;
    std::sort(ordered.begin(), ordered.end(),
              [](const Cluster& a, const Cluster& b) { return a.id < b.id; });

    for (const auto& cluster : ordered) {
        std::vector<std::string> texts;
        for (const auto& member_id : cluster.member_ids) {
            auto it = summaries.find(member_id);
            if (it == summaries.end()) {
                throw PreconditionError("cluster member " + member_id + " has no summary point");
            }
            texts.push_back(it->second.text);
        }
        auto nearest = nearest_codes_for_cluster(cluster, embeddings, index, cfg.knn_k);
        std::string prompt = build_induction_prompt(texts, nearest, cfg, templates);
        std::string response =
            gateway.chat(ChatRequest{cfg.chat_model_id, prompt, cfg.temperature});
        result.exchanges.emplace_back(cluster.id, prompt, response);

        int created = 0;
        try {
            InductionDecision decision = parse_induction_output(response);
            decision.cluster_id = cluster.id;
            if (!decision.no_new_codes) {
                for (const auto& code : decision.new_codes) {
                    if (!result.codebook.insert(code.label, code.definition,
                                                CodeOrigin::induced(cluster.id))) {
                        result.warnings.push_back("cluster " + std::to_string(cluster.id) +
                                                  " re-proposed existing code \"" + code.label +
                                                  "\"");
                        continue;
                    }
                    auto vec = gateway.embed({code.label}, cfg.embed_model_id);
                    index.insert(code.label, vec.front());
                    ++created;
                }
            }
            result.decisions.push_back(std::move(decision));
        } catch (const ParseError& e) {
            ++result.unparseable_clusters;
            result.warnings.push_back("cluster " + std::to_string(cluster.id) +
                                      " skipped: " + e.what());
        }
        result.codebook.log_cluster(cluster.id, created);
    }

    for (const auto& [label, vec] : index.entries()) {
        result.index_labels.push_back(label);
    }

    double bad_rate = static_cast<double>(result.unparseable_clusters) /
                      static_cast<double>(ordered.size());
    if (bad_rate > 0.20) {
        std::ostringstream msg;
        msg << "induction failed: " << result.unparseable_clusters << "/" << ordered.size()
            << " clusters unparseable (> 20%). Warnings:";
        for (const auto& w : result.warnings) msg << "\n  " << w;
        throw StageError(msg.str());
    }
    return result;
}

}  // namespace qcoder
