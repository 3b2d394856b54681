#include "qcoder/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "qcoder/errors.hpp"
#include "qcoder/evaluation.hpp"
#include "qcoder/geometry.hpp"
#include "qcoder/hash.hpp"
#include "qcoder/induction.hpp"
#include "qcoder/jsonl.hpp"
#include "qcoder/rng.hpp"
#include "qcoder/simulator.hpp"
#include "qcoder/summarize.hpp"
#include "qcoder/themes.hpp"

namespace qcoder {

namespace fs = std::filesystem;

const std::vector<Stage>& stage_order() {
    static const std::vector<Stage> order = {Stage::simulate, Stage::summarize, Stage::cluster,
                                             Stage::induce,   Stage::themes,    Stage::evaluate};
    return order;
}

std::string stage_name(Stage s) {
    switch (s) {
        case Stage::simulate: return "simulate";
        case Stage::summarize: return "summarize";
        case Stage::cluster: return "cluster";
        case Stage::induce: return "induce";
        case Stage::themes: return "themes";
        case Stage::evaluate: return "evaluate";
    }
    return "unknown";
}

Stage parse_stage(const std::string& name) {
    for (Stage s : stage_order()) {
        if (stage_name(s) == name) return s;
    }
    throw ConfigError("unknown stage: " + name);
}

namespace {

template <typename T>
T require_field(const json& j, const std::string& key, const T& fallback, bool has_default) {
    if (!j.contains(key)) {
        if (has_default) return fallback;
        throw ConfigError("config is missing required field \"" + key + "\"");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config field \"" + key + "\" has the wrong type");
    }
}

const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = {
        "data_type",        "data_collection_context",
        "research_question", "knn_k",
        "starter_code_count", "pca_variance_target",
        "reduced_dims",     "target_cluster_size",
        "theme_cluster_size", "chat_model_id",
        "embed_model_id",   "temperature",
        "seed",             "match_threshold",
        "endpoint_url",     "redundancy_example",
        "mock_embed_dims",  "workers"};
    return keys;
}

constexpr const char* kDefaultRedundancyExample =
    "Redundant codes: \"team communication\" and \"communicating within the team\". These two "
    "codes are redundant because they label the same underlying idea of teammates exchanging "
    "information, differing only in phrasing.";

}  // namespace

RunConfig validate_config(const std::string& config_path) {
    json j;
    try {
        j = json::parse(read_text_file(config_path));
    } catch (const json::exception& e) {
        throw ConfigError("config file " + config_path + " is not valid JSON: " + e.what());
    } catch (const StageError& e) {
        throw ConfigError(e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("config file must contain a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!known_config_keys().count(key)) {
            throw ConfigError("config contains unknown field \"" + key + "\"");
        }
    }

    RunConfig cfg;
    cfg.data_type = require_field<std::string>(j, "data_type", "", false);
    cfg.data_collection_context =
        require_field<std::string>(j, "data_collection_context", "", false);
    cfg.research_question = require_field<std::string>(j, "research_question", "", true);
    cfg.knn_k = require_field<int>(j, "knn_k", 5, true);
    cfg.starter_code_count = require_field<int>(j, "starter_code_count", 20, true);
    cfg.pca_variance_target = require_field<double>(j, "pca_variance_target", 0.90, true);
    cfg.reduced_dims = require_field<int>(j, "reduced_dims", 5, true);
    cfg.target_cluster_size = require_field<int>(j, "target_cluster_size", 10, true);
    cfg.theme_cluster_size = require_field<int>(j, "theme_cluster_size", 12, true);
    cfg.chat_model_id = require_field<std::string>(j, "chat_model_id", "default-chat", true);
    cfg.embed_model_id = require_field<std::string>(j, "embed_model_id", "default-embed", true);
    cfg.temperature = require_field<double>(j, "temperature", 0.0, true);
    cfg.seed = require_field<std::uint64_t>(j, "seed", 0, true);
    cfg.match_threshold = require_field<double>(j, "match_threshold", 0.75, true);
    cfg.endpoint_url = require_field<std::string>(j, "endpoint_url", "", true);
    cfg.redundancy_example =
        require_field<std::string>(j, "redundancy_example", kDefaultRedundancyExample, true);
    cfg.mock_embed_dims = require_field<int>(j, "mock_embed_dims", 256, true);
    cfg.workers = require_field<int>(j, "workers", 4, true);

    if (cfg.data_type.empty()) throw ConfigError("config field \"data_type\" must be non-empty");
    if (cfg.data_collection_context.empty()) {
        throw ConfigError("config field \"data_collection_context\" must be non-empty");
    }
    if (!(cfg.pca_variance_target > 0.0 && cfg.pca_variance_target <= 1.0)) {
        throw ConfigError("config field \"pca_variance_target\" must be in (0, 1]");
    }
    if (cfg.knn_k < 1) throw ConfigError("config field \"knn_k\" must be >= 1");
    if (cfg.reduced_dims < 2) throw ConfigError("config field \"reduced_dims\" must be >= 2");
    if (cfg.temperature < 0.0) throw ConfigError("config field \"temperature\" must be >= 0");
    if (cfg.starter_code_count < 1) {
        throw ConfigError("config field \"starter_code_count\" must be >= 1");
    }
    if (cfg.target_cluster_size < 1) {
        throw ConfigError("config field \"target_cluster_size\" must be >= 1");
    }
    if (cfg.theme_cluster_size < 1) {
        throw ConfigError("config field \"theme_cluster_size\" must be >= 1");
    }
    if (!(cfg.match_threshold >= -1.0 && cfg.match_threshold <= 1.0)) {
        throw ConfigError("config field \"match_threshold\" must be in [-1, 1]");
    }
    if (cfg.mock_embed_dims < 8) {
        throw ConfigError("config field \"mock_embed_dims\" must be >= 8");
    }
    if (cfg.workers < 1) throw ConfigError("config field \"workers\" must be >= 1");
    return cfg;
}

json config_to_json(const RunConfig& cfg) {
    return json{{"data_type", cfg.data_type},
                {"data_collection_context", cfg.data_collection_context},
                {"research_question", cfg.research_question},
                {"knn_k", cfg.knn_k},
                {"starter_code_count", cfg.starter_code_count},
                {"pca_variance_target", cfg.pca_variance_target},
                {"reduced_dims", cfg.reduced_dims},
                {"target_cluster_size", cfg.target_cluster_size},
                {"theme_cluster_size", cfg.theme_cluster_size},
                {"chat_model_id", cfg.chat_model_id},
                {"embed_model_id", cfg.embed_model_id},
                {"temperature", cfg.temperature},
                {"seed", cfg.seed},
                {"match_threshold", cfg.match_threshold},
                {"endpoint_url", cfg.endpoint_url},
                {"redundancy_example", cfg.redundancy_example},
                {"mock_embed_dims", cfg.mock_embed_dims},
                {"workers", cfg.workers}};
}

std::string config_hash(const RunConfig& cfg) { return sha256_hex(config_to_json(cfg).dump()); }

const std::vector<std::string>& stage_artifacts(Stage s) {
    static const std::map<Stage, std::vector<std::string>> artifacts = {
        {Stage::simulate,
         {"corpus.jsonl", "truth.json", "plan.jsonl", "rejections.json", "audit/simulate.jsonl"}},
        {Stage::summarize,
         {"summary_points.jsonl", "summary_stats.json", "points_histogram.csv",
          "audit/summarize.jsonl"}},
        {Stage::cluster,
         {"clusters.jsonl", "reduced.jsonl", "reduced_meta.json", "embeddings.jsonl",
          "cluster_assignments.csv"}},
        {Stage::induce,
         {"codebook.jsonl", "codebook_meta.json", "decisions.jsonl", "creation_curve.csv",
          "audit/induce.jsonl"}},
        {Stage::themes,
         {"themes.jsonl", "theme_analysis_log.json", "theme_code.csv", "audit/themes.jsonl"}},
        {Stage::evaluate,
         {"match_table.csv", "match_table.md", "coverage.json", "creation_rate.csv"}},
    };
    return artifacts.at(s);
}

std::string combined_artifact_hash(const std::string& out_dir,
                                   const std::vector<std::string>& files) {
    std::vector<std::string> sorted = files;
    std::sort(sorted.begin(), sorted.end());
    std::ostringstream combined;
    for (const auto& f : sorted) {
        combined << f << ":" << sha256_file_hex((fs::path(out_dir) / f).string()) << "\n";
    }
    return sha256_hex(combined.str());
}

namespace {

struct StageContext {
    const RunOptions& options;
    const TemplateSet& templates;
    Gateway& gateway;
    std::string out_dir;
    std::vector<std::string> warnings;
};

std::string artifact_path(const StageContext& ctx, const std::string& name) {
    return (fs::path(ctx.out_dir) / name).string();
}

void require_artifact(const StageContext& ctx, const std::string& name, Stage consumer) {
    if (!fs::exists(artifact_path(ctx, name))) {
        throw PreconditionError("stage " + stage_name(consumer) + " requires artifact " + name +
                                "; run the upstream stage first");
    }
}

void write_audit(const StageContext& ctx, const std::string& stage,
                 const std::vector<std::tuple<std::string, std::string, std::string>>& exchanges) {
    std::vector<json> lines;
    lines.reserve(exchanges.size());
    for (const auto& [key, prompt, response] : exchanges) {
        lines.push_back(json{{"key", key}, {"prompt", prompt}, {"response", response}});
    }
    write_jsonl(artifact_path(ctx, "audit/" + stage + ".jsonl"), lines);
}

// --- simulate -------------------------------------------------------------

void run_simulate(StageContext& ctx) {
    if (ctx.options.spec_path.empty()) {
        throw PreconditionError("simulate requires --spec <study-spec.json>");
    }
    StudySpec spec;
    try {
        spec = StudySpec::from_json(json::parse(read_text_file(ctx.options.spec_path)));
    } catch (const json::exception& e) {
        throw ConfigError("study spec " + ctx.options.spec_path + " is not valid JSON: " +
                          e.what());
    }

    const RunConfig& cfg = ctx.options.cfg;
    std::vector<std::tuple<std::string, std::string, std::string>> audit;

    CriteriaSet criteria = generate_criteria(spec, cfg, ctx.templates, ctx.gateway, &ctx.warnings);
    std::uint64_t seed = derive_seed(cfg.seed, "simulate");
    GenerationPlan plan = sample_plan(spec, criteria, seed);
    SynthesisResult synthesis = synthesize_documents(plan, cfg, ctx.templates, ctx.gateway);
    audit.insert(audit.end(), synthesis.exchanges.begin(), synthesis.exchanges.end());

    std::vector<json> corpus_lines;
    for (const auto& doc : synthesis.documents) corpus_lines.push_back(to_json(doc));
    write_jsonl(artifact_path(ctx, "corpus.jsonl"), corpus_lines);

    write_text_file(artifact_path(ctx, "truth.json"), criteria.to_json().dump(2) + "\n");

    std::vector<json> plan_lines;
    for (const auto& row : plan.rows) plan_lines.push_back(to_json(row));
    write_jsonl(artifact_path(ctx, "plan.jsonl"), plan_lines);

    json rejections{{"planned", synthesis.report.planned},
                    {"accepted", synthesis.report.accepted},
                    {"rejected", synthesis.report.rejected},
                    {"duplicates", synthesis.report.duplicates},
                    {"sample_rejections", synthesis.report.sample_rejections}};
    write_text_file(artifact_path(ctx, "rejections.json"), rejections.dump(2) + "\n");
    write_audit(ctx, "simulate", audit);
}

// --- summarize ------------------------------------------------------------

void run_summarize(StageContext& ctx) {
    require_artifact(ctx, "corpus.jsonl", Stage::summarize);
    std::vector<Document> docs;
    for (const auto& line : read_jsonl(artifact_path(ctx, "corpus.jsonl"))) {
        docs.push_back(document_from_json(line));
    }

    SummarizeResult result =
        summarize_corpus(docs, ctx.options.cfg, ctx.templates, ctx.gateway);

    std::vector<json> point_lines;
    for (const auto& p : result.points) point_lines.push_back(to_json(p));
    write_jsonl(artifact_path(ctx, "summary_points.jsonl"), point_lines);

    json histogram = json::object();
    for (const auto& [points, count] : result.stats.histogram) {
        histogram[std::to_string(points)] = count;
    }
    json stats{{"documents", result.stats.documents},
               {"parsed_documents", result.stats.parsed_documents},
               {"failed_documents", result.stats.failed_documents},
               {"mean_points", result.stats.mean_points},
               {"median_points", result.stats.median_points},
               {"histogram", histogram},
               {"failures", result.stats.failures}};
    write_text_file(artifact_path(ctx, "summary_stats.json"), stats.dump(2) + "\n");

    std::ostringstream csv;
    csv << "points_per_response,documents\n";
    for (const auto& [points, count] : result.stats.histogram) {
        csv << points << "," << count << "\n";
    }
    write_text_file(artifact_path(ctx, "points_histogram.csv"), csv.str());

    for (const auto& failed : result.stats.failures) {
        ctx.warnings.push_back("document " + failed + " was unparseable and excluded");
    }
    write_audit(ctx, "summarize", result.exchanges);
}

// --- cluster ----------------------------------------------------------------

void run_cluster(StageContext& ctx) {
    require_artifact(ctx, "summary_points.jsonl", Stage::cluster);
    std::vector<SummaryPoint> points;
    for (const auto& line : read_jsonl(artifact_path(ctx, "summary_points.jsonl"))) {
        points.push_back(summary_point_from_json(line));
    }
    if (points.empty()) {
        throw StageError("no summary points to cluster");
    }
    const RunConfig& cfg = ctx.options.cfg;

    std::vector<std::string> texts;
    for (const auto& p : points) texts.push_back(p.text);
    auto vectors = ctx.gateway.embed(texts, cfg.embed_model_id);

    std::vector<json> embedding_lines;
    for (std::size_t i = 0; i < points.size(); ++i) {
        json line = to_json(vectors[i]);
        line["id"] = points[i].id;
        embedding_lines.push_back(std::move(line));
    }
    write_jsonl(artifact_path(ctx, "embeddings.jsonl"), embedding_lines);

    // Geometry runs over unit vectors so distances reflect direction only.
    RowMatrix matrix(points.size(), static_cast<std::size_t>(vectors.front().dims));
    for (std::size_t r = 0; r < points.size(); ++r) {
        auto unit = normalize(vectors[r]);
        for (std::size_t c = 0; c < matrix.cols; ++c) matrix.at(r, c) = unit.values[c];
    }

    PcaResult pca = pca_fit_transform(matrix, cfg.pca_variance_target);
    std::uint64_t seed = derive_seed(cfg.seed, "cluster");
    NeighborEmbedResult reduced = neighbor_embed(pca.projected, cfg.reduced_dims, seed);
    if (reduced.used_fallback) {
        ctx.warnings.push_back("too few rows for neighbor embedding; used PCA truncation");
    }

    std::vector<std::string> row_ids;
    for (const auto& p : points) row_ids.push_back(p.id);
    auto clusters = agglomerative_cluster(reduced.coords, row_ids, cfg.target_cluster_size);

    std::vector<json> reduced_lines;
    for (std::size_t r = 0; r < reduced.coords.rows; ++r) {
        std::vector<double> coords(reduced.coords.data.begin() +
                                       static_cast<long>(r * reduced.coords.cols),
                                   reduced.coords.data.begin() +
                                       static_cast<long>((r + 1) * reduced.coords.cols));
        reduced_lines.push_back(json{{"id", row_ids[r]}, {"coords", coords}});
    }
    write_jsonl(artifact_path(ctx, "reduced.jsonl"), reduced_lines);

    json meta{{"pca_dims", pca.dims},
              {"final_dims", cfg.reduced_dims},
              {"explained_variance", pca.explained},
              {"seed", seed},
              {"n_neighbors", reduced.n_neighbors},
              {"epochs", reduced.epochs},
              {"linkage", "average"},
              {"used_fallback", reduced.used_fallback}};
    write_text_file(artifact_path(ctx, "reduced_meta.json"), meta.dump(2) + "\n");

    std::vector<json> cluster_lines;
    for (const auto& c : clusters) cluster_lines.push_back(to_json(c));
    write_jsonl(artifact_path(ctx, "clusters.jsonl"), cluster_lines);

    std::ostringstream csv;
    csv << "cluster_id,summary_point_id\n";
    for (const auto& c : clusters) {
        for (const auto& m : c.member_ids) csv << c.id << "," << m << "\n";
    }
    write_text_file(artifact_path(ctx, "cluster_assignments.csv"), csv.str());
}

// --- induce -----------------------------------------------------------------

void run_induce(StageContext& ctx) {
    require_artifact(ctx, "clusters.jsonl", Stage::induce);
    require_artifact(ctx, "summary_points.jsonl", Stage::induce);
    require_artifact(ctx, "embeddings.jsonl", Stage::induce);
    const RunConfig& cfg = ctx.options.cfg;

    std::vector<Cluster> clusters;
    for (const auto& line : read_jsonl(artifact_path(ctx, "clusters.jsonl"))) {
        clusters.push_back(cluster_from_json(line));
    }
    std::map<std::string, SummaryPoint> summaries;
    for (const auto& line : read_jsonl(artifact_path(ctx, "summary_points.jsonl"))) {
        SummaryPoint p = summary_point_from_json(line);
        summaries[p.id] = p;
    }
    std::map<std::string, EmbeddingVector> embeddings;
    for (const auto& line : read_jsonl(artifact_path(ctx, "embeddings.jsonl"))) {
        embeddings[line.at("id").get<std::string>()] = embedding_from_json(line);
    }

    auto starter = generate_starter_codes(cfg, ctx.templates, ctx.gateway, &ctx.warnings);
    InductionResult result = induce_codebook(clusters, summaries, embeddings, starter, cfg,
                                             ctx.templates, ctx.gateway);
    for (const auto& w : result.warnings) ctx.warnings.push_back(w);

    std::vector<json> codebook_lines;
    for (const auto& e : result.codebook.entries()) codebook_lines.push_back(to_json(e));
    write_jsonl(artifact_path(ctx, "codebook.jsonl"), codebook_lines);

    json log = json::array();
    for (const auto& [ordinal, created] : result.codebook.creation_log()) {
        log.push_back(json{{"cluster_ordinal", ordinal}, {"codes_created_count", created}});
    }
    json meta{{"creation_log", log},
              {"starter_count", result.codebook.starter_count()},
              {"unparseable_clusters", result.unparseable_clusters}};
    write_text_file(artifact_path(ctx, "codebook_meta.json"), meta.dump(2) + "\n");

    std::vector<json> decision_lines;
    for (const auto& d : result.decisions) {
        json codes = json::array();
        for (const auto& c : d.new_codes) {
            codes.push_back(json{{"label", c.label}, {"definition", c.definition}});
        }
        decision_lines.push_back(json{{"cluster_id", d.cluster_id},
                                      {"outcome", d.no_new_codes ? "no_new_codes" : "new_codes"},
                                      {"codes", codes},
                                      {"analysis_text", d.analysis_text}});
    }
    write_jsonl(artifact_path(ctx, "decisions.jsonl"), decision_lines);

    std::ostringstream csv;
    csv << "cluster_ordinal,cumulative_codes\n";
    int cumulative = static_cast<int>(result.codebook.starter_count());
    for (const auto& [ordinal, created] : result.codebook.creation_log()) {
        cumulative += created;
        csv << ordinal << "," << cumulative << "\n";
    }
    write_text_file(artifact_path(ctx, "creation_curve.csv"), csv.str());

    std::vector<std::tuple<std::string, std::string, std::string>> audit;
    for (const auto& [cluster_id, prompt, response] : result.exchanges) {
        audit.emplace_back("cluster-" + std::to_string(cluster_id), prompt, response);
    }
    write_audit(ctx, "induce", audit);
}

// --- themes -----------------------------------------------------------------

void run_themes(StageContext& ctx) {
    require_artifact(ctx, "codebook.jsonl", Stage::themes);
    require_artifact(ctx, "codebook_meta.json", Stage::themes);
    const RunConfig& cfg = ctx.options.cfg;

    json meta = json::parse(read_text_file(artifact_path(ctx, "codebook_meta.json")));
    json cb{{"entries", json::array()}, {"creation_log", meta.at("creation_log")}};
    for (const auto& line : read_jsonl(artifact_path(ctx, "codebook.jsonl"))) {
        cb["entries"].push_back(line);
    }
    Codebook codebook = Codebook::from_json(cb);

    std::uint64_t seed = derive_seed(cfg.seed, "themes");
    ConsolidationResult result = consolidate(codebook, cfg, ctx.templates, ctx.gateway, seed);
    for (const auto& w : result.warnings) ctx.warnings.push_back(w);

    std::vector<json> theme_lines;
    for (std::size_t i = 0; i < result.themes.size(); ++i) {
        json line = to_json(result.themes[i]);
        line["source_cluster"] = result.theme_source_cluster[i];
        theme_lines.push_back(std::move(line));
    }
    write_jsonl(artifact_path(ctx, "themes.jsonl"), theme_lines);

    json analyses = json::array();
    for (const auto& a : result.analyses) {
        json themes_json = json::array();
        for (const auto& t : a.suggested_themes) themes_json.push_back(to_json(t));
        analyses.push_back(
            json{{"initial_observations", a.initial_observations},
                 {"suggested_themes", themes_json},
                 {"reflection",
                  {{"broad_or_narrow_themes", a.reflection.broad_or_narrow_themes},
                   {"contradictions_or_unexpected_patterns",
                    a.reflection.contradictions_or_unexpected_patterns},
                   {"potential_subthemes", a.reflection.potential_subthemes},
                   {"unclassified_codes", a.reflection.unclassified_codes}}}});
    }
    json log{{"analyses", analyses},
             {"unclassified", result.unclassified},
             {"warnings", result.warnings},
             {"failed_clusters", result.failed_clusters}};
    write_text_file(artifact_path(ctx, "theme_analysis_log.json"), log.dump(2) + "\n");

    std::ostringstream csv;
    csv << "theme,code\n";
    for (const auto& t : result.themes) {
        for (const auto& c : t.codes) {
            csv << "\"" << t.name << "\"," << "\"" << c << "\"\n";
        }
    }
    write_text_file(artifact_path(ctx, "theme_code.csv"), csv.str());

    std::vector<std::tuple<std::string, std::string, std::string>> audit;
    for (const auto& [ordinal, prompt, response] : result.exchanges) {
        audit.emplace_back("code-cluster-" + std::to_string(ordinal), prompt, response);
    }
    write_audit(ctx, "themes", audit);
}

// --- evaluate ---------------------------------------------------------------

void run_evaluate(StageContext& ctx) {
    require_artifact(ctx, "themes.jsonl", Stage::evaluate);
    require_artifact(ctx, "truth.json", Stage::evaluate);
    require_artifact(ctx, "codebook_meta.json", Stage::evaluate);
    require_artifact(ctx, "corpus.jsonl", Stage::evaluate);
    const RunConfig& cfg = ctx.options.cfg;

    std::vector<Theme> themes;
    for (const auto& line : read_jsonl(artifact_path(ctx, "themes.jsonl"))) {
        themes.push_back(theme_from_json(line));
    }
    CriteriaSet truth =
        CriteriaSet::from_json(json::parse(read_text_file(artifact_path(ctx, "truth.json"))));
    std::vector<std::string> subthemes;
    for (const auto& tree : truth.themes) {
        subthemes.insert(subthemes.end(), tree.subthemes.begin(), tree.subthemes.end());
    }
    if (subthemes.empty()) {
        throw StageError("truth.json contains no sub-themes to evaluate against");
    }

    auto rows = match_themes(themes, subthemes, cfg, ctx.gateway);
    auto coverage = coverage_report(rows);

    std::size_t responses = read_jsonl(artifact_path(ctx, "corpus.jsonl")).size();
    json meta = json::parse(read_text_file(artifact_path(ctx, "codebook_meta.json")));
    Codebook codebook;
    {
        json cb{{"entries", json::array()}, {"creation_log", meta.at("creation_log")}};
        for (const auto& line : read_jsonl(artifact_path(ctx, "codebook.jsonl"))) {
            cb["entries"].push_back(line);
        }
        codebook = Codebook::from_json(cb);
    }
    auto rate = creation_rate_report(codebook, responses, themes.size());

    write_text_file(artifact_path(ctx, "match_table.csv"), match_table_csv(rows));
    write_text_file(artifact_path(ctx, "match_table.md"), match_table_markdown(rows));
    write_text_file(artifact_path(ctx, "creation_rate.csv"), creation_rate_csv(rate));

    json worst = json::array();
    for (const auto& r : coverage.worst_rows) {
        json top = json::array();
        for (const auto& [name, sim] : r.top_matches) {
            top.push_back(json{{"theme", name}, {"similarity", sim}});
        }
        worst.push_back(json{{"sub_theme", r.sub_theme}, {"top_matches", top}});
    }
    json cov{{"sub_themes", rows.size()},
             {"threshold", cfg.match_threshold},
             {"pct_matched", coverage.pct_matched},
             {"pct_unmatched", coverage.pct_unmatched},
             {"responses_per_theme", rate.responses_per_theme},
             {"worst_rows", worst}};
    write_text_file(artifact_path(ctx, "coverage.json"), cov.dump(2) + "\n");
}

void execute_stage(StageContext& ctx, Stage stage) {
    switch (stage) {
        case Stage::simulate: run_simulate(ctx); return;
        case Stage::summarize: run_summarize(ctx); return;
        case Stage::cluster: run_cluster(ctx); return;
        case Stage::induce: run_induce(ctx); return;
        case Stage::themes: run_themes(ctx); return;
        case Stage::evaluate: run_evaluate(ctx); return;
    }
}

std::vector<std::string> stage_input_files(Stage stage) {
    switch (stage) {
        case Stage::simulate: return {};
        case Stage::summarize: return {"corpus.jsonl"};
        case Stage::cluster: return {"summary_points.jsonl"};
        case Stage::induce: return {"clusters.jsonl", "summary_points.jsonl", "embeddings.jsonl"};
        case Stage::themes: return {"codebook.jsonl", "codebook_meta.json"};
        case Stage::evaluate:
            return {"themes.jsonl", "truth.json", "codebook.jsonl", "codebook_meta.json",
                    "corpus.jsonl"};
    }
    return {};
}

std::vector<std::string> compute_input_hashes(const StageContext& ctx, Stage stage,
                                              const std::string& cfg_hash,
                                              const std::string& templates_hash) {
    std::vector<std::string> hashes;
    hashes.push_back("config:" + cfg_hash);
    hashes.push_back("templates:" + templates_hash);
    hashes.push_back("gateway:" + ctx.options.gateway_id);
    if (stage == Stage::simulate) {
        if (ctx.options.spec_path.empty()) {
            throw PreconditionError("simulate requires --spec <study-spec.json>");
        }
        hashes.push_back("spec:" + sha256_file_hex(ctx.options.spec_path));
    }
    for (const auto& file : stage_input_files(stage)) {
        std::string path = artifact_path(ctx, file);
        if (!fs::exists(path)) {
            throw PreconditionError("stage " + stage_name(stage) + " requires artifact " + file +
                                    "; run the upstream stage first");
        }
        hashes.push_back(file + ":" + sha256_file_hex(path));
    }
    return hashes;
}

}  // namespace

RunOutcome run(const RunOptions& options, Gateway& gateway) {
    fs::create_directories(options.out_dir);
    TemplateSet templates = TemplateSet::load(options.templates_dir);
    std::string templates_hash =
        sha256_file_hex((fs::path(options.templates_dir) / "manifest.json").string());
    std::string cfg_hash = config_hash(options.cfg);

    write_text_file((fs::path(options.out_dir) / "effective_config.json").string(),
                    config_to_json(options.cfg).dump(2) + "\n");

    std::string manifest_path = (fs::path(options.out_dir) / "manifest.json").string();
    RunManifest manifest;
    if (fs::exists(manifest_path)) {
        manifest = manifest_from_json(json::parse(read_text_file(manifest_path)));
        if (manifest.config_hash != cfg_hash) {
            manifest = RunManifest{};  // config changed; prior stage states are stale
        }
    }
    manifest.config_hash = cfg_hash;

    RunOutcome outcome;
    bool in_range = false;
    for (Stage stage : stage_order()) {
        if (stage == options.from) in_range = true;
        if (!in_range) continue;

        StageContext ctx{options, templates, gateway, options.out_dir, {}};
        StageResult result;
        result.stage = stage;
        result.input_hashes = compute_input_hashes(ctx, stage, cfg_hash, templates_hash);

        bool can_skip = false;
        auto it = manifest.stage_statuses.find(stage_name(stage));
        if (it != manifest.stage_statuses.end() && it->second.status == StageStatus::done &&
            it->second.input_hashes == result.input_hashes) {
            bool artifacts_present = true;
            for (const auto& f : stage_artifacts(stage)) {
                if (!fs::exists(artifact_path(ctx, f))) {
                    artifacts_present = false;
                    break;
                }
            }
            if (artifacts_present &&
                combined_artifact_hash(options.out_dir, stage_artifacts(stage)) ==
                    it->second.content_hash) {
                can_skip = true;
            }
        }

        if (can_skip) {
            result.skipped = true;
            result.output_hash = it->second.content_hash;
            result.output_path = it->second.artifact_path;
            std::cout << "stage " << stage_name(stage) << ": skipped (inputs unchanged)\n";
        } else {
            auto start = std::chrono::steady_clock::now();
            execute_stage(ctx, stage);
            auto end = std::chrono::steady_clock::now();
            result.duration_seconds = std::chrono::duration<double>(end - start).count();
            result.warnings = ctx.warnings;
            result.output_path = stage_artifacts(stage).front();
            result.output_hash = combined_artifact_hash(options.out_dir, stage_artifacts(stage));

            StageState state;
            state.status = StageStatus::done;
            state.artifact_path = result.output_path;
            state.content_hash = result.output_hash;
            state.input_hashes = result.input_hashes;
            manifest.stage_statuses[stage_name(stage)] = state;
            write_text_file(manifest_path, to_json(manifest).dump(2) + "\n");
            std::cout << "stage " << stage_name(stage) << ": done ("
                      << result.output_hash.substr(0, 12) << ", "
                      << result.duration_seconds << "s";
            if (!result.warnings.empty()) {
                std::cout << ", " << result.warnings.size() << " warnings";
            }
            std::cout << ")\n";
        }
        outcome.stages.push_back(std::move(result));

        if (stage == options.to) break;
    }
    outcome.manifest = manifest;
    return outcome;
}

void evaluate_files(const std::string& themes_path, const std::string& truth_path,
                    const RunConfig& cfg, const std::string& out_dir, Gateway& gateway) {
    std::vector<Theme> themes;
    for (const auto& line : read_jsonl(themes_path)) {
        themes.push_back(theme_from_json(line));
    }
    CriteriaSet truth = CriteriaSet::from_json(json::parse(read_text_file(truth_path)));
    std::vector<std::string> subthemes;
    for (const auto& tree : truth.themes) {
        subthemes.insert(subthemes.end(), tree.subthemes.begin(), tree.subthemes.end());
    }
    auto rows = match_themes(themes, subthemes, cfg, gateway);
    auto coverage = coverage_report(rows);

    fs::create_directories(out_dir);
    write_text_file((fs::path(out_dir) / "match_table.csv").string(), match_table_csv(rows));
    write_text_file((fs::path(out_dir) / "match_table.md").string(), match_table_markdown(rows));
    json cov{{"sub_themes", rows.size()},
             {"threshold", cfg.match_threshold},
             {"pct_matched", coverage.pct_matched},
             {"pct_unmatched", coverage.pct_unmatched}};
    write_text_file((fs::path(out_dir) / "coverage.json").string(), cov.dump(2) + "\n");
    std::cout << "matched " << coverage.pct_matched << "% of " << rows.size()
              << " sub-themes at threshold " << cfg.match_threshold << "\n";
}

}  // namespace qcoder
