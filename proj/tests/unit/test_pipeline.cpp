#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "qcoder/errors.hpp"
#include "qcoder/pipeline.hpp"
#include "qcoder/scripted_gateway.hpp"

using namespace qcoder;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("qcoder_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write_config(const fs::path& dir, const json& extra = json::object()) {
    json cfg{{"data_type", "written response"},
             {"data_collection_context",
              "a study of worker perspectives on returning to the office"},
             {"research_question",
              "What are worker perspectives on returning to the office after the pandemic?"},
             {"chat_model_id", "chat-x"},
             {"embed_model_id", "embed-x"},
             {"seed", 7},
             {"mock_embed_dims", 64},
             {"workers", 2}};
    for (const auto& [k, v] : extra.items()) cfg[k] = v;
    fs::path path = dir / "config.json";
    std::ofstream(path) << cfg.dump(2);
    return path.string();
}

std::string write_study_spec(const fs::path& dir) {
    json spec{{"data_type", "written response"},
              {"data_collection_context",
               "a study of worker perspectives on returning to the office"},
              {"theme_count", 2},
              {"subthemes_per_theme", 1},
              {"samples_per_subtheme", 3}};
    fs::path path = dir / "study.json";
    std::ofstream(path) << spec.dump(2);
    return path.string();
}

}  // namespace

TEST_CASE("validate_config applies the documented defaults") {
    auto dir = temp_dir("cfg_defaults");
    RunConfig cfg = validate_config(write_config(dir));
    CHECK(cfg.knn_k == 5);
    CHECK(cfg.starter_code_count == 20);
    CHECK(cfg.pca_variance_target == doctest::Approx(0.90));
    CHECK(cfg.reduced_dims == 5);
    CHECK(cfg.target_cluster_size == 10);
    CHECK(cfg.theme_cluster_size == 12);
    CHECK(cfg.temperature == doctest::Approx(0.0));
    CHECK(cfg.match_threshold == doctest::Approx(0.75));
    CHECK_FALSE(cfg.redundancy_example.empty());
    fs::remove_all(dir);
}

TEST_CASE("config invariant violations name the offending field") {
    auto dir = temp_dir("cfg_invalid");
    auto expect_error_with = [&](const json& extra, const std::string& needle) {
        std::string path = write_config(dir, extra);
        try {
            validate_config(path);
            FAIL("expected ConfigError for ", needle);
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_error_with(json{{"knn_k", 0}}, "knn_k");
    expect_error_with(json{{"pca_variance_target", 1.5}}, "pca_variance_target");
    expect_error_with(json{{"reduced_dims", 1}}, "reduced_dims");
    expect_error_with(json{{"temperature", -0.5}}, "temperature");
    expect_error_with(json{{"mystery_knob", 3}}, "mystery_knob");
    fs::remove_all(dir);
}

TEST_CASE("missing required fields are config errors") {
    auto dir = temp_dir("cfg_missing");
    fs::path path = dir / "config.json";
    std::ofstream(path) << R"({"data_type": "written response"})";
    CHECK_THROWS_AS(validate_config(path.string()), ConfigError);
    std::ofstream(path) << "not json";
    CHECK_THROWS_AS(validate_config(path.string()), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("stage names round-trip and the order is the fixed DAG") {
    const auto& order = stage_order();
    REQUIRE(order.size() == 6);
    CHECK(stage_name(order.front()) == "simulate");
    CHECK(stage_name(order.back()) == "evaluate");
    for (Stage s : order) CHECK(parse_stage(stage_name(s)) == s);
    CHECK_THROWS_AS(parse_stage("acquire"), ConfigError);
}

TEST_CASE("starting from induce without upstream artifacts is a precondition error") {
    auto dir = temp_dir("pipeline_missing_upstream");
    RunOptions options;
    options.cfg = validate_config(write_config(dir));
    options.out_dir = (dir / "out").string();
    options.templates_dir = "templates";
    options.from = Stage::induce;
    options.to = Stage::induce;
    options.gateway_id = "scripted";
    ScriptedGateway gw(options.cfg.mock_embed_dims);
    CHECK_THROWS_AS(run(options, gw), PreconditionError);
    fs::remove_all(dir);
}

TEST_CASE("scripted end-to-end run completes, resumes, and reruns identically") {
    auto dir = temp_dir("pipeline_e2e");
    RunOptions options;
    options.cfg = validate_config(write_config(dir));
    options.cfg.target_cluster_size = 5;
    options.cfg.starter_code_count = 8;
    options.out_dir = (dir / "out").string();
    options.templates_dir = "templates";
    options.spec_path = write_study_spec(dir);
    options.gateway_id = "scripted";
    ScriptedGateway gw(options.cfg.mock_embed_dims);

    auto first = run(options, gw);
    REQUIRE(first.stages.size() == 6);
    for (const auto& s : first.stages) CHECK_FALSE(s.skipped);
    for (Stage s : stage_order()) {
        CHECK(first.manifest.stage_statuses.at(stage_name(s)).status == StageStatus::done);
    }

    // Rerun in place: every stage skips.
    ScriptedGateway gw2(options.cfg.mock_embed_dims);
    auto second = run(options, gw2);
    for (const auto& s : second.stages) CHECK(s.skipped);

    // Fresh output directory: byte-identical artifact hashes at every stage.
    RunOptions fresh = options;
    fresh.out_dir = (dir / "out2").string();
    ScriptedGateway gw3(options.cfg.mock_embed_dims);
    auto third = run(fresh, gw3);
    REQUIRE(third.stages.size() == first.stages.size());
    for (std::size_t i = 0; i < third.stages.size(); ++i) {
        CHECK(third.stages[i].output_hash == first.stages[i].output_hash);
    }

    // Changing the seed invalidates downstream stages on resume.
    RunOptions reseeded = options;
    reseeded.cfg.seed = 8;
    ScriptedGateway gw4(options.cfg.mock_embed_dims);
    auto fourth = run(reseeded, gw4);
    CHECK_FALSE(fourth.stages.front().skipped);

    fs::remove_all(dir);
}

TEST_CASE("mock replay mode performs no network activity") {
    // Record a scripted run, then replay it with the mock gateway while
    // watching the injected transport counter: the only network code in the
    // binary routes through make_http_transport, so the counter stays flat.
    auto dir = temp_dir("pipeline_no_network");
    RunOptions options;
    options.cfg = validate_config(write_config(dir));
    options.cfg.starter_code_count = 6;
    options.out_dir = (dir / "record").string();
    options.templates_dir = "templates";
    options.spec_path = write_study_spec(dir);
    options.gateway_id = "scripted";

    std::string transcript_path = (dir / "transcript.jsonl").string();
    {
        RecordingGateway recorder(
            std::make_shared<ScriptedGateway>(options.cfg.mock_embed_dims), transcript_path);
        run(options, recorder);
        recorder.flush();
    }

    std::uint64_t before = http_transport_call_count();
    RunOptions replay = options;
    replay.out_dir = (dir / "replay").string();
    replay.gateway_id = "mock";
    MockGateway gw(Transcript::load(transcript_path), options.cfg.mock_embed_dims);
    auto outcome = run(replay, gw);
    CHECK(http_transport_call_count() == before);

    // Replay reproduces the recorded run's artifacts exactly.
    for (Stage s : stage_order()) {
        CHECK(combined_artifact_hash(replay.out_dir, stage_artifacts(s)) ==
              combined_artifact_hash(options.out_dir, stage_artifacts(s)));
    }
    fs::remove_all(dir);
}

TEST_CASE("replaying with an incomplete transcript is a gateway error") {
    auto dir = temp_dir("pipeline_replay_miss");
    RunOptions options;
    options.cfg = validate_config(write_config(dir));
    options.out_dir = (dir / "out").string();
    options.templates_dir = "templates";
    options.spec_path = write_study_spec(dir);
    options.gateway_id = "mock";
    MockGateway gw(Transcript{}, options.cfg.mock_embed_dims);
    CHECK_THROWS_AS(run(options, gw), GatewayError);
    fs::remove_all(dir);
}

TEST_CASE("imported documents get content-addressed ids") {
    Document a = make_imported_document("  The same response text. ");
    Document b = make_imported_document("The same response text.");
    Document c = make_imported_document("A different response.");
    CHECK(a.id == b.id);  // identical after trimming -> identical id
    CHECK(a.id != c.id);
    CHECK(a.source == DocumentSource::imported);
    CHECK_FALSE(a.criteria.has_value());
    CHECK_THROWS_AS(make_imported_document("   "), ParseError);
}

TEST_CASE("stage range is honored") {
    auto dir = temp_dir("pipeline_range");
    RunOptions options;
    options.cfg = validate_config(write_config(dir));
    options.cfg.starter_code_count = 6;
    options.out_dir = (dir / "out").string();
    options.templates_dir = "templates";
    options.spec_path = write_study_spec(dir);
    options.from = Stage::simulate;
    options.to = Stage::summarize;
    options.gateway_id = "scripted";
    ScriptedGateway gw(options.cfg.mock_embed_dims);
    auto outcome = run(options, gw);
    CHECK(outcome.stages.size() == 2);
    CHECK(fs::exists(fs::path(options.out_dir) / "summary_points.jsonl"));
    CHECK_FALSE(fs::exists(fs::path(options.out_dir) / "clusters.jsonl"));
    fs::remove_all(dir);
}
