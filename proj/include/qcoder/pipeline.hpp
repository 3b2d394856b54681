#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qcoder/domain.hpp"
#include "qcoder/gateway.hpp"
#include "qcoder/templates.hpp"

namespace qcoder {

enum class Stage { simulate, summarize, cluster, induce, themes, evaluate };

const std::vector<Stage>& stage_order();
std::string stage_name(Stage s);
Stage parse_stage(const std::string& name);

// Loads, validates, and applies defaults. Violations raise ConfigError
// naming the offending field; unknown keys are rejected.
RunConfig validate_config(const std::string& config_path);

json config_to_json(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

struct StageResult {
    Stage stage = Stage::simulate;
    std::vector<std::string> input_hashes;
    std::string output_path;   // the stage's primary artifact
    std::string output_hash;   // combined hash over all stage artifacts
    double duration_seconds = 0.0;
    std::vector<std::string> warnings;
    bool skipped = false;
};

struct RunOptions {
    RunConfig cfg;
    std::string out_dir;
    std::string templates_dir;
    std::string spec_path;      // StudySpec file; required when simulate runs
    Stage from = Stage::simulate;
    Stage to = Stage::evaluate;
    // Identifies the model backend in stage input hashes, e.g.
    // "mock:<transcript sha>", "scripted", "live:<endpoint>".
    std::string gateway_id;
};

struct RunOutcome {
    RunManifest manifest;
    std::vector<StageResult> stages;
};

// Executes stages from..to in DAG order, persisting each stage's artifacts
// under out_dir and updating manifest.json after every stage. A stage whose
// inputs are unchanged since its recorded run is skipped. Missing upstream
// artifacts are a precondition error.
RunOutcome run(const RunOptions& options, Gateway& gateway);

// Combined hash over a stage's artifact files (sorted "name:hash" lines).
std::string combined_artifact_hash(const std::string& out_dir,
                                   const std::vector<std::string>& files);

const std::vector<std::string>& stage_artifacts(Stage s);

// Standalone evaluation over explicit theme/truth files (the evaluate
// subcommand's --themes/--truth form).
void evaluate_files(const std::string& themes_path, const std::string& truth_path,
                    const RunConfig& cfg, const std::string& out_dir, Gateway& gateway);

}  // namespace qcoder
