#include <cstdlib>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "qcoder/errors.hpp"
#include "qcoder/gateway.hpp"
#include "qcoder/hash.hpp"
#include "qcoder/pipeline.hpp"
#include "qcoder/scripted_gateway.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::string templates_dir;
    std::string mock_transcript;
    std::string record_path;
    std::string spec_path;
    bool scripted = false;
    bool seed_set = false;
    std::uint64_t seed = 0;
};

void add_common_options(CLI::App* cmd, CommonArgs& args, bool with_spec) {
    cmd->add_option("--config", args.config_path, "Run configuration JSON file")->required();
    cmd->add_option("--out", args.out_dir, "Output directory for artifacts");
    cmd->add_option("--templates", args.templates_dir, "Prompt template directory override");
    cmd->add_option("--mock", args.mock_transcript,
                    "Replay chat responses from this transcript (offline)");
    cmd->add_flag("--scripted", args.scripted,
                  "Use the deterministic built-in stand-in model (offline)");
    cmd->add_option("--record", args.record_path, "Record chat exchanges to this transcript");
    cmd->add_option("--seed", args.seed, "Override the config seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    if (with_spec) {
        cmd->add_option("--spec", args.spec_path, "Study spec JSON (simulation criteria)");
    }
}

struct GatewayChoice {
    std::shared_ptr<qcoder::Gateway> gateway;
    std::shared_ptr<qcoder::RecordingGateway> recorder;  // non-null when recording
    std::string id;
};

GatewayChoice make_gateway(const CommonArgs& args, const qcoder::RunConfig& cfg) {
    GatewayChoice choice;
    if (!args.mock_transcript.empty() && args.scripted) {
        throw qcoder::ConfigError("--mock and --scripted are mutually exclusive");
    }
    if (!args.mock_transcript.empty()) {
        choice.gateway = std::make_shared<qcoder::MockGateway>(
            qcoder::Transcript::load(args.mock_transcript), cfg.mock_embed_dims);
        choice.id = "mock:" + qcoder::sha256_file_hex(args.mock_transcript);
    } else if (args.scripted) {
        choice.gateway = std::make_shared<qcoder::ScriptedGateway>(cfg.mock_embed_dims);
        choice.id = "scripted";
    } else {
        std::string endpoint = cfg.endpoint_url;
        if (const char* env = std::getenv("QCODER_ENDPOINT")) endpoint = env;
        if (endpoint.empty()) {
            throw qcoder::ConfigError(
                "no model endpoint configured; set endpoint_url, QCODER_ENDPOINT, or use "
                "--scripted/--mock");
        }
        choice.gateway =
            std::make_shared<qcoder::HttpGateway>(qcoder::make_http_transport(endpoint));
        choice.id = "live:" + endpoint;
    }
    if (!args.record_path.empty()) {
        choice.recorder =
            std::make_shared<qcoder::RecordingGateway>(choice.gateway, args.record_path);
        choice.gateway = choice.recorder;
    }
    return choice;
}

int run_stages(const CommonArgs& args, qcoder::Stage from, qcoder::Stage to) {
    qcoder::RunOptions options;
    options.cfg = qcoder::validate_config(args.config_path);
    if (args.seed_set) options.cfg.seed = args.seed;
    options.out_dir = args.out_dir;
    options.templates_dir =
        args.templates_dir.empty() ? qcoder::default_template_dir() : args.templates_dir;
    options.spec_path = args.spec_path;
    options.from = from;
    options.to = to;

    GatewayChoice choice = make_gateway(args, options.cfg);
    options.gateway_id = choice.id;

    std::cout << "effective config:\n"
              << qcoder::config_to_json(options.cfg).dump(2) << "\n";
    qcoder::run(options, *choice.gateway);
    if (choice.recorder) choice.recorder->flush();
    return 0;
}

int dispatch_error() {
    try {
        throw;
    } catch (const qcoder::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
            case qcoder::ErrorKind::config: return 2;
            case qcoder::ErrorKind::gateway: return 4;
            default: return 3;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inductive qualitative codebook generation pipeline"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string eval_themes, eval_truth;

    CLI::App* cmd_simulate = app.add_subcommand("simulate", "Generate a synthetic corpus");
    CLI::App* cmd_summarize = app.add_subcommand("summarize", "Extract summary points");
    CLI::App* cmd_cluster = app.add_subcommand("cluster", "Embed, reduce, and cluster points");
    CLI::App* cmd_induce = app.add_subcommand("induce", "Grow the codebook cluster by cluster");
    CLI::App* cmd_themes = app.add_subcommand("themes", "Consolidate codes into themes");
    CLI::App* cmd_evaluate =
        app.add_subcommand("evaluate", "Match themes against ground-truth sub-themes");
    CLI::App* cmd_run = app.add_subcommand("run", "Run the full pipeline end to end");

    for (CLI::App* cmd : {cmd_simulate, cmd_summarize, cmd_cluster, cmd_induce, cmd_themes,
                          cmd_evaluate, cmd_run}) {
        add_common_options(cmd, args, cmd == cmd_simulate || cmd == cmd_run);
    }
    cmd_evaluate->add_option("--themes-file", eval_themes,
                             "Standalone mode: themes JSONL to evaluate");
    cmd_evaluate->add_option("--truth", eval_truth,
                             "Standalone mode: ground-truth criteria JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        using qcoder::Stage;
        if (cmd_simulate->parsed()) return run_stages(args, Stage::simulate, Stage::simulate);
        if (cmd_summarize->parsed()) return run_stages(args, Stage::summarize, Stage::summarize);
        if (cmd_cluster->parsed()) return run_stages(args, Stage::cluster, Stage::cluster);
        if (cmd_induce->parsed()) return run_stages(args, Stage::induce, Stage::induce);
        if (cmd_themes->parsed()) return run_stages(args, Stage::themes, Stage::themes);
        if (cmd_evaluate->parsed()) {
            if (!eval_themes.empty() || !eval_truth.empty()) {
                if (eval_themes.empty() || eval_truth.empty()) {
                    throw qcoder::ConfigError(
                        "standalone evaluate needs both --themes-file and --truth");
                }
                qcoder::RunConfig cfg = qcoder::validate_config(args.config_path);
                if (args.seed_set) cfg.seed = args.seed;
                GatewayChoice choice = make_gateway(args, cfg);
                qcoder::evaluate_files(eval_themes, eval_truth, cfg, args.out_dir,
                                       *choice.gateway);
                if (choice.recorder) choice.recorder->flush();
                return 0;
            }
            return run_stages(args, Stage::evaluate, Stage::evaluate);
        }
        if (cmd_run->parsed()) return run_stages(args, Stage::simulate, Stage::evaluate);
    } catch (...) {
        return dispatch_error();
    }
    return 0;
}
