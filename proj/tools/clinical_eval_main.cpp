#include <iostream>

#include <CLI11.hpp>

#include "clinical_eval/pipeline.hpp"

namespace {

using clineval::config::RunConfig;

struct CommonOpts {
    std::string config_path;
    std::string output_dir;
    std::string endpoint;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Path to the pipeline YAML config")
        ->required();
    cmd->add_option("--output-dir", opts.output_dir, "Override the config's output_dir");
    cmd->add_option("--endpoint", opts.endpoint, "Override the inference endpoint URL");
}

RunConfig load(const CommonOpts& opts) {
    auto config = clineval::config::load_config(opts.config_path);
    if (!opts.output_dir.empty()) config.output_dir = opts.output_dir;
    if (!opts.endpoint.empty()) config.endpoint = opts.endpoint;
    return config;
}

int do_run(const RunConfig& config) {
    const auto summary = clineval::pipeline::stage_run(config);
    std::cout << "run: attempted=" << summary.attempted_keys
              << " skipped=" << summary.skipped_existing << " generated=" << summary.generated
              << " ok=" << summary.ok_total << " failed=" << summary.failed_total << "\n";
    return summary.failed_total > 0 ? 1 : 0;
}

int do_score(const RunConfig& config) {
    const auto summary = clineval::pipeline::stage_score(config);
    std::cout << "score: scored=" << summary.scored
              << " skipped_failed=" << summary.skipped_failed
              << " semantic_failures=" << summary.semantic_failures
              << " judge_unparsed=" << summary.judge_unparsed
              << " missing_gold=" << summary.missing_gold << "\n";
    return 0;
}

int do_report(const RunConfig& config) {
    const auto path = clineval::pipeline::stage_report(config);
    std::cout << "report: " << path.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"clinical-eval: resumable run/score/report evaluation pipeline"};
    app.require_subcommand(1);

    CommonOpts run_opts, score_opts, report_opts, all_opts;
    auto* run_cmd = app.add_subcommand("run", "Query each model N times per question");
    add_common(run_cmd, run_opts);
    auto* score_cmd = app.add_subcommand("score", "Apply the metric suite to stored responses");
    add_common(score_cmd, score_opts);
    auto* report_cmd = app.add_subcommand("report", "Render the six-section Markdown report");
    add_common(report_cmd, report_opts);
    auto* all_cmd = app.add_subcommand("all", "run, then score, then report");
    add_common(all_cmd, all_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run_cmd->parsed()) return do_run(load(run_opts));
        if (score_cmd->parsed()) return do_score(load(score_opts));
        if (report_cmd->parsed()) return do_report(load(report_opts));
        if (all_cmd->parsed()) {
            const auto config = load(all_opts);
            const int run_rc = do_run(config);
            if (run_rc != 0) return run_rc;
            const int score_rc = do_score(config);
            if (score_rc != 0) return score_rc;
            return do_report(config);
        }
    } catch (const clineval::config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
