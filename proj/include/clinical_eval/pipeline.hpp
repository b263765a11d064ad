#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "clinical_eval/config.hpp"
#include "clinical_eval/repro_metrics.hpp"
#include "clinical_eval/run_store.hpp"

namespace clineval::pipeline {

struct PipelineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunSummary {
    size_t attempted_keys = 0;   // models x questions x N
    size_t skipped_existing = 0; // already ok on resume
    size_t generated = 0;        // calls issued this invocation
    size_t ok_total = 0;         // ok keys after the stage
    size_t failed_total = 0;     // keys still failed after the stage
};

struct ScoreSummary {
    size_t scored = 0;
    size_t skipped_failed = 0;
    size_t semantic_failures = 0;
    size_t judge_unparsed = 0;
    size_t missing_gold = 0;
};

// Aggregates for one model, two-stage (run-mean then question-mean)
// over ok scored records.
struct ModelAggregates {
    std::string model_id;
    std::string display_name;
    size_t ok_runs = 0;
    size_t failed_runs = 0;

    double exact_match = 0.0;
    double token_f1 = 0.0;
    double string_similarity = 0.0;
    double bleu = 0.0;
    double rouge_l_f1 = 0.0;
    std::optional<double> semantic_f1;
    size_t semantic_missing = 0;

    std::optional<double> judge_mean;
    size_t judge_unparsed = 0;

    std::vector<repro::ReproStats> per_question;  // sorted by question_id
    repro::ReproAggregate repro;

    double mean_latency_ms = 0.0;
    std::optional<double> mean_tokens_per_second;
    size_t estimated_tps_runs = 0;
};

struct ReportData {
    std::vector<ModelAggregates> models;      // sorted by display_name
    std::vector<std::vector<double>> overlap; // mean per-question Jaccard, models x models
    std::string first_timestamp;
    std::string last_timestamp;
    size_t attempted_keys = 0;
    size_t ok_total = 0;
    size_t failed_total = 0;
};

// Generation stage. Resumes from completed_keys; failures are recorded,
// not fatal. Writes responses.jsonl + responses.csv under output_dir.
RunSummary stage_run(const config::RunConfig& config);

// Scoring stage. Rebuilds scores.jsonl from scratch; never queries the
// target models. Judge/encoder calls only, and only when configured.
ScoreSummary stage_score(const config::RunConfig& config);

// Aggregation + six-section Markdown report (report.md). A pure
// function of the stores: reruns are byte-identical.
std::filesystem::path stage_report(const config::RunConfig& config);

ReportData aggregate(const config::RunConfig& config, const store::ResponseStore& responses,
                     const store::ScoreStore& scores);
std::string render_markdown(const config::RunConfig& config, const ReportData& data);

std::filesystem::path responses_path(const config::RunConfig& config);
std::filesystem::path scores_path(const config::RunConfig& config);
std::filesystem::path report_path(const config::RunConfig& config);

}  // namespace clineval::pipeline
