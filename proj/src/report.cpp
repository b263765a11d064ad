#include <cstdio>
#include <sstream>

#include "clinical_eval/pipeline.hpp"

namespace clineval::pipeline {

namespace {

std::string fixed(double v, int places) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", places, v);
    return buf;
}

std::string opt3(const std::optional<double>& v) {
    return v ? fixed(*v, 3) : std::string("n/a");
}

}  // namespace

std::string render_markdown(const config::RunConfig& config, const ReportData& data) {
    std::ostringstream md;

    // 1 ---------------------------------------------------------------
    md << "# 1. Run Configuration & Provenance\n\n";
    md << "| Setting | Value |\n|---|---|\n";
    md << "| endpoint | " << config.endpoint << " |\n";
    md << "| dataset | " << config.dataset_path.string() << " |\n";
    md << "| sample_size | " << config.sample_size << " |\n";
    md << "| seed | " << config.seed << " |\n";
    md << "| runs_per_question | " << config.runs_per_question << " |\n";
    md << "| temperature | " << fixed(config.gen_params.temperature, 2) << " |\n";
    md << "| top_p | " << fixed(config.gen_params.top_p, 2) << " |\n";
    md << "| max_tokens | " << config.gen_params.max_tokens << " |\n";
    md << "| timeout_seconds | " << config.gen_params.timeout_seconds << " |\n";
    md << "| max_retries | " << config.gen_params.max_retries << " |\n";
    md << "| judge | "
       << (config.judge.enabled ? config.judge.judge_model_id : std::string("disabled"))
       << " |\n";
    md << "| encoder | "
       << (config.encoder_model_id.empty() ? std::string("disabled") : config.encoder_model_id)
       << " |\n";
    md << "| system_prompt | " << config.system_prompt << " |\n\n";
    md << "Models:\n\n";
    for (const auto& m : data.models) {
        md << "- " << m.display_name << " (`" << m.model_id << "`)\n";
    }
    md << "\n";
    md << "Run window: " << (data.first_timestamp.empty() ? "n/a" : data.first_timestamp)
       << " to " << (data.last_timestamp.empty() ? "n/a" : data.last_timestamp) << ".\n";
    md << "Attempted keys: " << data.attempted_keys << "; ok: " << data.ok_total
       << "; failed: " << data.failed_total << ".\n\n";

    // 2 ---------------------------------------------------------------
    md << "# 2. Quality Metrics\n\n";
    md << "Two-stage means over ok runs (run-mean per question, then unweighted "
          "mean over questions).\n\n";
    md << "| Model | Exact Match | Token F1 | String Sim | BLEU | ROUGE-L | Semantic F1 |\n";
    md << "|---|---|---|---|---|---|---|\n";
    for (const auto& m : data.models) {
        md << "| " << m.display_name << " | " << fixed(m.exact_match, 3) << " | "
           << fixed(m.token_f1, 3) << " | " << fixed(m.string_similarity, 3) << " | "
           << fixed(m.bleu, 3) << " | " << fixed(m.rouge_l_f1, 3) << " | " << opt3(m.semantic_f1)
           << " |\n";
    }
    md << "\n";
    for (const auto& m : data.models) {
        if (m.semantic_missing > 0) {
            md << "Note: " << m.display_name << " has " << m.semantic_missing
               << " runs without semantic scores (encoder unavailable).\n";
        }
    }
    md << "\n";

    // 3 ---------------------------------------------------------------
    md << "# 3. Judge Scores\n\n";
    md << "| Model | Judge Mean | Unparsed Outputs |\n|---|---|---|\n";
    for (const auto& m : data.models) {
        md << "| " << m.display_name << " | " << opt3(m.judge_mean) << " | " << m.judge_unparsed
           << " |\n";
    }
    md << "\nCaveat: the judge model is itself stochastic and each response is "
          "judged once, so judge means carry unquantified variance.\n\n";

    // 4 ---------------------------------------------------------------
    md << "# 4. Reproducibility\n\n";
    md << "Agreement: fraction of runs matching the modal normalized output "
          "(higher is more consistent). Uniqueness: distinct normalized outputs / N "
          "(lower is more consistent).\n\n";
    md << "| Model | Agreement | Uniqueness | Distinct Outputs | Ok Runs |\n";
    md << "|---|---|---|---|---|\n";
    for (const auto& m : data.models) {
        md << "| " << m.display_name << " | " << fixed(m.repro.mean_agreement, 3) << " | "
           << fixed(m.repro.mean_uniqueness, 3) << " | " << m.repro.global_distinct << " | "
           << m.repro.global_runs << " |\n";
    }
    md << "\n";

    // 5 ---------------------------------------------------------------
    md << "# 5. Efficiency\n\n";
    md << "| Model | Mean Latency (ms) | Mean Tokens/s | Estimated Tok/s Runs |\n";
    md << "|---|---|---|---|\n";
    for (const auto& m : data.models) {
        md << "| " << m.display_name << " | " << fixed(m.mean_latency_ms, 1) << " | "
           << (m.mean_tokens_per_second ? fixed(*m.mean_tokens_per_second, 1)
                                        : std::string("n/a"))
           << " | " << m.estimated_tps_runs << " |\n";
    }
    md << "\nTokens/s comes from server telemetry when reported; estimated values "
          "(whitespace tokens / wall seconds) are counted in the last column.\n\n";

    // 6 ---------------------------------------------------------------
    md << "# 6. Per-Question Breakdown & Cross-Model Overlap\n\n";
    md << "## Per-question reproducibility\n\n";
    md << "| Model | Question | Agreement | Uniqueness | Distinct | Modal Count |\n";
    md << "|---|---|---|---|---|---|\n";
    for (const auto& m : data.models) {
        for (const auto& q : m.per_question) {
            md << "| " << m.display_name << " | " << q.question_id << " | "
               << fixed(q.agreement, 3) << " | " << fixed(q.uniqueness, 3) << " | "
               << q.distinct_count << " | " << q.modal_count << " |\n";
        }
    }
    md << "\n## Cross-model overlap (mean per-question Jaccard)\n\n";
    md << "| Model |";
    for (const auto& m : data.models) md << " " << m.display_name << " |";
    md << "\n|---|";
    for (size_t i = 0; i < data.models.size(); ++i) md << "---|";
    md << "\n";
    for (size_t a = 0; a < data.models.size(); ++a) {
        md << "| " << data.models[a].display_name << " |";
        for (size_t b = 0; b < data.models.size(); ++b) {
            md << " " << fixed(data.overlap[a][b], 3) << " |";
        }
        md << "\n";
    }
    md << "\n";
    return md.str();
}

}  // namespace clineval::pipeline
