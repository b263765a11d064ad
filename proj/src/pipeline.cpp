#include "clinical_eval/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <set>

#include "clinical_eval/dataset.hpp"
#include "clinical_eval/judge.hpp"
#include "clinical_eval/text_metrics.hpp"

namespace clineval::pipeline {

namespace fs = std::filesystem;
using config::RunConfig;
using infer::GenerationRecord;
using infer::RunStatus;
using store::ResponseStore;
using store::RunKey;
using store::ScoredRecord;
using store::ScoreStore;

fs::path responses_path(const RunConfig& config) {
    return config.output_dir / "responses.jsonl";
}

fs::path scores_path(const RunConfig& config) {
    return config.output_dir / "scores.jsonl";
}

fs::path report_path(const RunConfig& config) {
    return config.output_dir / "report.md";
}

namespace {

std::vector<dataset::QAItem> sampled_questions(const RunConfig& config) {
    auto loaded = dataset::load_flat(config.dataset_path);
    if (loaded.items.empty()) {
        throw PipelineError("dataset is empty after filtering: " + config.dataset_path.string());
    }
    return dataset::sample(std::move(loaded.items), config.sample_size, config.seed);
}

}  // namespace

RunSummary stage_run(const RunConfig& config) {
    config::validate(config);
    const auto questions = sampled_questions(config);
    fs::create_directories(config.output_dir);

    ResponseStore responses(responses_path(config));
    const auto completed = responses.completed_keys();
    const infer::InferenceClient client(config.endpoint);

    RunSummary summary;
    summary.attempted_keys = config.models.size() * questions.size() * config.runs_per_question;

    // Deterministic order: model, then question in sampled order, then
    // run index. Pending work collected first so resume skips are exact.
    struct Task {
        RunKey key;
        const dataset::QAItem* item;
    };
    std::vector<Task> pending;
    for (const auto& model : config.models) {
        for (const auto& item : questions) {
            for (size_t run = 0; run < config.runs_per_question; ++run) {
                const RunKey key{model.model_id, item.question_id, static_cast<int>(run)};
                if (completed.contains(key)) {
                    ++summary.skipped_existing;
                } else {
                    pending.push_back({key, &item});
                }
            }
        }
    }

    auto run_one = [&](const Task& task) {
        GenerationRecord record = client.generate(task.key.model_id, config.system_prompt,
                                                  task.item->question, config.gen_params);
        record.question_id = task.key.question_id;
        record.run_index = task.key.run_index;
        return record;
    };

    // Up to max_inflight concurrent generations; appends stay in task
    // order through the single writer.
    for (size_t i = 0; i < pending.size(); i += config.max_inflight) {
        const size_t batch_end = std::min(pending.size(), i + config.max_inflight);
        std::vector<std::future<GenerationRecord>> batch;
        for (size_t j = i + 1; j < batch_end; ++j) {
            batch.push_back(std::async(std::launch::async, run_one, pending[j]));
        }
        responses.append(run_one(pending[i]));
        ++summary.generated;
        for (auto& f : batch) {
            responses.append(f.get());
            ++summary.generated;
        }
    }

    for (const auto& [key, record] : responses.effective_records()) {
        if (record.status == RunStatus::ok) {
            ++summary.ok_total;
        } else {
            ++summary.failed_total;
        }
    }
    store::export_responses(responses, config.output_dir / "responses.csv",
                            store::ExportFormat::csv);
    return summary;
}

ScoreSummary stage_score(const RunConfig& config) {
    config::validate(config);
    if (!fs::exists(responses_path(config))) {
        throw PipelineError("no responses store at " + responses_path(config).string() +
                            " (run the `run` stage first)");
    }
    ResponseStore responses(responses_path(config));

    auto loaded = dataset::load_flat(config.dataset_path);
    std::map<std::string, const dataset::QAItem*> gold;
    for (const auto& item : loaded.items) gold[item.question_id] = &item;

    const infer::InferenceClient client(config.endpoint);
    std::optional<infer::HttpTokenEncoder> encoder;
    if (!config.encoder_model_id.empty()) {
        encoder.emplace(client, config.encoder_model_id, config.gen_params);
    }

    ScoreStore scores(scores_path(config), /*truncate=*/true);
    ScoreSummary summary;

    for (const auto& [key, record] : responses.effective_records()) {
        if (record.status != RunStatus::ok) {
            ++summary.skipped_failed;
            continue;
        }
        auto it = gold.find(key.question_id);
        if (it == gold.end()) {
            ++summary.missing_gold;
            continue;
        }
        const dataset::QAItem& item = *it->second;

        ScoredRecord scored;
        scored.key = key;
        scored.scores.exact_match = metrics::exact_match(record.response_text, item.gold_answer);
        scored.scores.token_f1 = metrics::token_f1(record.response_text, item.gold_answer);
        scored.scores.string_similarity =
            metrics::string_similarity(record.response_text, item.gold_answer);
        scored.scores.bleu = metrics::bleu(record.response_text, item.gold_answer);
        scored.scores.rouge_l_f1 = metrics::rouge_l(record.response_text, item.gold_answer);

        if (encoder) {
            try {
                const auto sem =
                    metrics::semantic_score(record.response_text, item.gold_answer, *encoder);
                scored.scores.semantic_precision = sem.precision;
                scored.scores.semantic_recall = sem.recall;
                scored.scores.semantic_f1 = sem.f1;
            } catch (const metrics::EncoderFailure& e) {
                scored.semantic_error = e.what();
                ++summary.semantic_failures;
            }
        }

        if (config.judge.enabled) {
            const auto verdict =
                judge::judge_response(client, config.judge, item, record.response_text);
            scored.scores.judge_score = verdict.score;
            scored.scores.judge_raw = verdict.raw_output;
            scored.judge_parse_method = judge::to_string(verdict.parse_method);
            if (verdict.parse_method == judge::ParseMethod::unparsed) ++summary.judge_unparsed;
        }

        scores.append(scored);
        ++summary.scored;
    }
    return summary;
}

namespace {

double mean(const std::vector<double>& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

}  // namespace

ReportData aggregate(const RunConfig& config, const ResponseStore& responses,
                     const ScoreStore& scores) {
    ReportData data;
    const auto effective = responses.effective_records();

    std::map<RunKey, const ScoredRecord*> score_index;
    for (const auto& s : scores.records()) score_index[s.key] = &s;

    std::set<std::string> question_ids;
    for (const auto& [key, record] : effective) question_ids.insert(key.question_id);

    data.attempted_keys =
        config.models.size() * question_ids.size() * config.runs_per_question;

    for (const auto& [key, record] : effective) {
        if (record.status == RunStatus::ok) {
            ++data.ok_total;
        } else {
            ++data.failed_total;
        }
        if (data.first_timestamp.empty() || record.timestamp_utc < data.first_timestamp) {
            data.first_timestamp = record.timestamp_utc;
        }
        if (record.timestamp_utc > data.last_timestamp) {
            data.last_timestamp = record.timestamp_utc;
        }
    }

    std::vector<config::ModelSpec> models = config.models;
    std::sort(models.begin(), models.end(), [](const auto& a, const auto& b) {
        if (a.display_name != b.display_name) return a.display_name < b.display_name;
        return a.model_id < b.model_id;
    });

    // Normalized ok responses per (model, question) for repro + overlap.
    std::map<std::string, std::map<std::string, std::vector<std::string>>> responses_by_model;
    for (const auto& [key, record] : effective) {
        if (record.status != RunStatus::ok) continue;
        responses_by_model[key.model_id][key.question_id].push_back(record.response_text);
    }

    for (const auto& model : models) {
        ModelAggregates agg;
        agg.model_id = model.model_id;
        agg.display_name = model.display_name;

        // Per-question accumulators for the two-stage quality means.
        struct QuestionQuality {
            std::vector<double> exact_match, token_f1, string_similarity, bleu, rouge_l_f1;
            std::vector<double> semantic_f1, judge;
        };
        std::map<std::string, QuestionQuality> by_question;
        std::vector<double> latencies;
        std::vector<double> throughputs;

        for (const auto& [key, record] : effective) {
            if (key.model_id != model.model_id) continue;
            if (record.status != RunStatus::ok) {
                ++agg.failed_runs;
                continue;
            }
            ++agg.ok_runs;
            latencies.push_back(record.latency_ms);
            if (record.tokens_per_second) {
                throughputs.push_back(*record.tokens_per_second);
                if (record.tokens_per_second_estimated) ++agg.estimated_tps_runs;
            }
            auto sit = score_index.find(key);
            if (sit == score_index.end()) continue;
            const auto& sv = sit->second->scores;
            auto& q = by_question[key.question_id];
            q.exact_match.push_back(sv.exact_match);
            q.token_f1.push_back(sv.token_f1);
            q.string_similarity.push_back(sv.string_similarity);
            q.bleu.push_back(sv.bleu);
            q.rouge_l_f1.push_back(sv.rouge_l_f1);
            if (sv.semantic_f1) {
                q.semantic_f1.push_back(*sv.semantic_f1);
            } else {
                ++agg.semantic_missing;
            }
            if (sv.judge_score) {
                q.judge.push_back(*sv.judge_score);
            } else if (config.judge.enabled) {
                ++agg.judge_unparsed;
            }
        }

        std::vector<double> em, tf1, ss, bl, rl, sem, jd;
        for (const auto& [qid, q] : by_question) {
            em.push_back(mean(q.exact_match));
            tf1.push_back(mean(q.token_f1));
            ss.push_back(mean(q.string_similarity));
            bl.push_back(mean(q.bleu));
            rl.push_back(mean(q.rouge_l_f1));
            if (!q.semantic_f1.empty()) sem.push_back(mean(q.semantic_f1));
            if (!q.judge.empty()) jd.push_back(mean(q.judge));
        }
        agg.exact_match = mean(em);
        agg.token_f1 = mean(tf1);
        agg.string_similarity = mean(ss);
        agg.bleu = mean(bl);
        agg.rouge_l_f1 = mean(rl);
        if (!sem.empty()) agg.semantic_f1 = mean(sem);
        if (!jd.empty()) agg.judge_mean = mean(jd);

        auto mit = responses_by_model.find(model.model_id);
        if (mit != responses_by_model.end()) {
            for (const auto& [qid, texts] : mit->second) {
                agg.per_question.push_back(
                    repro::compute_repro_stats(model.model_id, qid, texts));
            }
            if (!agg.per_question.empty()) {
                agg.repro = repro::aggregate_repro(agg.per_question);
            }
        }

        agg.mean_latency_ms = mean(latencies);
        if (!throughputs.empty()) agg.mean_tokens_per_second = mean(throughputs);
        data.models.push_back(std::move(agg));
    }

    // Cross-model overlap: per-question Jaccard averaged over the
    // questions both models answered.
    data.overlap.assign(data.models.size(), std::vector<double>(data.models.size(), 0.0));
    for (size_t a = 0; a < data.models.size(); ++a) {
        for (size_t b = 0; b < data.models.size(); ++b) {
            if (a == b) {
                data.overlap[a][b] = 1.0;
                continue;
            }
            const auto ita = responses_by_model.find(data.models[a].model_id);
            const auto itb = responses_by_model.find(data.models[b].model_id);
            if (ita == responses_by_model.end() || itb == responses_by_model.end()) continue;
            std::vector<double> per_question;
            for (const auto& [qid, texts_a] : ita->second) {
                auto qb = itb->second.find(qid);
                if (qb == itb->second.end()) continue;
                per_question.push_back(repro::cross_model_overlap(texts_a, qb->second));
            }
            data.overlap[a][b] = mean(per_question);
        }
    }
    return data;
}

std::filesystem::path stage_report(const RunConfig& config) {
    config::validate(config);
    if (!fs::exists(scores_path(config))) {
        throw PipelineError("no scores store at " + scores_path(config).string() +
                            " (run the `score` stage first)");
    }
    ResponseStore responses(responses_path(config));
    ScoreStore scores(scores_path(config));
    const auto data = aggregate(config, responses, scores);
    const std::string markdown = render_markdown(config, data);

    const auto path = report_path(config);
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw store::StorageError("cannot write report: " + path.string());
    out << markdown;
    if (!out) throw store::StorageError("write failed for " + path.string());
    return path;
}

}  // namespace clineval::pipeline
