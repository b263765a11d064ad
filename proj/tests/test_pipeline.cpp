#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "clinical_eval/dataset.hpp"
#include "clinical_eval/mock_server.hpp"
#include "clinical_eval/pipeline.hpp"

using namespace clineval;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("clineval_pipe_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<dataset::QAItem> make_corpus(int n) {
    std::vector<dataset::QAItem> items;
    for (int i = 0; i < n; ++i) {
        items.push_back({"q" + std::to_string(i),
                         "Question number " + std::to_string(i) + "?",
                         "Gold answer number " + std::to_string(i) + ".",
                         std::nullopt, std::nullopt});
    }
    return items;
}

config::RunConfig make_config(const TempDir& dir, const std::string& endpoint,
                              int corpus_size = 3, size_t runs = 2) {
    config::RunConfig cfg;
    cfg.models = {{"model-a", "Model A"}, {"model-b", "Model B"}};
    cfg.endpoint = endpoint;
    cfg.dataset_path = dir.path / "corpus.jsonl";
    dataset::write_flat(cfg.dataset_path, make_corpus(corpus_size));
    cfg.sample_size = static_cast<size_t>(corpus_size);
    cfg.runs_per_question = runs;
    cfg.output_dir = dir.path / "out";
    cfg.gen_params.retry_delay_ms = 0;
    cfg.judge.enabled = false;
    return cfg;
}

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("run stage produces one ok record per key and a csv export") {
    mock::MockInferenceServer server;
    TempDir dir;
    auto cfg = make_config(dir, server.endpoint());  // 2 models x 3 questions x 2 runs

    const auto summary = pipeline::stage_run(cfg);
    CHECK(summary.attempted_keys == 12);
    CHECK(summary.generated == 12);
    CHECK(summary.skipped_existing == 0);
    CHECK(summary.ok_total == 12);
    CHECK(summary.failed_total == 0);

    store::ResponseStore responses(pipeline::responses_path(cfg));
    CHECK(responses.record_count() == 12);
    CHECK(responses.completed_keys().size() == 12);
    CHECK(fs::exists(cfg.output_dir / "responses.csv"));

    // deterministic order: model, then question in sampled order, then
    // run index
    const auto sampled =
        dataset::sample(dataset::load_flat(cfg.dataset_path).items, cfg.sample_size, cfg.seed);
    const auto& first = responses.records().front();
    CHECK(first.model_id == "model-a");
    CHECK(first.question_id == sampled.front().question_id);
    CHECK(first.run_index == 0);
}

TEST_CASE("rerunning a finished run stage issues zero generate calls") {
    mock::MockInferenceServer server;
    TempDir dir;
    auto cfg = make_config(dir, server.endpoint());
    pipeline::stage_run(cfg);
    const auto calls_after_first = server.generate_requests().size();
    CHECK(calls_after_first == 12);

    const auto second = pipeline::stage_run(cfg);
    CHECK(server.generate_requests().size() == calls_after_first);
    CHECK(second.generated == 0);
    CHECK(second.skipped_existing == 12);
    CHECK(second.ok_total == 12);

    store::ResponseStore responses(pipeline::responses_path(cfg));
    CHECK(responses.record_count() == 12);  // no duplicate lines either
}

TEST_CASE("an unreachable endpoint records failures instead of aborting") {
    TempDir dir;
    auto cfg = make_config(dir, "http://127.0.0.1:1");
    cfg.gen_params.max_retries = 0;
    cfg.gen_params.timeout_seconds = 2;

    const auto summary = pipeline::stage_run(cfg);
    CHECK(summary.attempted_keys == 12);
    CHECK(summary.ok_total == 0);
    CHECK(summary.failed_total == 12);

    store::ResponseStore responses(pipeline::responses_path(cfg));
    CHECK(responses.completed_keys().empty());
    CHECK(responses.record_count() == 12);  // the failures are on disk
}

TEST_CASE("failed keys are retried on the next run invocation") {
    TempDir dir;
    // first pass against a dead endpoint
    auto cfg = make_config(dir, "http://127.0.0.1:1");
    cfg.gen_params.max_retries = 0;
    cfg.gen_params.timeout_seconds = 2;
    pipeline::stage_run(cfg);

    // second pass against a live mock completes everything
    mock::MockInferenceServer server;
    cfg.endpoint = server.endpoint();
    const auto summary = pipeline::stage_run(cfg);
    CHECK(summary.generated == 12);
    CHECK(summary.ok_total == 12);
    CHECK(summary.failed_total == 0);
}

TEST_CASE("score stage requires a responses store") {
    TempDir dir;
    auto cfg = make_config(dir, "http://127.0.0.1:1");
    CHECK_THROWS_AS(pipeline::stage_score(cfg), pipeline::PipelineError);
}

TEST_CASE("score stage scores ok records only, without touching target models") {
    mock::MockInferenceServer server;
    TempDir dir;
    auto cfg = make_config(dir, server.endpoint());
    pipeline::stage_run(cfg);
    const auto run_calls = server.generate_requests().size();

    const auto summary = pipeline::stage_score(cfg);
    CHECK(summary.scored == 12);
    CHECK(summary.skipped_failed == 0);
    CHECK(summary.missing_gold == 0);
    CHECK(summary.judge_unparsed == 0);      // judge disabled
    CHECK(summary.semantic_failures == 0);   // encoder disabled
    CHECK(server.generate_requests().size() == run_calls);
    CHECK(server.embed_requests().empty());

    store::ScoreStore scores(pipeline::scores_path(cfg));
    CHECK(scores.records().size() == 12);
    for (const auto& record : scores.records()) {
        CHECK_FALSE(record.scores.semantic_f1.has_value());
        CHECK_FALSE(record.scores.judge_score.has_value());
        CHECK(record.scores.token_f1 >= 0.0);
    }
}

TEST_CASE("re-scoring truncates and reproduces identical scores") {
    mock::MockInferenceServer server;
    TempDir dir;
    auto cfg = make_config(dir, server.endpoint());
    pipeline::stage_run(cfg);
    pipeline::stage_score(cfg);
    const auto first = read_all(pipeline::scores_path(cfg));
    pipeline::stage_score(cfg);
    CHECK(read_all(pipeline::scores_path(cfg)) == first);
}

TEST_CASE("semantic and judge paths run when configured") {
    mock::MockInferenceServer server;
    TempDir dir;
    auto cfg = make_config(dir, server.endpoint());
    cfg.encoder_model_id = "encoder-model";
    cfg.judge.enabled = true;
    cfg.judge.judge_model_id = "judge-model";
    cfg.judge.params.retry_delay_ms = 0;
    pipeline::stage_run(cfg);
    const auto calls_before = server.generate_requests().size();

    const auto summary = pipeline::stage_score(cfg);
    CHECK(summary.scored == 12);
    // one judge call per scored record, zero target-model calls
    CHECK(server.generate_requests().size() == calls_before + 12);
    for (size_t i = calls_before; i < server.generate_requests().size(); ++i) {
        CHECK(server.generate_requests()[i]["model"] == "judge-model");
    }
    CHECK_FALSE(server.embed_requests().empty());

    store::ScoreStore scores(pipeline::scores_path(cfg));
    for (const auto& record : scores.records()) {
        CHECK(record.scores.semantic_f1.has_value());
        CHECK_FALSE(record.scores.judge_raw.empty());
    }
    // mock judge replies are prose: every record is unparsed, and the
    // summary says so
    CHECK(summary.judge_unparsed == 12);
}

TEST_CASE("report stage emits six fixed sections, byte-deterministically") {
    mock::MockInferenceServer server;
    TempDir dir;
    auto cfg = make_config(dir, server.endpoint());
    pipeline::stage_run(cfg);
    pipeline::stage_score(cfg);

    const auto path = pipeline::stage_report(cfg);
    const auto report = read_all(path);
    const char* sections[] = {
        "# 1. Run Configuration & Provenance",
        "# 2. Quality Metrics",
        "# 3. Judge Scores",
        "# 4. Reproducibility",
        "# 5. Efficiency",
        "# 6. Per-Question Breakdown & Cross-Model Overlap",
    };
    size_t pos = 0;
    for (const char* section : sections) {
        const auto found = report.find(section);
        CAPTURE(section);
        REQUIRE(found != std::string::npos);
        CHECK(found >= pos);  // sections appear in order
        pos = found;
    }
    CHECK(report.find("Model A") != std::string::npos);
    CHECK(report.find("Model B") != std::string::npos);

    pipeline::stage_report(cfg);
    CHECK(read_all(path) == report);
}

TEST_CASE("deterministic mock yields agreement 1.0 and uniqueness 1/N in aggregates") {
    mock::MockInferenceServer server;
    TempDir dir;
    auto cfg = make_config(dir, server.endpoint(), /*corpus_size=*/3, /*runs=*/5);
    pipeline::stage_run(cfg);
    pipeline::stage_score(cfg);

    store::ResponseStore responses(pipeline::responses_path(cfg));
    store::ScoreStore scores(pipeline::scores_path(cfg));
    const auto data = pipeline::aggregate(cfg, responses, scores);
    REQUIRE(data.models.size() == 2);
    for (const auto& model : data.models) {
        CHECK(model.ok_runs == 15);
        CHECK(model.repro.mean_agreement == doctest::Approx(1.0));
        CHECK(model.repro.mean_uniqueness == doctest::Approx(0.2));
        CHECK(model.repro.global_distinct == 3);
        CHECK(model.repro.global_runs == 15);
        CHECK(model.mean_tokens_per_second.has_value());
        CHECK(*model.mean_tokens_per_second == doctest::Approx(42.0));
        CHECK(model.per_question.size() == 3);
    }
    // two different models answer differently -> zero overlap;
    // diagonal is 1 by definition
    REQUIRE(data.overlap.size() == 2);
    CHECK(data.overlap[0][0] == doctest::Approx(1.0));
    CHECK(data.overlap[1][1] == doctest::Approx(1.0));
    CHECK(data.overlap[0][1] == doctest::Approx(0.0));
    CHECK(data.overlap[1][0] == doctest::Approx(data.overlap[0][1]));
}

TEST_CASE("models are reported sorted by display name") {
    mock::MockInferenceServer server;
    TempDir dir;
    auto cfg = make_config(dir, server.endpoint());
    cfg.models = {{"zz-model", "Alpha"}, {"aa-model", "Zulu"}};
    pipeline::stage_run(cfg);
    pipeline::stage_score(cfg);

    store::ResponseStore responses(pipeline::responses_path(cfg));
    store::ScoreStore scores(pipeline::scores_path(cfg));
    const auto data = pipeline::aggregate(cfg, responses, scores);
    REQUIRE(data.models.size() == 2);
    CHECK(data.models[0].display_name == "Alpha");
    CHECK(data.models[1].display_name == "Zulu");
}

TEST_CASE("max_inflight > 1 produces the same store contents") {
    TempDir dir_serial, dir_parallel;
    mock::MockInferenceServer server;
    auto serial = make_config(dir_serial, server.endpoint(), 4, 3);
    auto parallel = make_config(dir_parallel, server.endpoint(), 4, 3);
    parallel.max_inflight = 8;

    pipeline::stage_run(serial);
    pipeline::stage_run(parallel);

    store::ResponseStore a(pipeline::responses_path(serial));
    store::ResponseStore b(pipeline::responses_path(parallel));
    REQUIRE(a.record_count() == b.record_count());
    for (size_t i = 0; i < a.record_count(); ++i) {
        CHECK(a.records()[i].model_id == b.records()[i].model_id);
        CHECK(a.records()[i].question_id == b.records()[i].question_id);
        CHECK(a.records()[i].run_index == b.records()[i].run_index);
        CHECK(a.records()[i].response_text == b.records()[i].response_text);
    }
}
