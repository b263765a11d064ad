// Acceptance suite: one PASS/FAIL line per criterion, exit 0 only when
// every non-manual criterion passes. Re-derives expectations from
// independent oracles; shares no scoring code with the library beyond
// the public API under test.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "clinical_eval/dataset.hpp"
#include "clinical_eval/mock_server.hpp"
#include "clinical_eval/pipeline.hpp"
#include "clinical_eval/repro_metrics.hpp"
#include "clinical_eval/text_metrics.hpp"
#include "judge_fixtures.hpp"
#include "oracles.hpp"

#ifndef CLINICAL_EVAL_BIN
#error "CLINICAL_EVAL_BIN must point at the CLI binary"
#endif
#ifndef ORACLE_SCRIPT
#error "ORACLE_SCRIPT must point at agreement_mc_oracle.py"
#endif

namespace fs = std::filesystem;
using namespace clineval;

namespace {

struct Criterion {
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    bool passed() const { return failures.empty(); }
};

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("clineval_accept_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string random_sentence(std::mt19937& rng, int max_tokens) {
    static const char* words[] = {"the",  "cat",  "sat",  "on",   "mat",  "dog",
                                  "ran",  "fast", "blue", "pill", "dose", "fever"};
    std::uniform_int_distribution<int> len(0, max_tokens);
    std::uniform_int_distribution<int> pick(0, 11);
    std::string out;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
        if (!out.empty()) out += ' ';
        out += words[pick(rng)];
    }
    return out;
}

// ---- criterion 1: metric-oracle equivalence ------------------------------

void criterion_metrics(Criterion& c) {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937 rng(2026);
    for (int trial = 0; trial < 250; ++trial) {
        const std::string a = random_sentence(rng, 40);
        const std::string b = random_sentence(rng, 40);
        const auto ta = oracles::split_ws(a);
        const auto tb = oracles::split_ws(b);
        c.expect(std::abs(metrics::rouge_l(a, b) - oracles::rouge_l(ta, tb)) <= 1e-12,
                 "rouge_l deviates from the DP-LCS oracle on \"" + a + "\" / \"" + b + "\"");
        c.expect(metrics::string_similarity(a, b) == oracles::ratcliff_ratio(a, b),
                 "string_similarity deviates from the recursive oracle on \"" + a + "\"");
        c.expect(std::abs(metrics::bleu(a, b) - oracles::bleu(ta, tb)) <= 1e-9,
                 "bleu deviates from the formula oracle on \"" + a + "\" / \"" + b + "\"");
        c.expect(metrics::token_f1(a, b) == oracles::token_f1(ta, tb),
                 "token_f1 deviates from the multiset oracle on \"" + a + "\"");
    }
    const auto elapsed = std::chrono::steady_clock::now() - start;
    c.expect(elapsed < std::chrono::seconds(10), "metric-oracle sweep exceeded 10 s");
}

// ---- criterion 2: reproducibility-metric exactness ------------------------

void criterion_repro(Criterion& c) {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> n_dist(1, 12);
    std::uniform_int_distribution<int> letter(0, 4);
    for (int trial = 0; trial < 600; ++trial) {
        std::vector<std::string> runs;
        const int n = n_dist(rng);
        for (int i = 0; i < n; ++i) runs.push_back(std::string(1, char('a' + letter(rng))));
        const auto want = oracles::count_runs(runs);
        const auto agree = repro::self_agreement(runs);
        const auto uniq = repro::uniqueness(runs);
        c.expect(agree.agreement == want.agreement, "self_agreement mismatch");
        c.expect(uniq.uniqueness == want.uniqueness, "uniqueness mismatch");
        // boundary identities
        c.expect((agree.agreement == 1.0 / n) == (uniq.uniqueness == 1.0),
                 "agreement = 1/N <=> uniqueness = 1.0 violated");
        c.expect((uniq.distinct_count == 1) == (agree.agreement == 1.0),
                 "distinct = 1 <=> agreement = 1.0 violated");
    }
}

// ---- criterion 3: anchored aggregation fixtures ----------------------------

void criterion_anchored_fixtures(Criterion& c) {
    // 50 questions x 10 runs per model; per-question distinct counts sum
    // to the target. Responses are real strings run through the actual
    // normalization + counting path.
    auto run_fixture = [&](size_t target_distinct) {
        const size_t base = target_distinct / 50;
        const size_t bumped = target_distinct % 50;
        std::vector<repro::ReproStats> per_question;
        for (size_t q = 0; q < 50; ++q) {
            const size_t distinct = base + (q < bumped ? 1 : 0);
            std::vector<std::string> runs;
            for (size_t r = 0; r < 10; ++r) {
                const size_t variant = std::min(r, distinct - 1);
                runs.push_back("Question " + std::to_string(q) + " response variant " +
                               std::to_string(variant) + ".");
            }
            per_question.push_back(
                repro::compute_repro_stats("model", "q" + std::to_string(q), runs));
        }
        return repro::aggregate_repro(per_question);
    };
    for (auto [distinct, want] : {std::pair<size_t, double>{487, 0.974},
                                  {434, 0.868},
                                  {468, 0.936}}) {
        const auto agg = run_fixture(distinct);
        c.expect(agg.global_runs == 500, "fixture does not span 500 runs");
        c.expect(agg.global_distinct == distinct,
                 "fixture distinct count is not " + std::to_string(distinct));
        c.expect(std::abs(agg.mean_uniqueness - want) <= 0.0005,
                 "mean uniqueness " + std::to_string(agg.mean_uniqueness) + " not within 0.0005 of " +
                     std::to_string(want));
    }
    // disjoint two-model outputs -> overlap exactly 0.000
    std::vector<std::string> model_a, model_b;
    for (int i = 0; i < 20; ++i) {
        model_a.push_back("alpha answer " + std::to_string(i));
        model_b.push_back("omega answer " + std::to_string(i));
    }
    c.expect(repro::cross_model_overlap(model_a, model_b) == 0.0,
             "disjoint outputs should overlap exactly 0.000");
}

// ---- criterion 4: end-to-end mock run --------------------------------------

config::RunConfig mock_run_config(const TempDir& dir, const std::string& endpoint,
                                  int questions, size_t runs, int model_count) {
    config::RunConfig cfg;
    for (int m = 0; m < model_count; ++m) {
        const std::string id = "mock-model-" + std::string(1, char('a' + m));
        cfg.models.push_back({id, id});
    }
    cfg.endpoint = endpoint;
    cfg.dataset_path = dir.path / "corpus.jsonl";
    std::vector<dataset::QAItem> items;
    for (int i = 0; i < questions; ++i) {
        items.push_back({"q" + std::to_string(i), "Question " + std::to_string(i) + "?",
                         "Reference answer " + std::to_string(i) + ".", std::nullopt,
                         std::nullopt});
    }
    dataset::write_flat(cfg.dataset_path, items);
    cfg.sample_size = static_cast<size_t>(questions);
    cfg.runs_per_question = runs;
    cfg.output_dir = dir.path / "out";
    cfg.gen_params.retry_delay_ms = 0;
    cfg.judge.enabled = false;
    cfg.max_inflight = 8;
    return cfg;
}

void write_yaml_config(const fs::path& path, const config::RunConfig& cfg) {
    std::ofstream out(path);
    out << "models:\n";
    for (const auto& m : cfg.models) {
        out << "  - model_id: " << m.model_id << "\n";
    }
    out << "endpoint: \"" << cfg.endpoint << "\"\n";
    out << "dataset_path: \"" << cfg.dataset_path.string() << "\"\n";
    out << "output_dir: \"" << cfg.output_dir.string() << "\"\n";
    out << "sample_size: " << cfg.sample_size << "\n";
    out << "runs_per_question: " << cfg.runs_per_question << "\n";
    out << "max_inflight: " << cfg.max_inflight << "\n";
    out << "gen_params:\n  retry_delay_ms: 0\n  timeout_seconds: 10\n";
}

int run_cli(const std::string& env_prefix, const std::string& subcommand,
            const fs::path& config_path) {
    const std::string cmd = env_prefix + " '" + CLINICAL_EVAL_BIN + "' " + subcommand +
                            " --config '" + config_path.string() + "' >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return -2;
}

double monte_carlo_expected_agreement(Criterion& c) {
    const std::string cmd = std::string("python3 '") + ORACLE_SCRIPT +
                            "' --weights 0.6,0.3,0.1 --runs 10 --trials 40000";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        c.expect(false, "could not launch the Monte-Carlo oracle script");
        return -1.0;
    }
    char buf[64] = {0};
    const bool got = fgets(buf, sizeof(buf), pipe) != nullptr;
    const int rc = pclose(pipe);
    if (!got || rc != 0) {
        c.expect(false, "Monte-Carlo oracle script failed");
        return -1.0;
    }
    return std::atof(buf);
}

void criterion_mock_end_to_end(Criterion& c) {
    const auto start = std::chrono::steady_clock::now();

    // deterministic server: full `all` pipeline through the CLI binary
    {
        mock::MockInferenceServer server;
        TempDir dir;
        auto cfg = mock_run_config(dir, server.endpoint(), /*questions=*/5, /*runs=*/10,
                                   /*models=*/2);
        const auto yaml = dir.path / "config.yaml";
        write_yaml_config(yaml, cfg);
        c.expect(run_cli("", "all", yaml) == 0, "`all` against the deterministic mock failed");

        store::ResponseStore responses(pipeline::responses_path(cfg));
        store::ScoreStore scores(pipeline::scores_path(cfg));
        c.expect(responses.completed_keys().size() == 100, "expected 100 completed keys");
        const auto data = pipeline::aggregate(cfg, responses, scores);
        for (const auto& model : data.models) {
            c.expect(model.repro.mean_agreement == 1.0,
                     model.display_name + ": deterministic agreement is not exactly 1.000");
            c.expect(model.repro.mean_uniqueness == 0.1,
                     model.display_name + ": deterministic uniqueness is not exactly 0.100");
        }
        const auto report = read_all(pipeline::report_path(cfg));
        c.expect(report.find("1.000") != std::string::npos,
                 "report does not show agreement 1.000");
        c.expect(report.find("0.100") != std::string::npos,
                 "report does not show uniqueness 0.100");
    }

    // stochastic server: empirical agreement vs Monte-Carlo expectation
    {
        mock::MockInferenceServer::Options options;
        options.mode = mock::MockInferenceServer::Mode::stochastic;
        options.weights = {0.6, 0.3, 0.1};
        options.rng_seed = 99;
        mock::MockInferenceServer server(options);
        TempDir dir;
        auto cfg = mock_run_config(dir, server.endpoint(), /*questions=*/200, /*runs=*/10,
                                   /*models=*/1);
        pipeline::stage_run(cfg);

        store::ResponseStore responses(pipeline::responses_path(cfg));
        std::map<std::string, std::vector<std::string>> by_question;
        for (const auto& record : responses.records()) {
            by_question[record.question_id].push_back(record.response_text);
        }
        c.expect(by_question.size() == 200, "stochastic run did not cover 200 questions");
        double total = 0.0;
        for (const auto& [qid, runs] : by_question) {
            total += repro::self_agreement(runs).agreement;
        }
        const double empirical = total / static_cast<double>(by_question.size());
        const double expected = monte_carlo_expected_agreement(c);
        if (expected > 0) {
            c.expect(std::abs(empirical - expected) <= 0.05,
                     "empirical agreement " + std::to_string(empirical) +
                         " not within 0.05 of Monte-Carlo expectation " +
                         std::to_string(expected));
        }
    }

    const auto elapsed = std::chrono::steady_clock::now() - start;
    c.expect(elapsed < std::chrono::minutes(2), "end-to-end mock run exceeded 2 minutes");
}

// ---- criterion 5: resumability ---------------------------------------------

void criterion_resumability(Criterion& c) {
    mock::MockInferenceServer server;
    for (int k : {1, 17, 59}) {
        TempDir dir;
        auto cfg = mock_run_config(dir, server.endpoint(), /*questions=*/4, /*runs=*/10,
                                   /*models=*/2);  // 80 keys
        cfg.max_inflight = 1;
        const auto yaml = dir.path / "config.yaml";
        write_yaml_config(yaml, cfg);

        const std::string env =
            "CLINICAL_EVAL_FAULT_ABORT_AFTER_APPENDS=" + std::to_string(k);
        const int crash_rc = run_cli(env, "run", yaml);
        c.expect(crash_rc == 3, "k=" + std::to_string(k) + ": fault hook did not abort (rc " +
                                    std::to_string(crash_rc) + ")");
        {
            store::ResponseStore partial(pipeline::responses_path(cfg));
            c.expect(partial.record_count() == static_cast<size_t>(k),
                     "k=" + std::to_string(k) + ": acknowledged records were lost");
        }

        const int resume_rc = run_cli("", "run", yaml);
        c.expect(resume_rc == 0, "k=" + std::to_string(k) + ": resume did not complete");

        store::ResponseStore full(pipeline::responses_path(cfg));
        c.expect(full.record_count() == 80,
                 "k=" + std::to_string(k) + ": expected exactly 80 records, got " +
                     std::to_string(full.record_count()));
        std::set<store::RunKey> keys;
        for (const auto& record : full.records()) {
            keys.insert({record.model_id, record.question_id, record.run_index});
        }
        c.expect(keys.size() == 80,
                 "k=" + std::to_string(k) + ": duplicate RunKeys in the store");

        // torn trailing line: inject and reopen
        {
            std::ofstream out(pipeline::responses_path(cfg), std::ios::binary | std::ios::app);
            out << "{\"model_id\":\"torn";
        }
        store::ResponseStore reopened(pipeline::responses_path(cfg));
        c.expect(reopened.record_count() == 80,
                 "k=" + std::to_string(k) + ": torn trailing line was not discarded cleanly");
    }
}

// ---- criterion 6: judge-parse fixtures -------------------------------------

void criterion_judge(Criterion& c) {
    c.expect(std::size(fixtures::kJudgeFixtures) >= 20, "fewer than 20 judge fixtures");
    for (const auto& fixture : fixtures::kJudgeFixtures) {
        const auto result = judge::parse_judge_score(fixture.raw);
        c.expect(result.parse_method == fixture.method,
                 std::string("parse method mismatch on: ") + fixture.raw);
        if (fixture.method != judge::ParseMethod::unparsed) {
            c.expect(result.score.has_value() &&
                         std::abs(*result.score - fixture.score) < 1e-12,
                     std::string("score mismatch on: ") + fixture.raw);
            c.expect(result.score && *result.score >= 0.0 && *result.score <= 1.0,
                     std::string("score out of [0,1] on: ") + fixture.raw);
        } else {
            c.expect(!result.score.has_value(),
                     std::string("unparsed fixture produced a score: ") + fixture.raw);
        }
    }
}

// ---- criterion 7: inference contract ---------------------------------------

void criterion_inference_contract(Criterion& c) {
    // default decoding parameters on every request
    {
        mock::MockInferenceServer server;
        TempDir dir;
        auto cfg = mock_run_config(dir, server.endpoint(), /*questions=*/3, /*runs=*/2,
                                   /*models=*/1);
        pipeline::stage_run(cfg);
        const auto requests = server.generate_requests();
        c.expect(requests.size() == 6, "expected six generation requests");
        for (const auto& body : requests) {
            c.expect(body["options"]["temperature"] == 0.2, "temperature is not 0.2");
            c.expect(body["options"]["top_p"] == 1.0, "top_p is not 1.0");
            c.expect(body["options"]["num_predict"] == 512, "max_tokens is not 512");
        }

        // scoring issues zero target-model generation calls
        pipeline::stage_score(cfg);
        c.expect(server.generate_requests().size() == requests.size(),
                 "stage_score re-queried a target model");
    }

    // exactly max_retries retries on timeout
    {
        mock::MockInferenceServer::Options options;
        options.mode = mock::MockInferenceServer::Mode::hang;
        options.hang_ms = 2500;
        mock::MockInferenceServer server(options);
        infer::InferenceClient client(server.endpoint());
        infer::GenParams params;
        params.timeout_seconds = 1;
        params.max_retries = 2;
        params.retry_delay_ms = 0;
        const auto record = client.generate("m", "s", "p", params);
        c.expect(record.status == infer::RunStatus::failed, "timeout did not fail the record");
        c.expect(record.attempt_count == 3, "expected 1 initial attempt + 2 retries");
        c.expect(server.generate_requests().size() == 3,
                 "server saw " + std::to_string(server.generate_requests().size()) +
                     " requests, expected 3");
    }
}

}  // namespace

int main() {
    struct Entry {
        const char* label;
        std::function<void(Criterion&)> run;
    };
    const std::vector<Entry> entries = {
        {"1. metric-oracle equivalence (>=200 random pairs, <10 s)", criterion_metrics},
        {"2. reproducibility-metric exactness (>=500 multisets + boundary identities)",
         criterion_repro},
        {"3. anchored aggregation fixtures (487/434/468 -> 0.974/0.868/0.936; overlap 0.000)",
         criterion_anchored_fixtures},
        {"4. end-to-end mock run (deterministic exact; stochastic vs Monte-Carlo oracle)",
         criterion_mock_end_to_end},
        {"5. resumability (kill after k in {1,17,59} appends; torn-line recovery)",
         criterion_resumability},
        {"6. judge-parse fixture suite (>=20 fixtures, scores in [0,1])", criterion_judge},
        {"7. inference contract (default decoding params; retry count; no re-query on score)",
         criterion_inference_contract},
    };

    int failed = 0;
    for (const auto& entry : entries) {
        Criterion criterion;
        try {
            entry.run(criterion);
        } catch (const std::exception& e) {
            criterion.expect(false, std::string("unexpected exception: ") + e.what());
        }
        if (criterion.passed()) {
            std::cout << "PASS: " << entry.label << "\n";
        } else {
            ++failed;
            std::cout << "FAIL: " << entry.label << "\n";
            for (const auto& failure : criterion.failures) {
                std::cout << "      - " << failure << "\n";
            }
        }
    }
    std::cout << "SKIP: 8. live replication path (manual; requires a locally served model pair)"
              << "\n";
    return failed == 0 ? 0 : 1;
}
