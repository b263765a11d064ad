#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace clineval::repro {

struct EmptyRunSet : std::invalid_argument {
    EmptyRunSet() : std::invalid_argument("run set is empty") {}
};

struct MixedModelError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Per-(model, question) reproducibility over N repeated runs.
struct ReproStats {
    std::string model_id;
    std::string question_id;
    size_t n_runs = 0;
    double agreement = 0.0;   // modal_count / n_runs
    double uniqueness = 0.0;  // distinct_count / n_runs
    size_t distinct_count = 0;
    std::string modal_response_normalized;
    size_t modal_count = 0;
};

struct AgreementResult {
    double agreement = 0.0;
    std::string modal_response;  // normalized; lexicographic tie-break
    size_t modal_count = 0;
};

struct UniquenessResult {
    double uniqueness = 0.0;
    size_t distinct_count = 0;
};

struct ReproAggregate {
    double mean_agreement = 0.0;
    double mean_uniqueness = 0.0;
    size_t global_distinct = 0;
    size_t global_runs = 0;
};

// Fraction of runs whose normalized output equals the modal normalized
// output. Throws EmptyRunSet on an empty list.
AgreementResult self_agreement(const std::vector<std::string>& responses);

// Distinct normalized outputs / N.
UniquenessResult uniqueness(const std::vector<std::string>& responses);

// Jaccard index between the two sets of normalized responses.
double cross_model_overlap(const std::vector<std::string>& responses_a,
                           const std::vector<std::string>& responses_b);

// Convenience: full per-question stats in one pass.
ReproStats compute_repro_stats(const std::string& model_id, const std::string& question_id,
                               const std::vector<std::string>& responses);

// Unweighted means over questions. All entries must share model_id
// (MixedModelError otherwise) and are expected to share n_runs.
ReproAggregate aggregate_repro(const std::vector<ReproStats>& per_question);

}  // namespace clineval::repro
