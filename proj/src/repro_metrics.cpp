#include "clinical_eval/repro_metrics.hpp"

#include <map>
#include <set>

#include "clinical_eval/text_metrics.hpp"

namespace clineval::repro {

namespace {

std::map<std::string, size_t> normalized_counts(const std::vector<std::string>& responses) {
    if (responses.empty()) throw EmptyRunSet();
    std::map<std::string, size_t> counts;
    for (const auto& r : responses) ++counts[metrics::normalize(r)];
    return counts;
}

}  // namespace

AgreementResult self_agreement(const std::vector<std::string>& responses) {
    const auto counts = normalized_counts(responses);
    AgreementResult out;
    // std::map iterates in lexicographic order, so the first strict
    // maximum is the lexicographically smallest modal string.
    for (const auto& [text, count] : counts) {
        if (count > out.modal_count) {
            out.modal_count = count;
            out.modal_response = text;
        }
    }
    out.agreement = static_cast<double>(out.modal_count) / static_cast<double>(responses.size());
    return out;
}

UniquenessResult uniqueness(const std::vector<std::string>& responses) {
    const auto counts = normalized_counts(responses);
    UniquenessResult out;
    out.distinct_count = counts.size();
    out.uniqueness = static_cast<double>(out.distinct_count) / static_cast<double>(responses.size());
    return out;
}

double cross_model_overlap(const std::vector<std::string>& responses_a,
                           const std::vector<std::string>& responses_b) {
    if (responses_a.empty() || responses_b.empty()) throw EmptyRunSet();
    std::set<std::string> a, b;
    for (const auto& r : responses_a) a.insert(metrics::normalize(r));
    for (const auto& r : responses_b) b.insert(metrics::normalize(r));
    size_t intersection = 0;
    for (const auto& x : a) intersection += b.count(x);
    const size_t uni = a.size() + b.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(uni);
}

ReproStats compute_repro_stats(const std::string& model_id, const std::string& question_id,
                               const std::vector<std::string>& responses) {
    const auto agree = self_agreement(responses);
    const auto uniq = uniqueness(responses);
    ReproStats stats;
    stats.model_id = model_id;
    stats.question_id = question_id;
    stats.n_runs = responses.size();
    stats.agreement = agree.agreement;
    stats.modal_response_normalized = agree.modal_response;
    stats.modal_count = agree.modal_count;
    stats.uniqueness = uniq.uniqueness;
    stats.distinct_count = uniq.distinct_count;
    return stats;
}

ReproAggregate aggregate_repro(const std::vector<ReproStats>& per_question) {
    if (per_question.empty()) throw EmptyRunSet();
    const std::string& model = per_question.front().model_id;
    ReproAggregate agg;
    double agree_sum = 0.0;
    double uniq_sum = 0.0;
    for (const auto& q : per_question) {
        if (q.model_id != model) {
            throw MixedModelError("aggregate_repro: mixed model ids '" + model + "' and '" +
                                  q.model_id + "'");
        }
        agree_sum += q.agreement;
        uniq_sum += q.uniqueness;
        agg.global_distinct += q.distinct_count;
        agg.global_runs += q.n_runs;
    }
    agg.mean_agreement = agree_sum / static_cast<double>(per_question.size());
    agg.mean_uniqueness = uniq_sum / static_cast<double>(per_question.size());
    return agg;
}

}  // namespace clineval::repro
