#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "clinical_eval/dataset.hpp"
#include "clinical_eval/judge.hpp"
#include "clinical_eval/repro_metrics.hpp"
#include "clinical_eval/text_metrics.hpp"

namespace py = pybind11;

namespace {

// Adapts a python callable (text -> list of vectors) to TokenEncoder.
class CallbackEncoder : public clineval::metrics::TokenEncoder {
public:
    explicit CallbackEncoder(py::function fn) : fn_(std::move(fn)) {}

    std::vector<std::vector<double>> encode(const std::string& text) override {
        try {
            return fn_(text).cast<std::vector<std::vector<double>>>();
        } catch (const py::error_already_set& e) {
            throw clineval::metrics::EncoderFailure(e.what());
        }
    }

private:
    py::function fn_;
};

}  // namespace

PYBIND11_MODULE(clinical_eval, m) {
    m.doc() = "Text-quality and reproducibility metrics for the clinical-eval pipeline";

    using namespace clineval;

    m.def("normalize", &metrics::normalize, py::arg("text"));
    m.def("tokenize", &metrics::tokenize, py::arg("text"));
    m.def("exact_match", &metrics::exact_match, py::arg("candidate"), py::arg("reference"));
    m.def("token_f1", &metrics::token_f1, py::arg("candidate"), py::arg("reference"));
    m.def("string_similarity", &metrics::string_similarity, py::arg("candidate"),
          py::arg("reference"));
    m.def("bleu", &metrics::bleu, py::arg("candidate"), py::arg("reference"));
    m.def("rouge_l", &metrics::rouge_l, py::arg("candidate"), py::arg("reference"));
    m.def(
        "semantic_score",
        [](const std::string& candidate, const std::string& reference, py::function encode) {
            CallbackEncoder encoder(std::move(encode));
            const auto s = metrics::semantic_score(candidate, reference, encoder);
            return py::make_tuple(s.precision, s.recall, s.f1);
        },
        py::arg("candidate"), py::arg("reference"), py::arg("encode"),
        "encode(text) must return one vector per token of text");

    m.def(
        "self_agreement",
        [](const std::vector<std::string>& responses) {
            const auto r = repro::self_agreement(responses);
            return py::make_tuple(r.agreement, r.modal_response, r.modal_count);
        },
        py::arg("responses"));
    m.def(
        "uniqueness",
        [](const std::vector<std::string>& responses) {
            const auto r = repro::uniqueness(responses);
            return py::make_tuple(r.uniqueness, r.distinct_count);
        },
        py::arg("responses"));
    m.def("cross_model_overlap", &repro::cross_model_overlap, py::arg("responses_a"),
          py::arg("responses_b"));

    m.def(
        "parse_judge_score",
        [](const std::string& raw) {
            const auto r = judge::parse_judge_score(raw);
            py::dict out;
            out["score"] = r.score ? py::object(py::float_(*r.score)) : py::none();
            out["parse_method"] = judge::to_string(r.parse_method);
            out["raw_output"] = r.raw_output;
            return out;
        },
        py::arg("raw"));

    m.def("sample_hash", &dataset::sample_hash, py::arg("seed"), py::arg("question_id"));
    m.def(
        "sample_ids",
        [](std::vector<std::string> question_ids, size_t n, int64_t seed) {
            std::vector<dataset::QAItem> items;
            items.reserve(question_ids.size());
            for (auto& id : question_ids) {
                items.push_back({std::move(id), "q", "a", std::nullopt, std::nullopt});
            }
            const auto picked = dataset::sample(std::move(items), n, seed);
            std::vector<std::string> out;
            out.reserve(picked.size());
            for (const auto& item : picked) out.push_back(item.question_id);
            return out;
        },
        py::arg("question_ids"), py::arg("n"), py::arg("seed"),
        "Seeded deterministic subset of question ids (hash order)");
}
