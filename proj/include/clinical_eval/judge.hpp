#pragma once

#include <optional>
#include <string>

#include "clinical_eval/dataset.hpp"
#include "clinical_eval/inference_client.hpp"

namespace clineval::judge {

inline constexpr const char* kDefaultRubricTemplate =
    "You are grading a clinical answer.\n"
    "Question: {question}\n"
    "Reference answer: {gold_answer}\n"
    "Candidate answer: {response}\n"
    "Score from 0 to 1, where 1 means fully correct. "
    "Assess factual correctness and clinical safety.\n"
    "Reply with a line of the form `Score: <value>`.";

struct JudgeConfig {
    std::string judge_model_id;
    std::string rubric_template = kDefaultRubricTemplate;  // needs {question}, {gold_answer}, {response}
    infer::GenParams params;
    bool enabled = true;
};

enum class ParseMethod { primary_pattern, percent_fallback, fraction_fallback, unparsed };

std::string to_string(ParseMethod method);

struct JudgeResult {
    std::optional<double> score;  // absent iff unparsed
    std::string raw_output;
    ParseMethod parse_method = ParseMethod::unparsed;
};

// Fills the rubric placeholders. Throws std::invalid_argument when the
// template is missing any of the three placeholders.
std::string fill_rubric(const std::string& rubric_template, const dataset::QAItem& item,
                        const std::string& response_text);

// Rule cascade, first match wins:
//   1. decimal literal in [0,1] adjacent to "score"/"rating" or alone
//      on a line
//   2. X%  (0 <= X <= 100) -> X/100
//   3. X/100, X/10 or X/1 with numerator in range
//   4. unparsed
// Scores clamp to [0,1]. Total function.
JudgeResult parse_judge_score(const std::string& raw);

// One generation call to the judge model, output parsed with the
// cascade. No retry on unparsable output. A failed call yields
// unparsed with the error text as raw_output.
JudgeResult judge_response(const infer::InferenceClient& client, const JudgeConfig& config,
                           const dataset::QAItem& item, const std::string& response_text);

}  // namespace clineval::judge
