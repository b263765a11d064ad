#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace clineval::metrics {

// Ordered lowercase alphanumeric tokens. Tokenizing "" yields {}.
using TokenSequence = std::vector<std::string>;

struct SemanticScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// All quality metrics for one (response, gold) pair. Semantic fields and
// the judge score are absent when their backing service was unavailable.
struct ScoreVector {
    int exact_match = 0;
    double token_f1 = 0.0;
    double string_similarity = 0.0;
    double bleu = 0.0;
    double rouge_l_f1 = 0.0;
    std::optional<double> semantic_precision;
    std::optional<double> semantic_recall;
    std::optional<double> semantic_f1;
    std::optional<double> judge_score;
    std::string judge_raw;
};

struct EncoderFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Produces one vector per token of its own sub-tokenization of `text`.
// Implementations declare whether they tolerate concurrent calls; callers
// serialize access to encoders that do not.
class TokenEncoder {
public:
    virtual ~TokenEncoder() = default;
    // Throws EncoderFailure when vectors cannot be produced.
    virtual std::vector<std::vector<double>> encode(const std::string& text) = 0;
    virtual bool thread_safe() const { return false; }
};

// Lowercase, drop every char that is neither letter, digit nor space,
// collapse whitespace runs to one space, trim. Total function.
std::string normalize(std::string_view text);

// Maximal runs of letters/digits in the lowercased input, in order.
TokenSequence tokenize(std::string_view text);

// 1 iff both sides normalize to the same string.
int exact_match(std::string_view candidate, std::string_view reference);

// Token-level multiset-overlap F1; 1 when both token lists are empty,
// 0 when exactly one is empty or nothing overlaps.
double token_f1(std::string_view candidate, std::string_view reference);

// Ratcliff/Obershelp ratio 2K/(|a|+|b|) over raw (un-normalized)
// codepoints, no junk heuristic. Both empty -> 1.0.
double string_similarity(std::string_view candidate, std::string_view reference);

// Smoothed sentence BLEU, orders 1..4, uniform weights. Orders n >= 2
// with zero matches get add-one smoothing; orders with no candidate
// n-grams are excluded from the geometric mean. Brevity penalty
// min(1, e^(1 - r/c)). Empty candidate or reference -> 0.
double bleu(std::string_view candidate, std::string_view reference);

// LCS F1 over tokens (beta = 1). 0 when either side is empty or LCS = 0.
double rouge_l(std::string_view candidate, std::string_view reference);

// Greedy-matching embedding similarity: precision = mean over candidate
// token vectors of best cosine against reference vectors, recall the
// transpose, f1 the harmonic mean. No IDF, no baseline rescaling.
// Empty candidate or reference -> (0, 0, 0). Propagates EncoderFailure.
SemanticScore semantic_score(std::string_view candidate, std::string_view reference,
                             TokenEncoder& encoder);

}  // namespace clineval::metrics
