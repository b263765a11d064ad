#include "clinical_eval/text_metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>

#include "clinical_eval/unicode.hpp"

namespace clineval::metrics {

namespace {

bool is_space(char32_t cp) {
    switch (cp) {
        case U' ':
        case U'\t':
        case U'\n':
        case U'\r':
        case U'\f':
        case U'\v':
        case 0x85:
        case 0xA0:
        case 0x1680:
        case 0x2028:
        case 0x2029:
        case 0x202F:
        case 0x205F:
        case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

std::unordered_map<std::string, int> token_counts(const TokenSequence& tokens) {
    std::unordered_map<std::string, int> counts;
    for (const auto& t : tokens) ++counts[t];
    return counts;
}

struct MatchBlock {
    size_t a_start;
    size_t b_start;
    size_t length;
};

// difflib-compatible longest matching block: among the maximal blocks,
// the one starting earliest in `a`, then earliest in `b`.
MatchBlock longest_match(const std::vector<char32_t>& a, const std::vector<char32_t>& b,
                         size_t alo, size_t ahi, size_t blo, size_t bhi,
                         const std::unordered_map<char32_t, std::vector<size_t>>& b2j) {
    MatchBlock best{alo, blo, 0};
    std::unordered_map<size_t, size_t> j2len;
    std::unordered_map<size_t, size_t> new_j2len;
    for (size_t i = alo; i < ahi; ++i) {
        new_j2len.clear();
        auto it = b2j.find(a[i]);
        if (it != b2j.end()) {
            for (size_t j : it->second) {
                if (j < blo) continue;
                if (j >= bhi) break;
                size_t k = 1;
                if (j > 0) {
                    auto prev = j2len.find(j - 1);
                    if (prev != j2len.end()) k = prev->second + 1;
                }
                new_j2len[j] = k;
                if (k > best.length) best = {i - k + 1, j - k + 1, k};
            }
        }
        std::swap(j2len, new_j2len);
    }
    return best;
}

// Total matched characters over the recursive block decomposition.
size_t matched_total(const std::vector<char32_t>& a, const std::vector<char32_t>& b) {
    std::unordered_map<char32_t, std::vector<size_t>> b2j;
    for (size_t j = 0; j < b.size(); ++j) b2j[b[j]].push_back(j);

    size_t total = 0;
    std::vector<std::array<size_t, 4>> queue{{0, a.size(), 0, b.size()}};
    while (!queue.empty()) {
        auto [alo, ahi, blo, bhi] = queue.back();
        queue.pop_back();
        MatchBlock m = longest_match(a, b, alo, ahi, blo, bhi, b2j);
        if (m.length == 0) continue;
        total += m.length;
        queue.push_back({alo, m.a_start, blo, m.b_start});
        queue.push_back({m.a_start + m.length, ahi, m.b_start + m.length, bhi});
    }
    return total;
}

std::map<std::vector<std::string_view>, int> ngram_counts(const TokenSequence& tokens, size_t n) {
    std::map<std::vector<std::string_view>, int> counts;
    if (tokens.size() < n) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::vector<std::string_view> gram(tokens.begin() + i, tokens.begin() + i + n);
        ++counts[gram];
    }
    return counts;
}

}  // namespace

std::string normalize(std::string_view text) {
    const auto cps = uni::decode_utf8(text);
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char32_t cp : cps) {
        if (is_space(cp)) {
            pending_space = !out.empty();
        } else if (uni::is_alnum(cp)) {
            if (pending_space) {
                out.push_back(' ');
                pending_space = false;
            }
            uni::append_utf8(out, uni::to_lower(cp));
        }
        // anything else is dropped without breaking a token boundary
    }
    return out;
}

TokenSequence tokenize(std::string_view text) {
    const auto cps = uni::decode_utf8(text);
    TokenSequence tokens;
    std::string current;
    for (char32_t cp : cps) {
        if (uni::is_alnum(cp)) {
            uni::append_utf8(current, uni::to_lower(cp));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

int exact_match(std::string_view candidate, std::string_view reference) {
    return normalize(candidate) == normalize(reference) ? 1 : 0;
}

double token_f1(std::string_view candidate, std::string_view reference) {
    const auto cand = tokenize(candidate);
    const auto ref = tokenize(reference);
    if (cand.empty() && ref.empty()) return 1.0;
    if (cand.empty() || ref.empty()) return 0.0;
    const auto ref_counts = token_counts(ref);
    const auto cand_counts = token_counts(cand);
    long long overlap = 0;
    for (const auto& [tok, c] : cand_counts) {
        auto it = ref_counts.find(tok);
        if (it != ref_counts.end()) overlap += std::min(c, it->second);
    }
    if (overlap == 0) return 0.0;
    const double precision = static_cast<double>(overlap) / static_cast<double>(cand.size());
    const double recall = static_cast<double>(overlap) / static_cast<double>(ref.size());
    return 2.0 * precision * recall / (precision + recall);
}

double string_similarity(std::string_view candidate, std::string_view reference) {
    const auto a = uni::decode_utf8(candidate);
    const auto b = uni::decode_utf8(reference);
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    const size_t matched = matched_total(a, b);
    return 2.0 * static_cast<double>(matched) / static_cast<double>(a.size() + b.size());
}

double bleu(std::string_view candidate, std::string_view reference) {
    const auto cand = tokenize(candidate);
    const auto ref = tokenize(reference);
    if (cand.empty() || ref.empty()) return 0.0;

    double log_sum = 0.0;
    size_t used_orders = 0;
    for (size_t n = 1; n <= 4; ++n) {
        if (cand.size() < n) break;  // no candidate n-grams: order excluded
        const auto cand_grams = ngram_counts(cand, n);
        const auto ref_grams = ngram_counts(ref, n);
        long long matches = 0;
        long long total = 0;
        for (const auto& [gram, c] : cand_grams) {
            total += c;
            auto it = ref_grams.find(gram);
            if (it != ref_grams.end()) {
                matches += std::min(static_cast<long long>(c),
                                    static_cast<long long>(it->second));
            }
        }
        double p;
        if (matches > 0) {
            p = static_cast<double>(matches) / static_cast<double>(total);
        } else if (n >= 2) {
            p = static_cast<double>(matches + 1) / static_cast<double>(total + 1);
        } else {
            return 0.0;  // unigram precision zero, unsmoothed
        }
        log_sum += std::log(p);
        ++used_orders;
    }
    if (used_orders == 0) return 0.0;
    const double geo_mean = std::exp(log_sum / static_cast<double>(used_orders));
    const double ratio = static_cast<double>(ref.size()) / static_cast<double>(cand.size());
    const double brevity = std::min(1.0, std::exp(1.0 - ratio));
    return brevity * geo_mean;
}

double rouge_l(std::string_view candidate, std::string_view reference) {
    const auto cand = tokenize(candidate);
    const auto ref = tokenize(reference);
    if (cand.empty() || ref.empty()) return 0.0;
    // Two-row LCS table.
    std::vector<size_t> prev(ref.size() + 1, 0);
    std::vector<size_t> curr(ref.size() + 1, 0);
    for (size_t i = 1; i <= cand.size(); ++i) {
        for (size_t j = 1; j <= ref.size(); ++j) {
            if (cand[i - 1] == ref[j - 1]) {
                curr[j] = prev[j - 1] + 1;
            } else {
                curr[j] = std::max(prev[j], curr[j - 1]);
            }
        }
        std::swap(prev, curr);
    }
    const size_t lcs = prev[ref.size()];
    if (lcs == 0) return 0.0;
    const double precision = static_cast<double>(lcs) / static_cast<double>(cand.size());
    const double recall = static_cast<double>(lcs) / static_cast<double>(ref.size());
    return 2.0 * precision * recall / (precision + recall);
}

namespace {

double cosine(const std::vector<double>& x, const std::vector<double>& y) {
    double dot = 0.0, nx = 0.0, ny = 0.0;
    const size_t n = std::min(x.size(), y.size());
    for (size_t i = 0; i < n; ++i) {
        dot += x[i] * y[i];
        nx += x[i] * x[i];
        ny += y[i] * y[i];
    }
    if (nx == 0.0 || ny == 0.0) return 0.0;
    return dot / (std::sqrt(nx) * std::sqrt(ny));
}

}  // namespace

SemanticScore semantic_score(std::string_view candidate, std::string_view reference,
                             TokenEncoder& encoder) {
    if (candidate.empty() || reference.empty()) return {0.0, 0.0, 0.0};
    const auto cand_vecs = encoder.encode(std::string(candidate));
    const auto ref_vecs = encoder.encode(std::string(reference));
    if (cand_vecs.empty() || ref_vecs.empty()) return {0.0, 0.0, 0.0};

    double precision_sum = 0.0;
    std::vector<double> col_max(ref_vecs.size(), -1.0);
    for (const auto& cv : cand_vecs) {
        double row_max = -1.0;
        for (size_t j = 0; j < ref_vecs.size(); ++j) {
            const double s = cosine(cv, ref_vecs[j]);
            row_max = std::max(row_max, s);
            col_max[j] = std::max(col_max[j], s);
        }
        precision_sum += row_max;
    }
    double recall_sum = 0.0;
    for (double m : col_max) recall_sum += m;

    SemanticScore out;
    out.precision = precision_sum / static_cast<double>(cand_vecs.size());
    out.recall = recall_sum / static_cast<double>(ref_vecs.size());
    out.f1 = (out.precision <= 0.0 || out.recall <= 0.0)
                 ? 0.0
                 : 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

}  // namespace clineval::metrics
