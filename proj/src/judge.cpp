#include "clinical_eval/judge.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

namespace clineval::judge {

std::string to_string(ParseMethod method) {
    switch (method) {
        case ParseMethod::primary_pattern: return "primary_pattern";
        case ParseMethod::percent_fallback: return "percent_fallback";
        case ParseMethod::fraction_fallback: return "fraction_fallback";
        case ParseMethod::unparsed: return "unparsed";
    }
    return "unparsed";
}

namespace {

bool is_digit(char c) {
    return c >= '0' && c <= '9';
}

struct NumberToken {
    size_t begin = 0;
    size_t end = 0;  // one past
    double value = 0.0;
};

// Reads a decimal token ("12", "0.8", ".75") starting exactly at `pos`,
// rejecting tokens glued to digits/dots on either side.
std::optional<NumberToken> read_number(const std::string& s, size_t pos) {
    size_t i = pos;
    bool any_digit = false;
    while (i < s.size() && is_digit(s[i])) {
        ++i;
        any_digit = true;
    }
    if (i < s.size() && s[i] == '.') {
        size_t j = i + 1;
        while (j < s.size() && is_digit(s[j])) ++j;
        if (j > i + 1) {
            i = j;
            any_digit = true;
        } else if (!any_digit) {
            return std::nullopt;
        }
    }
    if (!any_digit || i == pos) return std::nullopt;
    // Reject tokens glued to surrounding numbers ("1.2.3", "v1.75"),
    // but allow a plain sentence period after ("85/100.").
    if (pos > 0 && is_digit(s[pos - 1])) return std::nullopt;
    if (pos > 1 && s[pos - 1] == '.' && is_digit(s[pos - 2])) return std::nullopt;
    if (i < s.size() && is_digit(s[i])) return std::nullopt;
    if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) return std::nullopt;
    return NumberToken{pos, i, std::stod(s.substr(pos, i - pos))};
}

bool starts_number(const std::string& s, size_t pos) {
    if (pos >= s.size()) return false;
    if (is_digit(s[pos])) return true;
    return s[pos] == '.' && pos + 1 < s.size() && is_digit(s[pos + 1]);
}

// A unit-interval literal usable by the primary rule: in [0,1] and not
// glued to '%' or '/' (those belong to the fallbacks).
std::optional<NumberToken> read_unit_number(const std::string& s, size_t pos) {
    auto tok = read_number(s, pos);
    if (!tok || tok->value > 1.0) return std::nullopt;
    size_t after = tok->end;
    while (after < s.size() && s[after] == ' ') ++after;
    if (after < s.size() && (s[after] == '%' || s[after] == '/')) return std::nullopt;
    return tok;
}

std::string lowercase_ascii(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

constexpr size_t kMaxFiller = 12;

bool is_filler(char c) {
    return !is_digit(c) && c != '.' && c != '\n';
}

// Number following a context word, within a short same-line window.
std::optional<NumberToken> number_after(const std::string& s, size_t word_end) {
    size_t i = word_end;
    size_t skipped = 0;
    while (i < s.size() && skipped <= kMaxFiller) {
        if (starts_number(s, i)) return read_unit_number(s, i);
        if (!is_filler(s[i])) return std::nullopt;
        ++i;
        ++skipped;
    }
    return std::nullopt;
}

// Number ending just before a context word (e.g. "0.8 rating").
std::optional<NumberToken> number_before(const std::string& s, size_t word_begin) {
    size_t i = word_begin;
    size_t skipped = 0;
    while (i > 0 && skipped <= kMaxFiller) {
        const char c = s[i - 1];
        if (is_digit(c)) {
            // walk to the start of the numeric token
            size_t start = i - 1;
            while (start > 0 && (is_digit(s[start - 1]) || s[start - 1] == '.')) --start;
            return read_unit_number(s, start);
        }
        if (!is_filler(c)) return std::nullopt;
        --i;
        ++skipped;
    }
    return std::nullopt;
}

std::optional<NumberToken> primary_match(const std::string& raw) {
    const std::string lower = lowercase_ascii(raw);
    std::optional<NumberToken> best;
    auto consider = [&](std::optional<NumberToken> tok) {
        if (tok && (!best || tok->begin < best->begin)) best = tok;
    };

    for (const char* word : {"score", "rating"}) {
        const size_t len = std::string(word).size();
        size_t pos = lower.find(word);
        while (pos != std::string::npos) {
            consider(number_after(raw, pos + len));
            consider(number_before(raw, pos));
            pos = lower.find(word, pos + 1);
        }
    }

    // A number standing alone on a line.
    size_t line_start = 0;
    while (line_start <= raw.size()) {
        size_t line_end = raw.find('\n', line_start);
        if (line_end == std::string::npos) line_end = raw.size();
        size_t begin = line_start;
        size_t end = line_end;
        while (begin < end && std::isspace(static_cast<unsigned char>(raw[begin]))) ++begin;
        while (end > begin && std::isspace(static_cast<unsigned char>(raw[end - 1]))) --end;
        if (begin < end && starts_number(raw, begin)) {
            auto tok = read_number(raw, begin);
            if (tok && tok->end == end && tok->value <= 1.0) consider(tok);
        }
        if (line_end == raw.size()) break;
        line_start = line_end + 1;
    }
    return best;
}

std::optional<double> percent_match(const std::string& raw) {
    for (size_t i = 0; i < raw.size(); ++i) {
        if (!starts_number(raw, i)) continue;
        auto tok = read_number(raw, i);
        if (!tok) continue;
        size_t after = tok->end;
        while (after < raw.size() && raw[after] == ' ') ++after;
        if (after < raw.size() && raw[after] == '%' && tok->value <= 100.0) {
            return tok->value / 100.0;
        }
        i = tok->end - 1;
    }
    return std::nullopt;
}

std::optional<double> fraction_match(const std::string& raw) {
    for (size_t i = 0; i < raw.size(); ++i) {
        if (!starts_number(raw, i)) continue;
        auto num = read_number(raw, i);
        if (!num) continue;
        size_t after = num->end;
        while (after < raw.size() && raw[after] == ' ') ++after;
        if (after < raw.size() && raw[after] == '/') {
            size_t dpos = after + 1;
            while (dpos < raw.size() && raw[dpos] == ' ') ++dpos;
            auto denom = read_number(raw, dpos);
            if (denom &&
                (denom->value == 100.0 || denom->value == 10.0 || denom->value == 1.0) &&
                num->value >= 0.0 && num->value <= denom->value) {
                return num->value / denom->value;
            }
        }
        i = num->end - 1;
    }
    return std::nullopt;
}

double clamp01(double v) {
    return std::min(1.0, std::max(0.0, v));
}

}  // namespace

JudgeResult parse_judge_score(const std::string& raw) {
    JudgeResult result;
    result.raw_output = raw;
    if (auto primary = primary_match(raw)) {
        result.score = clamp01(primary->value);
        result.parse_method = ParseMethod::primary_pattern;
        return result;
    }
    if (auto pct = percent_match(raw)) {
        result.score = clamp01(*pct);
        result.parse_method = ParseMethod::percent_fallback;
        return result;
    }
    if (auto frac = fraction_match(raw)) {
        result.score = clamp01(*frac);
        result.parse_method = ParseMethod::fraction_fallback;
        return result;
    }
    result.parse_method = ParseMethod::unparsed;
    return result;
}

std::string fill_rubric(const std::string& rubric_template, const dataset::QAItem& item,
                        const std::string& response_text) {
    auto replace_all = [](std::string text, const std::string& from, const std::string& to,
                          bool& found) {
        size_t pos = 0;
        while ((pos = text.find(from, pos)) != std::string::npos) {
            found = true;
            text.replace(pos, from.size(), to);
            pos += to.size();
        }
        return text;
    };
    bool has_q = false, has_g = false, has_r = false;
    std::string filled = rubric_template;
    filled = replace_all(filled, "{question}", item.question, has_q);
    filled = replace_all(filled, "{gold_answer}", item.gold_answer, has_g);
    filled = replace_all(filled, "{response}", response_text, has_r);
    if (!has_q || !has_g || !has_r) {
        throw std::invalid_argument(
            "rubric template must contain {question}, {gold_answer} and {response}");
    }
    return filled;
}

JudgeResult judge_response(const infer::InferenceClient& client, const JudgeConfig& config,
                           const dataset::QAItem& item, const std::string& response_text) {
    const std::string prompt = fill_rubric(config.rubric_template, item, response_text);
    const auto record = client.generate(config.judge_model_id, "", prompt, config.params);
    if (record.status != infer::RunStatus::ok) {
        JudgeResult result;
        result.raw_output = record.error_detail.value_or("judge call failed");
        result.parse_method = ParseMethod::unparsed;
        return result;
    }
    return parse_judge_score(record.response_text);
}

}  // namespace clineval::judge
