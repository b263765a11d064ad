#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clinical_eval/text_metrics.hpp"

namespace clineval::infer {

// Fixed decoding parameters shared by targets and judge.
struct GenParams {
    double temperature = 0.2;
    double top_p = 1.0;
    int max_tokens = 512;
    int timeout_seconds = 120;
    int max_retries = 2;
    int retry_delay_ms = 2000;
};

enum class RunStatus { ok, failed };

struct GenerationRecord {
    std::string model_id;
    std::string question_id;
    int run_index = 0;
    std::string response_text;
    double latency_ms = 0.0;
    std::optional<double> tokens_per_second;
    bool tokens_per_second_estimated = false;
    int attempt_count = 1;
    std::string timestamp_utc;
    RunStatus status = RunStatus::failed;
    std::optional<std::string> error_detail;
};

std::string to_string(RunStatus status);
RunStatus run_status_from_string(const std::string& s);

// Ollama-compatible client. Failures never escape generate(); they are
// encoded in the returned record.
class InferenceClient {
public:
    explicit InferenceClient(std::string endpoint);

    // POST /api/generate, one request per attempt, up to
    // max_retries + 1 attempts on timeout / network error / non-2xx.
    GenerationRecord generate(const std::string& model_id, const std::string& system_prompt,
                              const std::string& user_prompt, const GenParams& params) const;

    // POST /api/embed with the alphanumeric tokens of `text` as batch
    // input; one vector per token. Empty text -> empty list without a
    // request. Throws metrics::EncoderFailure on non-2xx or malformed
    // payload.
    std::vector<std::vector<double>> embed_tokens(const std::string& encoder_model_id,
                                                  const std::string& text,
                                                  const GenParams& params) const;

    const std::string& endpoint() const { return endpoint_; }

private:
    std::string endpoint_;
};

// TokenEncoder backed by the embeddings endpoint.
class HttpTokenEncoder : public metrics::TokenEncoder {
public:
    HttpTokenEncoder(const InferenceClient& client, std::string encoder_model_id, GenParams params)
        : client_(client), model_id_(std::move(encoder_model_id)), params_(params) {}

    std::vector<std::vector<double>> encode(const std::string& text) override {
        return client_.embed_tokens(model_id_, text, params_);
    }
    bool thread_safe() const override { return true; }

private:
    const InferenceClient& client_;
    std::string model_id_;
    GenParams params_;
};

// RFC 3339 UTC timestamp for the current instant, millisecond precision.
std::string utc_now_iso8601();

}  // namespace clineval::infer
