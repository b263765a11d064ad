#include "clinical_eval/inference_client.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace clineval::infer {

using json = nlohmann::json;

std::string to_string(RunStatus status) {
    return status == RunStatus::ok ? "ok" : "failed";
}

RunStatus run_status_from_string(const std::string& s) {
    if (s == "ok") return RunStatus::ok;
    if (s == "failed") return RunStatus::failed;
    throw std::invalid_argument("unknown run status: " + s);
}

std::string utc_now_iso8601() {
    using namespace std::chrono;
    const auto now = system_clock::now();
    const auto ms = duration_cast<milliseconds>(now.time_since_epoch()) % 1000;
    const std::time_t secs = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                  static_cast<int>(ms.count()));
    return buf;
}

InferenceClient::InferenceClient(std::string endpoint) : endpoint_(std::move(endpoint)) {
    while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
}

namespace {

httplib::Client make_client(const std::string& endpoint, const GenParams& params) {
    httplib::Client cli(endpoint);
    cli.set_connection_timeout(params.timeout_seconds, 0);
    cli.set_read_timeout(params.timeout_seconds, 0);
    cli.set_write_timeout(params.timeout_seconds, 0);
    return cli;
}

size_t whitespace_token_count(const std::string& text) {
    size_t count = 0;
    bool in_token = false;
    for (char c : text) {
        const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        if (!ws && !in_token) ++count;
        in_token = !ws;
    }
    return count;
}

}  // namespace

GenerationRecord InferenceClient::generate(const std::string& model_id,
                                           const std::string& system_prompt,
                                           const std::string& user_prompt,
                                           const GenParams& params) const {
    GenerationRecord record;
    record.model_id = model_id;
    record.timestamp_utc = utc_now_iso8601();

    const json body = {
        {"model", model_id},
        {"prompt", user_prompt},
        {"system", system_prompt},
        {"stream", false},
        {"options",
         {{"temperature", params.temperature},
          {"top_p", params.top_p},
          {"num_predict", params.max_tokens}}},
    };
    const std::string payload = body.dump();

    const auto start = std::chrono::steady_clock::now();
    std::string last_error;
    for (int attempt = 0; attempt <= params.max_retries; ++attempt) {
        record.attempt_count = attempt + 1;
        if (attempt > 0 && params.retry_delay_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(params.retry_delay_ms));
        }
        auto cli = make_client(endpoint_, params);
        auto res = cli.Post("/api/generate", payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        json reply;
        try {
            reply = json::parse(res->body);
        } catch (const json::exception& e) {
            last_error = std::string("malformed response body: ") + e.what();
            continue;
        }
        const auto elapsed =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);
        record.status = RunStatus::ok;
        record.response_text = reply.value("response", "");
        record.latency_ms = std::max(elapsed.count(), 1e-3);
        if (reply.contains("eval_count") && reply.contains("eval_duration") &&
            reply["eval_duration"].is_number() && reply["eval_duration"].get<double>() > 0) {
            const double tokens = reply["eval_count"].get<double>();
            const double seconds = reply["eval_duration"].get<double>() / 1e9;
            record.tokens_per_second = tokens / seconds;
            record.tokens_per_second_estimated = false;
        } else {
            const double seconds = record.latency_ms / 1000.0;
            record.tokens_per_second =
                static_cast<double>(whitespace_token_count(record.response_text)) / seconds;
            record.tokens_per_second_estimated = true;
        }
        return record;
    }
    const auto elapsed =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);
    record.status = RunStatus::failed;
    record.latency_ms = std::max(elapsed.count(), 1e-3);
    record.error_detail = last_error;
    return record;
}

std::vector<std::vector<double>> InferenceClient::embed_tokens(const std::string& encoder_model_id,
                                                               const std::string& text,
                                                               const GenParams& params) const {
    const auto tokens = metrics::tokenize(text);
    if (tokens.empty()) return {};

    const json body = {{"model", encoder_model_id}, {"input", tokens}};
    auto cli = make_client(endpoint_, params);
    auto res = cli.Post("/api/embed", body.dump(), "application/json");
    if (!res) {
        throw metrics::EncoderFailure("embed transport error: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw metrics::EncoderFailure("embed http status " + std::to_string(res->status));
    }
    try {
        const json reply = json::parse(res->body);
        const auto& embeddings = reply.at("embeddings");
        std::vector<std::vector<double>> out;
        out.reserve(embeddings.size());
        for (const auto& vec : embeddings) out.push_back(vec.get<std::vector<double>>());
        if (out.size() != tokens.size()) {
            throw metrics::EncoderFailure("embed returned " + std::to_string(out.size()) +
                                          " vectors for " + std::to_string(tokens.size()) +
                                          " tokens");
        }
        return out;
    } catch (const json::exception& e) {
        throw metrics::EncoderFailure(std::string("malformed embed payload: ") + e.what());
    }
}

}  // namespace clineval::infer
