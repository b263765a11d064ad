#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace clineval::mock {

// Ollama-shaped mock inference server for tests and offline dry runs.
//
// /api/generate behavior per mode:
//   deterministic  - fixed response, a pure function of (model, prompt)
//   stochastic     - response variant drawn from a categorical
//                    distribution over `weights`
//   fail_first_n   - HTTP 500 for the first n requests, then deterministic
//   always_fail    - HTTP 500 for every request
//   hang           - sleeps past any client timeout
//
// /api/embed always returns deterministic pseudo-embeddings (one
// 8-dim vector per input string, derived from an FNV hash), so equal
// tokens map to equal vectors.
class MockInferenceServer {
public:
    enum class Mode { deterministic, stochastic, fail_first_n, always_fail, hang };

    struct Options {
        Mode mode = Mode::deterministic;
        std::vector<double> weights = {0.6, 0.3, 0.1};
        size_t fail_count = 0;
        int hang_ms = 5000;
        bool report_telemetry = true;  // eval_count / eval_duration
        uint64_t rng_seed = 0;         // 0 -> nondeterministic seed
    };

    MockInferenceServer() : MockInferenceServer(Options()) {}

    explicit MockInferenceServer(Options options) : options_(std::move(options)) {
        rng_.seed(options_.rng_seed != 0 ? options_.rng_seed : std::random_device{}());

        // one-shot connections: keep-alive would pin pool threads on
        // sockets the client has already abandoned
        server_.set_keep_alive_max_count(1);

        server_.Post("/api/generate", [this](const httplib::Request& req, httplib::Response& res) {
            handle_generate(req, res);
        });
        server_.Post("/api/embed", [this](const httplib::Request& req, httplib::Response& res) {
            handle_embed(req, res);
        });

        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockInferenceServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int port() const { return port_; }

    std::vector<nlohmann::json> generate_requests() const {
        std::lock_guard lock(mutex_);
        return generate_requests_;
    }
    std::vector<nlohmann::json> embed_requests() const {
        std::lock_guard lock(mutex_);
        return embed_requests_;
    }

    static uint64_t fnv1a(const std::string& text) {
        uint64_t h = 14695981039346656037ULL;
        for (unsigned char c : text) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return h;
    }

    static std::string canonical_response(const std::string& model, const std::string& prompt) {
        return "Answer " + std::to_string(fnv1a(model + "\x1f" + prompt) % 1000000) +
               " from " + model + ".";
    }

private:
    void handle_generate(const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body = nlohmann::json::parse(req.body);
        size_t request_index;
        {
            std::lock_guard lock(mutex_);
            generate_requests_.push_back(body);
            request_index = ++generate_count_;
        }
        const std::string model = body.value("model", "");
        const std::string prompt = body.value("prompt", "");

        switch (options_.mode) {
            case Mode::always_fail:
                res.status = 500;
                res.set_content("{\"error\":\"mock failure\"}", "application/json");
                return;
            case Mode::fail_first_n:
                if (request_index <= options_.fail_count) {
                    res.status = 500;
                    res.set_content("{\"error\":\"mock transient failure\"}", "application/json");
                    return;
                }
                break;
            case Mode::hang:
                std::this_thread::sleep_for(std::chrono::milliseconds(options_.hang_ms));
                res.status = 500;
                return;
            default:
                break;
        }

        std::string text;
        if (options_.mode == Mode::stochastic) {
            size_t variant;
            {
                std::lock_guard lock(mutex_);
                std::discrete_distribution<size_t> dist(options_.weights.begin(),
                                                        options_.weights.end());
                variant = dist(rng_);
            }
            text = "Variant " + std::to_string(variant) + " " + canonical_response(model, prompt);
        } else {
            text = canonical_response(model, prompt);
        }

        nlohmann::json reply = {{"model", model}, {"response", text}, {"done", true}};
        if (options_.report_telemetry) {
            reply["eval_count"] = 42;
            reply["eval_duration"] = 1000000000;  // 1 s in ns -> 42 tok/s
        }
        res.set_content(reply.dump(), "application/json");
    }

    void handle_embed(const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body = nlohmann::json::parse(req.body);
        {
            std::lock_guard lock(mutex_);
            embed_requests_.push_back(body);
        }
        if (options_.mode == Mode::always_fail) {
            res.status = 500;
            res.set_content("{\"error\":\"mock failure\"}", "application/json");
            return;
        }
        nlohmann::json embeddings = nlohmann::json::array();
        for (const auto& input : body.value("input", nlohmann::json::array())) {
            uint64_t h = fnv1a(input.get<std::string>());
            nlohmann::json vec = nlohmann::json::array();
            for (int d = 0; d < 8; ++d) {
                vec.push_back(static_cast<double>((h >> (d * 8)) & 0xFF) / 255.0 + 0.01);
            }
            embeddings.push_back(vec);
        }
        nlohmann::json reply = {{"embeddings", embeddings}};
        res.set_content(reply.dump(), "application/json");
    }

    Options options_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mutex_;
    std::vector<nlohmann::json> generate_requests_;
    std::vector<nlohmann::json> embed_requests_;
    size_t generate_count_ = 0;
    std::mt19937_64 rng_;
};

}  // namespace clineval::mock
