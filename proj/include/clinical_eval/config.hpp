#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "clinical_eval/inference_client.hpp"
#include "clinical_eval/judge.hpp"

namespace clineval::config {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kDefaultSystemPrompt =
    "You are a clinical expert. Answer in ≤6 sentences. Be direct. "
    "If uncertain, say so. Never recommend unsafe actions.";

inline constexpr const char* kEndpointEnvVar = "CLINICAL_EVAL_ENDPOINT";

struct ModelSpec {
    std::string model_id;
    std::string display_name;
};

struct RunConfig {
    std::vector<ModelSpec> models;
    std::string endpoint = "http://localhost:11434";
    std::string system_prompt = kDefaultSystemPrompt;
    infer::GenParams gen_params;
    std::filesystem::path dataset_path;
    size_t sample_size = 50;
    int64_t seed = 42;
    size_t runs_per_question = 10;
    judge::JudgeConfig judge;
    std::string encoder_model_id;  // empty disables the semantic metric
    std::filesystem::path output_dir;
    size_t max_inflight = 1;
};

// Parses the YAML config. CLINICAL_EVAL_ENDPOINT overrides the file's
// endpoint. Throws ConfigError on missing file, bad YAML, or invariant
// violations (no models, N < 1, sample_size < 1, bad params).
RunConfig load_config(const std::filesystem::path& path);

// Invariant checks shared by load_config and programmatic construction.
void validate(const RunConfig& config);

}  // namespace clineval::config
