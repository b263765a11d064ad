#include "clinical_eval/config.hpp"

#include <cstdlib>

#include <yaml-cpp/yaml.h>

namespace clineval::config {

namespace {

infer::GenParams parse_gen_params(const YAML::Node& node, const infer::GenParams& defaults) {
    infer::GenParams p = defaults;
    if (!node) return p;
    if (node["temperature"]) p.temperature = node["temperature"].as<double>();
    if (node["top_p"]) p.top_p = node["top_p"].as<double>();
    if (node["max_tokens"]) p.max_tokens = node["max_tokens"].as<int>();
    if (node["timeout_seconds"]) p.timeout_seconds = node["timeout_seconds"].as<int>();
    if (node["max_retries"]) p.max_retries = node["max_retries"].as<int>();
    if (node["retry_delay_ms"]) p.retry_delay_ms = node["retry_delay_ms"].as<int>();
    return p;
}

void check_gen_params(const infer::GenParams& p, const std::string& where) {
    if (p.temperature < 0) throw ConfigError(where + ": temperature must be >= 0");
    if (p.top_p <= 0 || p.top_p > 1) throw ConfigError(where + ": top_p must be in (0, 1]");
    if (p.max_tokens < 1) throw ConfigError(where + ": max_tokens must be >= 1");
    if (p.max_retries < 0) throw ConfigError(where + ": max_retries must be >= 0");
}

}  // namespace

void validate(const RunConfig& config) {
    if (config.models.empty()) throw ConfigError("config: models list is empty");
    for (const auto& m : config.models) {
        if (m.model_id.empty()) throw ConfigError("config: model_id is empty");
    }
    if (config.sample_size < 1) throw ConfigError("config: sample_size must be >= 1");
    if (config.runs_per_question < 1) throw ConfigError("config: runs_per_question must be >= 1");
    if (config.max_inflight < 1) throw ConfigError("config: max_inflight must be >= 1");
    if (config.dataset_path.empty()) throw ConfigError("config: dataset_path is required");
    if (config.output_dir.empty()) throw ConfigError("config: output_dir is required");
    check_gen_params(config.gen_params, "gen_params");
    check_gen_params(config.judge.params, "judge.params");
    if (config.judge.enabled && config.judge.judge_model_id.empty()) {
        throw ConfigError("config: judge.judge_model_id required when judge is enabled");
    }
    if (config.judge.rubric_template.find("{question}") == std::string::npos ||
        config.judge.rubric_template.find("{gold_answer}") == std::string::npos ||
        config.judge.rubric_template.find("{response}") == std::string::npos) {
        throw ConfigError("config: judge.rubric_template must contain "
                          "{question}, {gold_answer} and {response}");
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw ConfigError("config file not found: " + path.string());
    }
    YAML::Node root;
    try {
        root = YAML::LoadFile(path.string());
    } catch (const YAML::Exception& e) {
        throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
    }

    RunConfig config;
    try {
        if (root["models"]) {
            for (const auto& m : root["models"]) {
                ModelSpec spec;
                spec.model_id = m["model_id"].as<std::string>();
                spec.display_name =
                    m["display_name"] ? m["display_name"].as<std::string>() : spec.model_id;
                config.models.push_back(std::move(spec));
            }
        }
        if (root["endpoint"]) config.endpoint = root["endpoint"].as<std::string>();
        if (root["system_prompt"]) config.system_prompt = root["system_prompt"].as<std::string>();
        config.gen_params = parse_gen_params(root["gen_params"], infer::GenParams{});
        if (root["dataset_path"]) config.dataset_path = root["dataset_path"].as<std::string>();
        if (root["sample_size"]) config.sample_size = root["sample_size"].as<size_t>();
        if (root["seed"]) config.seed = root["seed"].as<int64_t>();
        if (root["runs_per_question"]) {
            config.runs_per_question = root["runs_per_question"].as<size_t>();
        }
        if (root["encoder_model_id"]) {
            config.encoder_model_id = root["encoder_model_id"].as<std::string>();
        }
        if (root["output_dir"]) config.output_dir = root["output_dir"].as<std::string>();
        if (root["max_inflight"]) config.max_inflight = root["max_inflight"].as<size_t>();

        const auto judge_node = root["judge"];
        if (judge_node) {
            if (judge_node["enabled"]) config.judge.enabled = judge_node["enabled"].as<bool>();
            if (judge_node["judge_model_id"]) {
                config.judge.judge_model_id = judge_node["judge_model_id"].as<std::string>();
            }
            if (judge_node["rubric_template"]) {
                config.judge.rubric_template = judge_node["rubric_template"].as<std::string>();
            }
            config.judge.params = parse_gen_params(judge_node["params"], config.gen_params);
        } else {
            config.judge.enabled = false;
            config.judge.params = config.gen_params;
        }
    } catch (const YAML::Exception& e) {
        throw ConfigError("bad config value in " + path.string() + ": " + e.what());
    }

    if (const char* env = std::getenv(kEndpointEnvVar); env && *env) {
        config.endpoint = env;
    }
    validate(config);
    return config;
}

}  // namespace clineval::config
