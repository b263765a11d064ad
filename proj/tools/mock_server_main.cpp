#include <csignal>
#include <iostream>

#include <unistd.h>

#include <CLI11.hpp>

#include "clinical_eval/mock_server.hpp"

// Standalone Ollama-shaped mock server for offline pipeline dry runs.
int main(int argc, char** argv) {
    CLI::App app{"clinical-eval-mock-server: deterministic/stochastic mock inference server"};
    std::string mode = "deterministic";
    uint64_t seed = 0;
    std::vector<double> weights = {0.6, 0.3, 0.1};
    app.add_option("--mode", mode, "deterministic or stochastic")
        ->check(CLI::IsMember({"deterministic", "stochastic"}));
    app.add_option("--seed", seed, "RNG seed for stochastic mode (0 = random)");
    app.add_option("--weights", weights, "categorical weights for stochastic mode");
    CLI11_PARSE(app, argc, argv);

    clineval::mock::MockInferenceServer::Options options;
    options.mode = mode == "stochastic"
                       ? clineval::mock::MockInferenceServer::Mode::stochastic
                       : clineval::mock::MockInferenceServer::Mode::deterministic;
    options.weights = weights;
    options.rng_seed = seed;

    clineval::mock::MockInferenceServer server(options);
    std::cout << "mock server listening at " << server.endpoint() << std::endl;
    std::cout << "press Ctrl-C to stop" << std::endl;
    pause();
    return 0;
}
