#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "curv/curvature.hpp"
#include "curv/dataset.hpp"
#include "curv/eigensolve.hpp"
#include "curv/model.hpp"

namespace curv {

struct SgdConfig {
    double learning_rate = 0.1;
    std::size_t epochs = 1;
    std::size_t batch_size = 1;
};

// One JSON document per run; command-line flags override file values.
struct RunConfig {
    ModelSpec model;
    std::string dataset_path;
    std::uint64_t seed = 0;
    SgdConfig sgd;
    CurvatureConfig curvature;
    LanczosConfig lanczos;
    std::string output_dir = ".";
};

RunConfig load_run_config(const std::string& path);

// Hash of the canonically serialized resolved config; stamped into every
// output sidecar for provenance checks.
std::string config_hash(const RunConfig& cfg);

// Glorot-uniform weights, zero biases, deterministic under seed.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

struct TrainResult {
    ParamVector params;
    std::vector<double> cost_per_epoch;  // averaged cost after each epoch
};

// Plain SGD on the averaged cost. Epoch order is a seeded shuffle; the
// dataset size must be divisible by the batch size. Aborts if the cost
// stops being finite.
TrainResult train_sgd(const ModelSpec& spec, const Batch& data, const SgdConfig& sgd,
                      std::uint64_t seed);

// Entry point used by the binary and by tests; args excludes argv[0].
// Returns the process exit code; errors are printed to stderr.
int run_cli(const std::vector<std::string>& args);

}  // namespace curv
