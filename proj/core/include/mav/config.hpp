#pragma once

#include <stdexcept>
#include <string>

#include "mav/losses.hpp"

namespace mav {

// Thrown for malformed config or dataset input; the CLI maps it to exit 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Config {
    // geometry
    int grid_resolution = 64;
    int weight_resolution = 32;
    int detail_resolution = 128;
    int feature_channels = 8;
    int material_resolution = 32;
    int env_width = 32;
    int env_height = 16;

    // rendering
    int spp_train = 8;
    int spp_infer = 64;

    // optimization
    uint64_t steps = 2000;
    uint64_t seed = 0;
    double lr_sdf = 1e-3;
    double lr_offsets = 1e-3;
    double lr_material = 1e-2;
    double lr_env = 1e-2;
    uint64_t checkpoint_every = 500;
    int eikonal_samples = 1024;
    int material_smooth_samples = 256;

    // which parameter groups move (fixed-geometry experiments switch some off)
    bool optimize_sdf = true;
    bool optimize_offsets = true;
    bool optimize_material = true;
    bool optimize_env = true;

    LossWeights weights;

    std::string dataset;  // manifest path

    void validate() const;  // throws ConfigError
};

// Strict JSON round trip; unknown keys are rejected.
Config load_config(const std::string& path);
Config parse_config(const std::string& json_text);
void save_config(const std::string& path, const Config& config);
std::string config_to_json(const Config& config);

}  // namespace mav
