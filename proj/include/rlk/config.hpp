#pragma once

#include <cstdint>
#include <string>

#include "rlk/common.hpp"
#include "rlk/geometry.hpp"

namespace rlk {

struct TrainConfig {
    int batch_size = 4;
    int epochs_per_stage = 5;
    double learning_rate = 5e-4;
    double decay_factor = 0.1;
    int decay_every = 2;  // epochs
    double channel_scale = 0.25;
    double lambda_grad = 1.0;
    std::uint64_t seed = 1;
    bool use_noisy_depth = false;
    // every holdout_stride-th direction (offset holdout_offset) is excluded
    // from stage-2 training and reserved for novel-light evaluation
    int holdout_stride = 5;
    int holdout_offset = 2;

    double lr_at_epoch(int epoch) const;
    void validate() const;
};

struct PipelineConfig {
    int image_size = 64;
    // camera intrinsics; non-positive focal length means "standard pinhole
    // for the image size" (fx = fy = width, principal point at the center)
    double fx = 0, fy = 0, cx = -1, cy = -1;
    int train_scenes = 20;
    int test_scenes = 4;
    int n_rings = 4;
    int per_ring = 20;
    std::uint64_t seed = 1234;
    double flash_intensity = 1.0;
    Vec3 light_intensity{1.0, 1.0, 1.0};
    double f0 = 0.05;
    double cos_clamp = 1e-4;
    // scene randomization ranges
    double roughness_min = 0.25;
    double roughness_max = 1.0;
    double bump_amplitude = 0.12;
    int max_bumps = 7;
    double normal_detail = 0.25;
    DegradeParams degrade;
    ShadowConfig shadow;
    TrainConfig train;

    void validate() const;
    CameraIntrinsics intrinsics_for(int width, int height) const;
};

// JSON (de)serialization. Parsing is permissive about missing keys (defaults
// apply) and strict about unknown ones; serialize(parse(s)) is canonical.
std::string serialize_config(const PipelineConfig& cfg);
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config_file(const std::string& path);
void save_config_file(const std::string& path, const PipelineConfig& cfg);

bool operator==(const TrainConfig& a, const TrainConfig& b);
bool operator==(const PipelineConfig& a, const PipelineConfig& b);

}  // namespace rlk
