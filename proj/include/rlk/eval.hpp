#pragma once

#include <string>
#include <vector>

#include "rlk/config.hpp"
#include "rlk/datagen.hpp"
#include "rlk/nn/network.hpp"

namespace rlk {

// Per-task mean squared errors over the test split, one row per depth
// condition, plus per-direction PSNR curves.
struct TaskMse {
    double albedo = 0, normal = 0, roughness = 0, shadow = 0, relight = 0;
};

struct MetricReport {
    int scene_count = 0;
    std::vector<Vec3> directions;
    TaskMse clean, noisy;
    std::vector<double> psnr_clean, psnr_noisy;  // per direction, mean over scenes
    double mean_psnr_clean = 0, mean_psnr_noisy = 0;
};

MetricReport evaluate_models(const std::string& dataset_root,
                             const DatasetManifest& manifest,
                             const nn::TrainedModels& models, const PipelineConfig& cfg);

// Fixed-format text emission; byte-identical across runs for equal inputs.
std::string format_report(const MetricReport& report);

}  // namespace rlk
