#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rlk/config.hpp"
#include "rlk/datagen.hpp"
#include "rlk/nn/network.hpp"

namespace rlk::nn {

struct TrainLog {
    std::vector<double> decompose_losses;  // one entry per step
    std::vector<double> shadow_losses;
    std::vector<double> synthesis_losses;
};

// Direction indices excluded from stage-2 training (novel-light holdout).
std::vector<int> holdout_direction_indices(int direction_count, const TrainConfig& t);
std::vector<int> training_direction_indices(int direction_count, const TrainConfig& t);

// Stage 1 trains ShadowNet and DecomposeNet, stage 2 freezes both and trains
// SynthesisNet. Checkpoints are written after every epoch. Deterministic in
// cfg.train.seed when single-threaded.
TrainedModels train_pipeline(const std::string& dataset_root,
                             const DatasetManifest& manifest, const PipelineConfig& cfg,
                             const std::string& checkpoint_dir,
                             std::ostream* log_stream = nullptr, TrainLog* log = nullptr);

}  // namespace rlk::nn
