#pragma once

#include <vector>

#include "rlk/brdf.hpp"
#include "rlk/config.hpp"
#include "rlk/geometry.hpp"
#include "rlk/nn/network.hpp"

namespace rlk {

// Finite-sample light transport: one basis image per directional light.
struct BasisStack {
    std::vector<Vec3> directions;
    std::vector<ImageBuffer> images;

    void validate() const;
};

// Linear combination of basis images; weights are rgb per direction.
ImageBuffer superpose(const BasisStack& stack, const std::vector<Vec3>& weights);

// Bin each equirectangular texel (radiance x solid angle) onto its nearest
// direction. Rows span polar angle [0, pi/2] top-down, columns azimuth.
std::vector<Vec3> env_weights(const ImageBuffer& env,
                              const std::vector<LightDirection>& dirs);

// -- network inference --
MaterialMaps predict_decompose(const nn::TrainedModels& models, const ImageBuffer& flash,
                               const DepthMap& depth);
ShadowMask predict_shadow(const nn::TrainedModels& models, const PointImage& points,
                          const LightDirection& w);
ImageBuffer predict_relit(const nn::TrainedModels& models, const ImageBuffer& flash,
                          const DepthMap& depth, const LightDirection& w,
                          const CameraIntrinsics& K, const PipelineConfig& cfg);

// Ground-truth maps for the oracle path; with no mask supplied the hard
// shadow oracle runs on the input depth.
struct OracleInputs {
    MaterialMaps maps;
    const ShadowMask* mask = nullptr;
};

// Full Eq-style inference: decomposition -> shadow -> closed-form render ->
// synthesis; the oracle path composes I_render x mask directly.
ImageBuffer infer_relit(const ImageBuffer& flash, const DepthMap& depth,
                        const LightDirection& w, const CameraIntrinsics& K,
                        const nn::TrainedModels* models, const OracleInputs* oracle,
                        const PipelineConfig& cfg);

BasisStack build_basis_stack(const ImageBuffer& flash, const DepthMap& depth,
                             const std::vector<LightDirection>& dirs,
                             const CameraIntrinsics& K, const nn::TrainedModels* models,
                             const OracleInputs* oracle, const PipelineConfig& cfg);

}  // namespace rlk
