#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rlk/brdf.hpp"
#include "rlk/config.hpp"
#include "rlk/geometry.hpp"

namespace rlk {

enum class GeometryFamily { Bumps, Steps, Blobs };
enum class TextureFamily { Constant, Checker, Noise };

struct SceneSpec {
    std::uint64_t seed = 0;
    int width = 64, height = 64;
    GeometryFamily geometry = GeometryFamily::Bumps;
    TextureFamily texture = TextureFamily::Noise;
    int min_bumps = 3, max_bumps = 7;
    double bump_amplitude = 0.12;
    double roughness_min = 0.25, roughness_max = 1.0;
    double normal_detail = 0.25;

    void validate() const;
};

// A generated scene: single-valued heightfield depth plus material truth.
struct Scene {
    DepthMap depth;
    MaterialMaps maps;
};

struct DatasetSample {
    ImageBuffer flash;
    DepthMap depth;
    DepthMap depth_noisy;
    MaterialMaps maps;
    std::vector<Vec3> directions;
    std::vector<ImageBuffer> relit;
    std::vector<ShadowMask> shadows;
};

// Equal-area-in-cos(theta) rings over the visible hemisphere plus the
// zenith direction; deterministic ordering (rings from horizon to zenith,
// azimuth-major, zenith appended last).
std::vector<LightDirection> direction_grid(int n_rings, int per_ring);

// K defaults to the standard pinhole for the spec's image size.
Scene make_scene(const SceneSpec& spec, const CameraIntrinsics* K = nullptr);

DatasetSample render_sample(const Scene& scene, const std::vector<LightDirection>& dirs,
                            const CameraIntrinsics& K, std::uint64_t noise_seed,
                            const PipelineConfig& cfg = {});

// On-disk dataset: <root>/scene_<k>/{flash,depth,depth_noisy,albedo,normal,
// rough,relit_<i>,shadow_<i>}.rlk plus <root>/manifest.
struct DatasetManifest {
    int version = 1;
    int width = 0, height = 0;
    CameraIntrinsics intrinsics;
    double flash_intensity = 1.0;
    Vec3 light_intensity{1, 1, 1};
    std::vector<Vec3> directions;
    struct SceneEntry {
        std::string name;
        std::string split;  // "train" | "test"
        std::uint64_t seed = 0;
        std::uint64_t noise_seed = 0;
    };
    std::vector<SceneEntry> scenes;

    std::vector<int> split_indices(const std::string& split) const;
};

void write_manifest(const std::string& root, const DatasetManifest& m);
DatasetManifest load_manifest(const std::string& root);

void write_sample(const std::string& root, const std::string& name,
                  const DatasetSample& sample);
DatasetSample load_sample(const std::string& root, const DatasetManifest& m,
                          int scene_index);

// Full generation driver used by the CLI: renders every scene from the
// config's seeds and writes the dataset; returns the manifest.
DatasetManifest generate_dataset(const PipelineConfig& cfg, const std::string& out_root);

// SceneSpec for the k-th scene of a config (train scenes first, then test).
SceneSpec scene_spec_for(const PipelineConfig& cfg, int scene_index);

}  // namespace rlk
