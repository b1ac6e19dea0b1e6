#include "rlk/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rlk {

using json = nlohmann::ordered_json;

double TrainConfig::lr_at_epoch(int epoch) const {
    return learning_rate * std::pow(decay_factor, epoch / decay_every);
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw ValidationError("train.batch_size must be >= 1");
    if (epochs_per_stage < 1) throw ValidationError("train.epochs_per_stage must be >= 1");
    if (!(learning_rate > 0)) throw ValidationError("train.learning_rate must be > 0");
    if (decay_every < 1) throw ValidationError("train.decay_every must be >= 1");
    if (!(channel_scale > 0) || channel_scale > 1)
        throw ValidationError("train.channel_scale must lie in (0,1]");
    if (holdout_stride < 2) throw ValidationError("train.holdout_stride must be >= 2");
}

CameraIntrinsics PipelineConfig::intrinsics_for(int width, int height) const {
    if (fx <= 0 || fy <= 0) return CameraIntrinsics::standard(width, height);
    CameraIntrinsics k;
    k.width = width;
    k.height = height;
    k.fx = fx;
    k.fy = fy;
    k.cx = cx >= 0 ? cx : (width - 1) * 0.5;
    k.cy = cy >= 0 ? cy : (height - 1) * 0.5;
    k.validate();
    return k;
}

void PipelineConfig::validate() const {
    if (image_size < 8) throw ValidationError("image_size must be >= 8");
    if (train_scenes < 1 || test_scenes < 1)
        throw ValidationError("need at least one train and one test scene");
    if (n_rings < 0 || per_ring < 1) throw ValidationError("invalid direction grid");
    if (!(roughness_min > 0) || roughness_max > 1 || roughness_min > roughness_max)
        throw ValidationError("roughness range must lie in (0,1]");
    if (!(flash_intensity >= 0)) throw ValidationError("flash_intensity must be >= 0");
    train.validate();
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown config key '" + it.key() + "' in " + where);
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string serialize_config(const PipelineConfig& cfg) {
    json j;
    j["image_size"] = cfg.image_size;
    j["fx"] = cfg.fx;
    j["fy"] = cfg.fy;
    j["cx"] = cfg.cx;
    j["cy"] = cfg.cy;
    j["train_scenes"] = cfg.train_scenes;
    j["test_scenes"] = cfg.test_scenes;
    j["n_rings"] = cfg.n_rings;
    j["per_ring"] = cfg.per_ring;
    j["seed"] = cfg.seed;
    j["flash_intensity"] = cfg.flash_intensity;
    j["light_intensity"] = {cfg.light_intensity.x, cfg.light_intensity.y,
                            cfg.light_intensity.z};
    j["f0"] = cfg.f0;
    j["cos_clamp"] = cfg.cos_clamp;
    j["roughness_min"] = cfg.roughness_min;
    j["roughness_max"] = cfg.roughness_max;
    j["bump_amplitude"] = cfg.bump_amplitude;
    j["max_bumps"] = cfg.max_bumps;
    j["normal_detail"] = cfg.normal_detail;
    j["degrade"] = {{"noise_sigma", cfg.degrade.noise_sigma},
                    {"blur_sigma", cfg.degrade.blur_sigma}};
    j["shadow"] = {{"resolution_multiplier", cfg.shadow.resolution_multiplier},
                   {"bias", cfg.shadow.bias},
                   {"splat_radius", cfg.shadow.splat_radius},
                   {"slope_bias_scale", cfg.shadow.slope_bias_scale}};
    j["train"] = {{"batch_size", cfg.train.batch_size},
                  {"epochs_per_stage", cfg.train.epochs_per_stage},
                  {"learning_rate", cfg.train.learning_rate},
                  {"decay_factor", cfg.train.decay_factor},
                  {"decay_every", cfg.train.decay_every},
                  {"channel_scale", cfg.train.channel_scale},
                  {"lambda_grad", cfg.train.lambda_grad},
                  {"seed", cfg.train.seed},
                  {"use_noisy_depth", cfg.train.use_noisy_depth},
                  {"holdout_stride", cfg.train.holdout_stride},
                  {"holdout_offset", cfg.train.holdout_offset}};
    return j.dump(2) + "\n";
}

PipelineConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse failed: ") + e.what());
    }
    check_keys(j,
               {"image_size", "fx", "fy", "cx", "cy", "train_scenes", "test_scenes", "n_rings", "per_ring",
                "seed", "flash_intensity", "light_intensity", "f0", "cos_clamp",
                "roughness_min", "roughness_max", "bump_amplitude", "max_bumps",
                "normal_detail", "degrade", "shadow", "train"},
               "config");
    PipelineConfig cfg;
    read(j, "image_size", cfg.image_size);
    read(j, "fx", cfg.fx);
    read(j, "fy", cfg.fy);
    read(j, "cx", cfg.cx);
    read(j, "cy", cfg.cy);
    read(j, "train_scenes", cfg.train_scenes);
    read(j, "test_scenes", cfg.test_scenes);
    read(j, "n_rings", cfg.n_rings);
    read(j, "per_ring", cfg.per_ring);
    read(j, "seed", cfg.seed);
    read(j, "flash_intensity", cfg.flash_intensity);
    if (j.contains("light_intensity")) {
        auto v = j.at("light_intensity");
        if (!v.is_array() || v.size() != 3)
            throw ConfigError("light_intensity must be a 3-element array");
        cfg.light_intensity = {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
    }
    read(j, "f0", cfg.f0);
    read(j, "cos_clamp", cfg.cos_clamp);
    read(j, "roughness_min", cfg.roughness_min);
    read(j, "roughness_max", cfg.roughness_max);
    read(j, "bump_amplitude", cfg.bump_amplitude);
    read(j, "max_bumps", cfg.max_bumps);
    read(j, "normal_detail", cfg.normal_detail);
    if (j.contains("degrade")) {
        const json& d = j.at("degrade");
        check_keys(d, {"noise_sigma", "blur_sigma"}, "degrade");
        read(d, "noise_sigma", cfg.degrade.noise_sigma);
        read(d, "blur_sigma", cfg.degrade.blur_sigma);
    }
    if (j.contains("shadow")) {
        const json& s = j.at("shadow");
        check_keys(s, {"resolution_multiplier", "bias", "splat_radius", "slope_bias_scale"},
                   "shadow");
        read(s, "resolution_multiplier", cfg.shadow.resolution_multiplier);
        read(s, "bias", cfg.shadow.bias);
        read(s, "splat_radius", cfg.shadow.splat_radius);
        read(s, "slope_bias_scale", cfg.shadow.slope_bias_scale);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        check_keys(t,
                   {"batch_size", "epochs_per_stage", "learning_rate", "decay_factor",
                    "decay_every", "channel_scale", "lambda_grad", "seed",
                    "use_noisy_depth", "holdout_stride", "holdout_offset"},
                   "train");
        read(t, "batch_size", cfg.train.batch_size);
        read(t, "epochs_per_stage", cfg.train.epochs_per_stage);
        read(t, "learning_rate", cfg.train.learning_rate);
        read(t, "decay_factor", cfg.train.decay_factor);
        read(t, "decay_every", cfg.train.decay_every);
        read(t, "channel_scale", cfg.train.channel_scale);
        read(t, "lambda_grad", cfg.train.lambda_grad);
        read(t, "seed", cfg.train.seed);
        read(t, "use_noisy_depth", cfg.train.use_noisy_depth);
        read(t, "holdout_stride", cfg.train.holdout_stride);
        read(t, "holdout_offset", cfg.train.holdout_offset);
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

void save_config_file(const std::string& path, const PipelineConfig& cfg) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open config file for writing: " + path);
    os << serialize_config(cfg);
}

bool operator==(const TrainConfig& a, const TrainConfig& b) {
    return a.batch_size == b.batch_size && a.epochs_per_stage == b.epochs_per_stage &&
           a.learning_rate == b.learning_rate && a.decay_factor == b.decay_factor &&
           a.decay_every == b.decay_every && a.channel_scale == b.channel_scale &&
           a.lambda_grad == b.lambda_grad && a.seed == b.seed &&
           a.use_noisy_depth == b.use_noisy_depth &&
           a.holdout_stride == b.holdout_stride && a.holdout_offset == b.holdout_offset;
}

bool operator==(const PipelineConfig& a, const PipelineConfig& b) {
    return a.image_size == b.image_size && a.fx == b.fx && a.fy == b.fy &&
           a.cx == b.cx && a.cy == b.cy && a.train_scenes == b.train_scenes &&
           a.test_scenes == b.test_scenes && a.n_rings == b.n_rings &&
           a.per_ring == b.per_ring && a.seed == b.seed &&
           a.flash_intensity == b.flash_intensity &&
           a.light_intensity.x == b.light_intensity.x &&
           a.light_intensity.y == b.light_intensity.y &&
           a.light_intensity.z == b.light_intensity.z && a.f0 == b.f0 &&
           a.cos_clamp == b.cos_clamp && a.roughness_min == b.roughness_min &&
           a.roughness_max == b.roughness_max && a.bump_amplitude == b.bump_amplitude &&
           a.max_bumps == b.max_bumps && a.normal_detail == b.normal_detail &&
           a.degrade.noise_sigma == b.degrade.noise_sigma &&
           a.degrade.blur_sigma == b.degrade.blur_sigma &&
           a.shadow.resolution_multiplier == b.shadow.resolution_multiplier &&
           a.shadow.bias == b.shadow.bias && a.shadow.splat_radius == b.shadow.splat_radius &&
           a.shadow.slope_bias_scale == b.shadow.slope_bias_scale && a.train == b.train;
}

}  // namespace rlk
