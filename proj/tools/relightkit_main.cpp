#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rlk/datagen.hpp"
#include "rlk/eval.hpp"
#include "rlk/nn/train.hpp"
#include "rlk/parallel.hpp"
#include "rlk/relight.hpp"

namespace fs = std::filesystem;
using namespace rlk;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool deterministic = false;

    PipelineConfig load() const {
        PipelineConfig cfg = config_path.empty() ? PipelineConfig{}
                                                 : load_config_file(config_path);
        if (seed) {
            cfg.seed = *seed;
            cfg.train.seed = *seed;
        }
        cfg.validate();
        return cfg;
    }
};

LightDirection parse_light(const std::string& text) {
    double x, y, z;
    char c1, c2;
    std::istringstream ss(text);
    if (!(ss >> x >> c1 >> y >> c2 >> z) || c1 != ',' || c2 != ',')
        throw ValidationError("--light expects x,y,z");
    Vec3 v{x, y, z};
    if (norm(v) < 1e-12) throw ValidationError("--light must be nonzero");
    v = normalize(v);
    if (v.z <= 0) throw ValidationError("light below visible hemisphere");
    return LightDirection(v);
}

MaterialMaps load_scene_maps(const std::string& scene_dir) {
    MaterialMaps maps;
    maps.albedo = read_rlk((fs::path(scene_dir) / "albedo.rlk").string());
    maps.normal = read_rlk((fs::path(scene_dir) / "normal.rlk").string());
    maps.roughness = read_rlk((fs::path(scene_dir) / "rough.rlk").string());
    return maps;
}

int run(int argc, char** argv) {
    CLI::App app{"relightkit: flash+depth relighting pipeline"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "pipeline config file (json)");
    std::uint64_t seed_val = 0;
    auto* seed_opt = app.add_option("--seed", seed_val, "override every module seed");
    app.add_flag("--deterministic", g.deterministic,
                 "single-threaded bit-reproducible mode");

    // ---- gen ----
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    std::string gen_out;
    gen->add_option("--out", gen_out, "output dataset directory")->required();

    // ---- train ----
    auto* train = app.add_subcommand("train", "run the two-stage training");
    std::string train_data, train_out;
    train->add_option("--data", train_data, "dataset directory")->required();
    train->add_option("--out", train_out, "checkpoint output directory")->required();

    // ---- relight ----
    auto* relight = app.add_subcommand("relight", "relight a flash+depth capture");
    std::string rl_flash, rl_depth, rl_light, rl_env, rl_model, rl_scene, rl_out,
        rl_preview;
    bool rl_oracle = false;
    relight->add_option("--flash", rl_flash, "flash image (.rlk)")->required();
    relight->add_option("--depth", rl_depth, "depth map (.rlk)")->required();
    relight->add_option("--light", rl_light, "directional light x,y,z");
    relight->add_option("--env", rl_env, "equirectangular environment map (.rlk)");
    relight->add_option("--model", rl_model, "trained model directory");
    relight->add_flag("--oracle", rl_oracle, "use ground-truth maps instead of networks");
    relight->add_option("--scene", rl_scene, "dataset scene dir with ground-truth maps");
    relight->add_option("--out", rl_out, "output image (.rlk)")->required();
    relight->add_option("--preview", rl_preview, "optional 8-bit preview (.ppm)");

    // ---- shadow ----
    auto* shadow = app.add_subcommand("shadow", "emit shadow mask and encoded points");
    std::string sh_depth, sh_light, sh_model, sh_mask_out, sh_points_out;
    shadow->add_option("--depth", sh_depth, "depth map (.rlk)")->required();
    shadow->add_option("--light", sh_light, "directional light x,y,z")->required();
    shadow->add_option("--model", sh_model, "trained model directory (default: oracle)");
    shadow->add_option("--out-mask", sh_mask_out, "mask output (.rlk)")->required();
    shadow->add_option("--out-points", sh_points_out, "encoded point output (.rlk)");

    // ---- decompose ----
    auto* decompose_cmd = app.add_subcommand("decompose", "emit albedo/normal/roughness");
    std::string dc_flash, dc_depth, dc_model, dc_out;
    decompose_cmd->add_option("--flash", dc_flash, "flash image (.rlk)")->required();
    decompose_cmd->add_option("--depth", dc_depth, "depth map (.rlk)")->required();
    decompose_cmd->add_option("--model", dc_model, "trained model directory")->required();
    decompose_cmd->add_option("--out-dir", dc_out, "output directory")->required();

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "evaluate trained models on the test split");
    std::string ev_data, ev_model, ev_out;
    eval->add_option("--data", ev_data, "dataset directory")->required();
    eval->add_option("--model", ev_model, "trained model directory")->required();
    eval->add_option("--out", ev_out, "report output path")->required();

    CLI11_PARSE(app, argc, argv);
    if (seed_opt->count()) g.seed = seed_val;
    set_deterministic(g.deterministic);
    apply_thread_settings();

    if (gen->parsed()) {
        PipelineConfig cfg = g.load();
        DatasetManifest m = generate_dataset(cfg, gen_out);
        std::printf("generated %zu scenes x %zu directions in %s\n", m.scenes.size(),
                    m.directions.size(), gen_out.c_str());
        return 0;
    }

    if (train->parsed()) {
        PipelineConfig cfg = g.load();
        DatasetManifest m = load_manifest(train_data);
        nn::TrainedModels models =
            nn::train_pipeline(train_data, m, cfg, train_out, &std::cout);
        std::printf("trained models written to %s (%lld parameters)\n", train_out.c_str(),
                    static_cast<long long>(models.decompose.parameter_count() +
                                           models.shadow.parameter_count() +
                                           models.synthesis.parameter_count()));
        return 0;
    }

    if (relight->parsed()) {
        PipelineConfig cfg = g.load();
        if (rl_light.empty() == rl_env.empty())
            throw ValidationError("exactly one of --light / --env is required");
        if (rl_oracle == !rl_model.empty())
            throw ValidationError("exactly one of --model / --oracle is required");
        if (rl_oracle && rl_scene.empty())
            throw ValidationError("--oracle needs --scene for the ground-truth maps");

        ImageBuffer flash = read_rlk(rl_flash);
        DepthMap depth = read_rlk(rl_depth);
        CameraIntrinsics K = cfg.intrinsics_for(depth.width(), depth.height());

        nn::TrainedModels models;
        OracleInputs oracle;
        const nn::TrainedModels* models_p = nullptr;
        const OracleInputs* oracle_p = nullptr;
        if (rl_oracle) {
            oracle.maps = load_scene_maps(rl_scene);
            oracle_p = &oracle;
        } else {
            models = nn::TrainedModels::load(rl_model);
            models_p = &models;
        }

        ImageBuffer out;
        if (!rl_light.empty()) {
            out = infer_relit(flash, depth, parse_light(rl_light), K, models_p, oracle_p,
                              cfg);
        } else {
            ImageBuffer env = read_rlk(rl_env);
            auto dirs = direction_grid(cfg.n_rings, cfg.per_ring);
            BasisStack stack =
                build_basis_stack(flash, depth, dirs, K, models_p, oracle_p, cfg);
            out = superpose(stack, env_weights(env, dirs));
        }
        write_rlk(rl_out, out);
        if (!rl_preview.empty()) write_preview(rl_preview, out);
        std::printf("wrote %s\n", rl_out.c_str());
        return 0;
    }

    if (shadow->parsed()) {
        PipelineConfig cfg = g.load();
        DepthMap depth = read_rlk(sh_depth);
        LightDirection w = parse_light(sh_light);
        CameraIntrinsics K = cfg.intrinsics_for(depth.width(), depth.height());
        PointImage points = unproject(depth, K);
        ShadowMask mask;
        if (sh_model.empty()) {
            mask = cast_shadow_mask(points, w, cfg.shadow);
        } else {
            nn::TrainedModels models = nn::TrainedModels::load(sh_model);
            mask = predict_shadow(models, points, w);
        }
        write_rlk(sh_mask_out, mask);
        if (!sh_points_out.empty())
            write_rlk(sh_points_out, shadow_encode(points, w).to_image());
        std::printf("wrote %s\n", sh_mask_out.c_str());
        return 0;
    }

    if (decompose_cmd->parsed()) {
        ImageBuffer flash = read_rlk(dc_flash);
        DepthMap depth = read_rlk(dc_depth);
        nn::TrainedModels models = nn::TrainedModels::load(dc_model);
        MaterialMaps maps = predict_decompose(models, flash, depth);
        std::error_code ec;
        fs::create_directories(dc_out, ec);
        if (ec) throw IoError("cannot create " + dc_out + ": " + ec.message());
        write_rlk((fs::path(dc_out) / "albedo.rlk").string(), maps.albedo);
        write_rlk((fs::path(dc_out) / "normal.rlk").string(), maps.normal);
        write_rlk((fs::path(dc_out) / "rough.rlk").string(), maps.roughness);
        write_preview((fs::path(dc_out) / "albedo.ppm").string(), maps.albedo);
        std::printf("wrote decomposition to %s\n", dc_out.c_str());
        return 0;
    }

    if (eval->parsed()) {
        PipelineConfig cfg = g.load();
        DatasetManifest m = load_manifest(ev_data);
        nn::TrainedModels models = nn::TrainedModels::load(ev_model);
        MetricReport report = evaluate_models(ev_data, m, models, cfg);
        std::ofstream os(ev_out, std::ios::binary);
        if (!os) throw IoError("cannot open report path: " + ev_out);
        os << format_report(report);
        if (!os) throw IoError("report write failed: " + ev_out);
        std::printf("wrote %s\n", ev_out.c_str());
        return 0;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
