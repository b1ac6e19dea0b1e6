#include "rlk/eval.hpp"

#include <cstdio>

#include "rlk/relight.hpp"

namespace rlk {

namespace {

struct Accum {
    TaskMse mse;
    std::vector<double> psnr_sum;
    int scenes = 0;

    void finish(int dir_count) {
        double inv = 1.0 / scenes;
        mse.albedo *= inv;
        mse.normal *= inv;
        mse.roughness *= inv;
        mse.shadow *= inv / dir_count;
        mse.relight *= inv / dir_count;
        for (double& p : psnr_sum) p *= inv;
    }
};

}  // namespace

MetricReport evaluate_models(const std::string& dataset_root,
                             const DatasetManifest& manifest,
                             const nn::TrainedModels& models, const PipelineConfig& cfg) {
    std::vector<int> test_idx = manifest.split_indices("test");
    if (test_idx.empty()) throw ValidationError("dataset has no test scenes");
    const int D = static_cast<int>(manifest.directions.size());
    std::vector<LightDirection> dirs;
    for (const Vec3& d : manifest.directions) dirs.emplace_back(d);

    // evaluation renders with the dataset's own intensities
    PipelineConfig ecfg = cfg;
    ecfg.flash_intensity = manifest.flash_intensity;
    ecfg.light_intensity = manifest.light_intensity;

    Accum clean, noisy;
    clean.psnr_sum.assign(D, 0.0);
    noisy.psnr_sum.assign(D, 0.0);

    for (int idx : test_idx) {
        DatasetSample s = load_sample(dataset_root, manifest, idx);
        for (int cond = 0; cond < 2; ++cond) {
            Accum& acc = cond == 0 ? clean : noisy;
            const DepthMap& depth_in = cond == 0 ? s.depth : s.depth_noisy;
            MaterialMaps pred = predict_decompose(models, s.flash, depth_in);
            acc.mse.albedo += mse(pred.albedo, s.maps.albedo);
            acc.mse.normal += mse(pred.normal, s.maps.normal);
            acc.mse.roughness += mse(pred.roughness, s.maps.roughness);
            PointImage points = unproject(depth_in, manifest.intrinsics);
            for (int d = 0; d < D; ++d) {
                ShadowMask mask_pred = predict_shadow(models, points, dirs[d]);
                acc.mse.shadow += mse(mask_pred, s.shadows[d]);
                ImageBuffer relit_pred = predict_relit(models, s.flash, depth_in, dirs[d],
                                                       manifest.intrinsics, ecfg);
                double m = mse(relit_pred, s.relit[d]);
                acc.mse.relight += m;
                acc.psnr_sum[d] += psnr_from_mse(m);
            }
        }
        clean.scenes += 1;
        noisy.scenes += 1;
    }
    clean.finish(D);
    noisy.finish(D);

    MetricReport r;
    r.scene_count = static_cast<int>(test_idx.size());
    r.directions = manifest.directions;
    r.clean = clean.mse;
    r.noisy = noisy.mse;
    r.psnr_clean = clean.psnr_sum;
    r.psnr_noisy = noisy.psnr_sum;
    for (int d = 0; d < D; ++d) {
        r.mean_psnr_clean += r.psnr_clean[d] / D;
        r.mean_psnr_noisy += r.psnr_noisy[d] / D;
    }
    return r;
}

std::string format_report(const MetricReport& r) {
    std::string out;
    char buf[256];
    out += "relightkit evaluation report\n";
    std::snprintf(buf, sizeof(buf), "test scenes: %d  directions: %d\n\n", r.scene_count,
                  static_cast<int>(r.directions.size()));
    out += buf;
    out += "MSE        Albedo        Normal        Roughness     Shadow        Relight\n";
    auto row = [&](const char* name, const TaskMse& m) {
        std::snprintf(buf, sizeof(buf), "%-10s %.6e  %.6e  %.6e  %.6e  %.6e\n", name,
                      m.albedo, m.normal, m.roughness, m.shadow, m.relight);
        out += buf;
    };
    row("clean", r.clean);
    row("noisy", r.noisy);
    out += "\nPSNR per direction (dB), mean over test scenes\n";
    out += "idx     wx         wy         wz         clean     noisy\n";
    for (std::size_t d = 0; d < r.directions.size(); ++d) {
        std::snprintf(buf, sizeof(buf), "%-6zu %+.6f  %+.6f  %+.6f  %8.3f  %8.3f\n", d,
                      r.directions[d].x, r.directions[d].y, r.directions[d].z,
                      r.psnr_clean[d], r.psnr_noisy[d]);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "mean%43s%8.3f  %8.3f\n", "", r.mean_psnr_clean,
                  r.mean_psnr_noisy);
    out += buf;
    return out;
}

}  // namespace rlk
