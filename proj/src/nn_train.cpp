#include "rlk/nn/train.hpp"

#include <algorithm>
#include <ostream>

#include "rlk/nn/bridge.hpp"
#include "rlk/nn/loss.hpp"
#include "rlk/nn/render_layer.hpp"
#include "rlk/rng.hpp"

namespace rlk::nn {

std::vector<int> holdout_direction_indices(int direction_count, const TrainConfig& t) {
    std::vector<int> out;
    for (int i = 0; i < direction_count; ++i)
        if (i % t.holdout_stride == t.holdout_offset) out.push_back(i);
    return out;
}

std::vector<int> training_direction_indices(int direction_count, const TrainConfig& t) {
    std::vector<int> out;
    for (int i = 0; i < direction_count; ++i)
        if (i % t.holdout_stride != t.holdout_offset) out.push_back(i);
    return out;
}

namespace {

// (N, sum of channels, H, W) from per-sample lists of planar images
Tensor batch_concat(const std::vector<std::vector<const ImageBuffer*>>& rows) {
    const int N = static_cast<int>(rows.size());
    int C = 0;
    for (const ImageBuffer* img : rows[0]) C += img->channels();
    const int H = rows[0][0]->height(), W = rows[0][0]->width();
    Shape s{N, C, H, W};
    std::vector<double> data(s.numel());
    const std::int64_t hw = static_cast<std::int64_t>(H) * W;
    for (int n = 0; n < N; ++n) {
        std::int64_t off = static_cast<std::int64_t>(n) * C * hw;
        for (const ImageBuffer* img : rows[n]) {
            const float* p = img->data();
            for (std::int64_t i = 0; i < static_cast<std::int64_t>(img->channels()) * hw; ++i)
                data[off + i] = p[i];
            off += static_cast<std::int64_t>(img->channels()) * hw;
        }
    }
    return Tensor::from_data(s, std::move(data), false);
}

std::vector<int> shuffled(std::size_t n, Rng& rng) {
    std::vector<int> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[rng.next_u64() % i]);
    return idx;
}

struct SceneData {
    DatasetSample sample;
    PointImage points;       // from the depth the networks consume
    const DepthMap* depth_in = nullptr;
};

void log_line(std::ostream* os, const std::string& line) {
    if (os) (*os) << line << "\n";
}

}  // namespace

TrainedModels train_pipeline(const std::string& dataset_root,
                             const DatasetManifest& manifest, const PipelineConfig& cfg,
                             const std::string& checkpoint_dir, std::ostream* log_stream,
                             TrainLog* log) {
    cfg.train.validate();
    const TrainConfig& tc = cfg.train;
    std::vector<int> train_idx = manifest.split_indices("train");
    if (train_idx.empty()) throw ValidationError("dataset has no training scenes");

    // keep the toy training set in memory
    std::vector<SceneData> scenes;
    scenes.reserve(train_idx.size());
    for (int i : train_idx) {
        SceneData sd;
        sd.sample = load_sample(dataset_root, manifest, i);
        if (sd.sample.relit.size() != manifest.directions.size())
            throw ValidationError("dataset scene is missing relit images");
        sd.depth_in = tc.use_noisy_depth ? &sd.sample.depth_noisy : &sd.sample.depth;
        sd.points = unproject(*sd.depth_in, manifest.intrinsics);
        scenes.push_back(std::move(sd));
    }
    const int S = static_cast<int>(scenes.size());
    const int D = static_cast<int>(manifest.directions.size());
    std::vector<LightDirection> dirs;
    dirs.reserve(D);
    for (const Vec3& d : manifest.directions) dirs.emplace_back(d);

    TrainedModels models;
    models.decompose = Network(make_network_spec("decompose", tc.channel_scale),
                               Rng::derive(tc.seed, 11));
    models.shadow =
        Network(make_network_spec("shadow", tc.channel_scale), Rng::derive(tc.seed, 12));
    models.synthesis = Network(make_network_spec("synthesis", tc.channel_scale),
                               Rng::derive(tc.seed, 13));

    const ShadingConstants sc{cfg.f0, cfg.cos_clamp};

    // ---- stage 1: DecomposeNet ----
    {
        auto params = models.decompose.parameters();
        AdamState state;
        state.init(params);
        for (int epoch = 0; epoch < tc.epochs_per_stage; ++epoch) {
            double lr = tc.lr_at_epoch(epoch);
            Rng erng(Rng::derive(tc.seed, 1000 + epoch));
            auto order = shuffled(scenes.size(), erng);
            double epoch_loss = 0.0;
            int steps = 0;
            for (std::size_t b = 0; b < order.size(); b += tc.batch_size) {
                std::vector<std::vector<const ImageBuffer*>> in_rows, alb_rows, nrm_rows,
                    rgh_rows;
                for (std::size_t k = b; k < std::min(order.size(), b + tc.batch_size); ++k) {
                    const SceneData& sd = scenes[order[k]];
                    in_rows.push_back({&sd.sample.flash, sd.depth_in});
                    alb_rows.push_back({&sd.sample.maps.albedo});
                    nrm_rows.push_back({&sd.sample.maps.normal});
                    rgh_rows.push_back({&sd.sample.maps.roughness});
                }
                Tensor x = batch_concat(in_rows);
                auto outs = models.decompose.forward(x);
                Tensor loss = loss_l1_grad(outs.at("albedo"), batch_concat(alb_rows),
                                           tc.lambda_grad) +
                              loss_l1_grad(outs.at("normal"), batch_concat(nrm_rows),
                                           tc.lambda_grad) +
                              loss_bce(outs.at("rough"), batch_concat(rgh_rows));
                for (Tensor& p : params) p.zero_grad();
                loss.backward();
                adam_step(params, state, lr);
                epoch_loss += loss.value();
                ++steps;
                if (log) log->decompose_losses.push_back(loss.value());
            }
            log_line(log_stream, "stage1 decompose epoch " + std::to_string(epoch) +
                                     " mean loss " + std::to_string(epoch_loss / steps));
            models.decompose.save_epoch(checkpoint_dir, epoch);
        }
    }

    // ---- stage 1: ShadowNet ----
    {
        auto params = models.shadow.parameters();
        AdamState state;
        state.init(params);
        std::vector<std::pair<int, int>> samples;
        for (int s = 0; s < S; ++s)
            for (int d = 0; d < D; ++d) samples.push_back({s, d});
        for (int epoch = 0; epoch < tc.epochs_per_stage; ++epoch) {
            double lr = tc.lr_at_epoch(epoch);
            Rng erng(Rng::derive(tc.seed, 2000 + epoch));
            auto order = shuffled(samples.size(), erng);
            double epoch_loss = 0.0;
            int steps = 0;
            for (std::size_t b = 0; b < order.size(); b += tc.batch_size) {
                std::vector<ImageBuffer> encoded;
                std::vector<std::vector<const ImageBuffer*>> in_rows, tgt_rows;
                for (std::size_t k = b; k < std::min(order.size(), b + tc.batch_size); ++k) {
                    auto [s, d] = samples[order[k]];
                    encoded.push_back(shadow_encode(scenes[s].points, dirs[d]).to_image());
                    tgt_rows.push_back({&scenes[s].sample.shadows[d]});
                }
                for (const ImageBuffer& e : encoded) in_rows.push_back({&e});
                Tensor x = batch_concat(in_rows);
                auto outs = models.shadow.forward(x);
                Tensor loss = loss_bce(outs.at("shadow"), batch_concat(tgt_rows));
                for (Tensor& p : params) p.zero_grad();
                loss.backward();
                adam_step(params, state, lr);
                epoch_loss += loss.value();
                ++steps;
                if (log) log->shadow_losses.push_back(loss.value());
            }
            log_line(log_stream, "stage1 shadow epoch " + std::to_string(epoch) +
                                     " mean loss " + std::to_string(epoch_loss / steps));
            models.shadow.save_epoch(checkpoint_dir, epoch);
        }
    }

    // ---- stage 2: SynthesisNet on frozen decompositions and shadows ----
    {
        models.decompose.set_requires_grad(false);
        models.shadow.set_requires_grad(false);

        // frozen per-scene decompositions
        std::vector<MaterialMaps> pred_maps(S);
        for (int s = 0; s < S; ++s) {
            Tensor x = batch_concat({{&scenes[s].sample.flash, scenes[s].depth_in}});
            auto outs = models.decompose.forward(x);
            pred_maps[s].albedo = to_image(outs.at("albedo"));
            pred_maps[s].normal = to_image(outs.at("normal"));
            pred_maps[s].roughness = to_image(outs.at("rough"));
        }
        // frozen per-sample shadow predictions
        std::vector<std::vector<ImageBuffer>> pred_masks(S);
        for (int s = 0; s < S; ++s) {
            pred_masks[s].resize(D);
            for (int d = 0; d < D; ++d) {
                ImageBuffer enc = shadow_encode(scenes[s].points, dirs[d]).to_image();
                auto outs = models.shadow.forward(batch_concat({{&enc}}));
                pred_masks[s][d] = to_image(outs.at("shadow"));
            }
        }

        auto params = models.synthesis.parameters();
        AdamState state;
        state.init(params);
        auto train_dirs = training_direction_indices(D, tc);
        std::vector<std::pair<int, int>> samples;
        for (int s = 0; s < S; ++s)
            for (int d : train_dirs) samples.push_back({s, d});

        const bool uniform_light = cfg.light_intensity.x == cfg.light_intensity.y &&
                                   cfg.light_intensity.y == cfg.light_intensity.z;
        for (int epoch = 0; epoch < tc.epochs_per_stage; ++epoch) {
            double lr = tc.lr_at_epoch(epoch);
            Rng erng(Rng::derive(tc.seed, 3000 + epoch));
            auto order = shuffled(samples.size(), erng);
            double epoch_loss = 0.0;
            int steps = 0;
            for (std::size_t b = 0; b < order.size(); b += tc.batch_size) {
                std::vector<ImageBuffer> renders, encodeds;
                std::vector<std::vector<const ImageBuffer*>> in_rows, tgt_rows;
                std::vector<std::pair<int, int>> batch;
                for (std::size_t k = b; k < std::min(order.size(), b + tc.batch_size); ++k)
                    batch.push_back(samples[order[k]]);
                renders.reserve(batch.size());
                encodeds.reserve(batch.size());
                for (auto [s, d] : batch) {
                    // closed-form render from the frozen decomposition
                    RenderGeometry geom = make_render_geometry(scenes[s].points, dirs[d]);
                    Tensor intensity;
                    if (uniform_light) {
                        intensity = Tensor::scalar(cfg.light_intensity.x);
                    } else {
                        Shape is{1, 3, scenes[s].points.height(), scenes[s].points.width()};
                        std::vector<double> iv(is.numel());
                        const std::int64_t hw =
                            static_cast<std::int64_t>(is.h) * is.w;
                        for (int c = 0; c < 3; ++c)
                            std::fill(iv.begin() + c * hw, iv.begin() + (c + 1) * hw,
                                      cfg.light_intensity[c]);
                        intensity = Tensor::from_data(is, std::move(iv));
                    }
                    Tensor render_t = render_layer(
                        to_tensor(pred_maps[s].albedo), to_tensor(pred_maps[s].normal),
                        to_tensor(pred_maps[s].roughness), geom, Tensor(), intensity, sc);
                    renders.push_back(to_image(render_t));
                    encodeds.push_back(shadow_encode(scenes[s].points, dirs[d]).to_image());
                }
                for (std::size_t k = 0; k < batch.size(); ++k) {
                    auto [s, d] = batch[k];
                    in_rows.push_back({&pred_masks[s][d], &renders[k],
                                       &scenes[s].sample.flash, &pred_maps[s].albedo,
                                       &pred_maps[s].normal, &pred_maps[s].roughness,
                                       &encodeds[k]});
                    tgt_rows.push_back({&scenes[s].sample.relit[d]});
                }
                Tensor x = batch_concat(in_rows);
                auto outs = models.synthesis.forward(x);
                Tensor loss =
                    loss_l1_grad(outs.at("relight"), batch_concat(tgt_rows), tc.lambda_grad);
                for (Tensor& p : params) p.zero_grad();
                loss.backward();
                adam_step(params, state, lr);
                epoch_loss += loss.value();
                ++steps;
                if (log) log->synthesis_losses.push_back(loss.value());
            }
            log_line(log_stream, "stage2 synthesis epoch " + std::to_string(epoch) +
                                     " mean loss " + std::to_string(epoch_loss / steps));
            models.synthesis.save_epoch(checkpoint_dir, epoch);
        }
        models.decompose.set_requires_grad(true);
        models.shadow.set_requires_grad(true);
    }

    models.save(checkpoint_dir);
    return models;
}

}  // namespace rlk::nn
