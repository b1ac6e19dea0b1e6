#include "rlk/relight.hpp"

#include <algorithm>
#include <cmath>

#include "rlk/nn/bridge.hpp"
#include "rlk/nn/render_layer.hpp"

namespace rlk {

void BasisStack::validate() const {
    if (directions.size() != images.size())
        throw ShapeError("basis stack: direction/image count mismatch");
    if (images.empty()) throw ShapeError("basis stack: empty");
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (!images[i].same_shape(images[0]))
            throw ShapeError("basis stack: image shapes differ");
        if (std::abs(norm(directions[i]) - 1.0) > 1e-6)
            throw DomainError("basis stack: direction not unit length");
        for (std::size_t j = 0; j < i; ++j)
            if (norm(directions[i] - directions[j]) < 1e-9)
                throw DomainError("basis stack: duplicate direction");
    }
}

ImageBuffer superpose(const BasisStack& stack, const std::vector<Vec3>& weights) {
    stack.validate();
    if (weights.size() != stack.images.size())
        throw ShapeError("superpose: weight count does not match basis count");
    const ImageBuffer& first = stack.images[0];
    const int W = first.width(), H = first.height(), C = first.channels();
    // accumulate in double, round once
    std::vector<double> acc(static_cast<std::size_t>(W) * H * C, 0.0);
    for (std::size_t i = 0; i < stack.images.size(); ++i) {
        const ImageBuffer& img = stack.images[i];
        const Vec3& w = weights[i];
        for (int c = 0; c < C; ++c) {
            double wc = C == 3 ? w[c] : (w.x + w.y + w.z) / 3.0;
            if (wc == 0.0) continue;
            const float* p = img.plane(c);
            double* a = acc.data() + static_cast<std::size_t>(c) * H * W;
            for (std::int64_t k = 0; k < static_cast<std::int64_t>(H) * W; ++k)
                a[k] += wc * p[k];
        }
    }
    ImageBuffer out(W, H, C);
    float* q = out.data();
    for (std::size_t i = 0; i < acc.size(); ++i) q[i] = static_cast<float>(acc[i]);
    return out;
}

std::vector<Vec3> env_weights(const ImageBuffer& env,
                              const std::vector<LightDirection>& dirs) {
    if (dirs.empty()) throw ShapeError("env_weights: empty direction list");
    std::vector<Vec3> weights(dirs.size());
    if (env.size() == 0) return weights;
    const int W = env.width(), H = env.height(), C = env.channels();
    const double dphi = 2.0 * kPi / W;
    const double dtheta = 0.5 * kPi / H;
    for (int y = 0; y < H; ++y) {
        double theta = (y + 0.5) * dtheta;
        double sin_t = std::sin(theta), cos_t = std::cos(theta);
        double solid = sin_t * dtheta * dphi;
        for (int x = 0; x < W; ++x) {
            double phi = (x + 0.5) * dphi;
            Vec3 w{sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t};
            int best = 0;
            double best_dot = -2.0;
            for (std::size_t i = 0; i < dirs.size(); ++i) {
                double d = dot(w, dirs[i].w);
                if (d > best_dot) {
                    best_dot = d;
                    best = static_cast<int>(i);
                }
            }
            Vec3 radiance;
            if (C == 3)
                radiance = {env.at(0, y, x), env.at(1, y, x), env.at(2, y, x)};
            else
                radiance = {env.at(0, y, x), env.at(0, y, x), env.at(0, y, x)};
            weights[best] += radiance * solid;
        }
    }
    return weights;
}

MaterialMaps predict_decompose(const nn::TrainedModels& models, const ImageBuffer& flash,
                               const DepthMap& depth) {
    if (!models.decompose.defined()) throw ConfigError("decompose network not loaded");
    if (flash.width() != depth.width() || flash.height() != depth.height())
        throw ShapeError("predict_decompose: flash/depth size mismatch");
    nn::Tensor x = nn::concat_channels({nn::to_tensor(flash), nn::to_tensor(depth)});
    auto outs = models.decompose.forward(x);
    MaterialMaps maps;
    maps.albedo = nn::to_image(outs.at("albedo"));
    maps.normal = nn::to_image(outs.at("normal"));
    maps.roughness = nn::to_image(outs.at("rough"));
    return maps;
}

ShadowMask predict_shadow(const nn::TrainedModels& models, const PointImage& points,
                          const LightDirection& w) {
    if (!models.shadow.defined()) throw ConfigError("shadow network not loaded");
    ImageBuffer enc = shadow_encode(points, w).to_image();
    auto outs = models.shadow.forward(nn::to_tensor(enc));
    return nn::to_image(outs.at("shadow"));
}

namespace {

nn::Tensor light_intensity_tensor(const PipelineConfig& cfg, int H, int W) {
    const Vec3& li = cfg.light_intensity;
    if (li.x == li.y && li.y == li.z) return nn::Tensor::scalar(li.x);
    nn::Shape s{1, 3, H, W};
    std::vector<double> v(s.numel());
    const std::int64_t hw = static_cast<std::int64_t>(H) * W;
    for (int c = 0; c < 3; ++c) std::fill(v.begin() + c * hw, v.begin() + (c + 1) * hw, li[c]);
    return nn::Tensor::from_data(s, std::move(v));
}

}  // namespace

ImageBuffer predict_relit(const nn::TrainedModels& models, const ImageBuffer& flash,
                          const DepthMap& depth, const LightDirection& w,
                          const CameraIntrinsics& K, const PipelineConfig& cfg) {
    if (!models.synthesis.defined()) throw ConfigError("synthesis network not loaded");
    MaterialMaps maps = predict_decompose(models, flash, depth);
    PointImage points = unproject(depth, K);
    ImageBuffer mask = predict_shadow(models, points, w);
    ImageBuffer encoded = shadow_encode(points, w).to_image();

    // closed-form render from the predicted decomposition (no cast shadow)
    nn::RenderGeometry geom = nn::make_render_geometry(points, w);
    ShadingConstants sc{cfg.f0, cfg.cos_clamp};
    nn::Tensor render_t = nn::render_layer(
        nn::to_tensor(maps.albedo), nn::to_tensor(maps.normal),
        nn::to_tensor(maps.roughness), geom, nn::Tensor(),
        light_intensity_tensor(cfg, depth.height(), depth.width()), sc);

    nn::Tensor input = nn::concat_channels(
        {nn::to_tensor(mask), render_t, nn::to_tensor(flash), nn::to_tensor(maps.albedo),
         nn::to_tensor(maps.normal), nn::to_tensor(maps.roughness),
         nn::to_tensor(encoded)});
    auto outs = models.synthesis.forward(input);
    return nn::to_image(outs.at("relight"));
}

ImageBuffer infer_relit(const ImageBuffer& flash, const DepthMap& depth,
                        const LightDirection& w, const CameraIntrinsics& K,
                        const nn::TrainedModels* models, const OracleInputs* oracle,
                        const PipelineConfig& cfg) {
    if (oracle) {
        PointImage points = unproject(depth, K);
        ShadingConstants sc{cfg.f0, cfg.cos_clamp};
        if (oracle->mask)
            return shade_directional(oracle->maps, points, w, cfg.light_intensity,
                                     oracle->mask, sc);
        ShadowMask mask = cast_shadow_mask(points, w, cfg.shadow);
        return shade_directional(oracle->maps, points, w, cfg.light_intensity, &mask, sc);
    }
    if (!models) throw ConfigError("infer_relit: no model directory and no oracle inputs");
    return predict_relit(*models, flash, depth, w, K, cfg);
}

BasisStack build_basis_stack(const ImageBuffer& flash, const DepthMap& depth,
                             const std::vector<LightDirection>& dirs,
                             const CameraIntrinsics& K, const nn::TrainedModels* models,
                             const OracleInputs* oracle, const PipelineConfig& cfg) {
    BasisStack stack;
    for (const LightDirection& w : dirs) {
        stack.images.push_back(infer_relit(flash, depth, w, K, models, oracle, cfg));
        stack.directions.push_back(w.w);
    }
    stack.validate();
    return stack;
}

}  // namespace rlk
