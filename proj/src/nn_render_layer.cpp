#include "rlk/nn/render_layer.hpp"

namespace rlk::nn {

RenderGeometry make_render_geometry(const PointImage& points, const LightDirection& w) {
    const int W = points.width(), H = points.height();
    const Vec3 l = to_light_camera(w);
    Shape s{1, 3, H, W};
    std::vector<double> ld(s.numel()), vd(s.numel()), hd(s.numel());
    const std::int64_t hw = static_cast<std::int64_t>(H) * W;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            std::int64_t i = static_cast<std::int64_t>(y) * W + x;
            Vec3 v{0, 0, -1}, h{0, 0, -1};
            if (points.valid(y, x)) {
                v = normalize(-points.at(y, x));
                h = normalize(l + v);
            }
            ld[i] = l.x;           ld[hw + i] = l.y;     ld[2 * hw + i] = l.z;
            vd[i] = v.x;           vd[hw + i] = v.y;     vd[2 * hw + i] = v.z;
            hd[i] = h.x;           hd[hw + i] = h.y;     hd[2 * hw + i] = h.z;
        }
    RenderGeometry g;
    g.to_light = Tensor::from_data(s, std::move(ld));
    g.to_view = Tensor::from_data(s, std::move(vd));
    g.half = Tensor::from_data(s, std::move(hd));
    return g;
}

Tensor render_layer(const Tensor& albedo, const Tensor& normal, const Tensor& roughness,
                    const RenderGeometry& geom, const Tensor& mask,
                    const Tensor& intensity, const ShadingConstants& sc) {
    if (albedo.shape().c != 3 || normal.shape().c != 3 || roughness.shape().c != 1)
        throw ShapeError("render_layer: expected 3/3/1 channel inputs");

    const int N = albedo.shape().n;
    auto tile = [N](const Tensor& t) {
        if (N == 1) return t;
        // same constants for every batch element
        Shape s = t.shape();
        std::vector<double> data;
        data.reserve(static_cast<std::size_t>(s.numel()) * N);
        for (int i = 0; i < N; ++i)
            data.insert(data.end(), t.data(), t.data() + s.numel());
        return Tensor::from_data(Shape{N, s.c, s.h, s.w}, std::move(data));
    };
    Tensor l = tile(geom.to_light), v = tile(geom.to_view), h = tile(geom.half);

    Tensor ndl = channel_sum(normal * l);
    Tensor ndv = channel_sum(normal * v);
    Tensor ndh = clamp(channel_sum(normal * h), 0.0, 1.0);
    Tensor vdh = clamp(channel_sum(v * h), 0.0, 1.0);  // constant

    Tensor ndl_c = clamp_min(ndl, sc.cos_clamp);
    Tensor ndv_c = clamp_min(ndv, sc.cos_clamp);

    Tensor alpha = square(roughness);
    Tensor a2 = square(alpha);
    Tensor dden = add_const(square(ndh) * add_const(a2, -1.0), 1.0);
    Tensor D = a2 / scale(square(dden), kPi);

    Tensor k = scale(square(add_const(roughness, 1.0)), 1.0 / 8.0);
    auto g1 = [&k](const Tensor& x) {
        return x / (x * add_const(neg(k), 1.0) + k);
    };
    Tensor G = g1(ndl_c) * g1(ndv_c);

    // exponent is (-5.55473*vdh - 6.98316)*vdh
    Tensor F = add_const(
        scale(exp2(add_const(scale(vdh, -5.55473), -6.98316) * vdh), 1.0 - sc.f0), sc.f0);

    Tensor spec = D * F * G / scale(ndl_c * ndv_c, 4.0);
    Tensor f_rgb = scale(albedo, 1.0 / kPi) + broadcast_channels(spec, 3);

    Tensor cos_vis = clamp_min(ndl, 0.0);
    Tensor out = f_rgb * broadcast_channels(cos_vis, 3);
    if (intensity.defined()) out = out * intensity;
    if (mask.defined()) {
        Tensor m = mask.shape().c == 1 ? broadcast_channels(mask, 3) : mask;
        out = out * m;
    }
    return out;
}

}  // namespace rlk::nn
