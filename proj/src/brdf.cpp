#include "rlk/brdf.hpp"

#include <algorithm>
#include <cmath>

#include "rlk/parallel.hpp"

namespace rlk {

double ggx_d(double n_dot_h, double roughness) {
    if (!(roughness > 0.0)) throw DomainError("ggx_d: roughness must be positive");
    double a = roughness * roughness;
    double a2 = a * a;
    double d = n_dot_h * n_dot_h * (a2 - 1.0) + 1.0;
    return a2 / (kPi * d * d);
}

double smith_g(double n_dot_l, double n_dot_v, double roughness) {
    if (!(n_dot_l > 0.0) || !(n_dot_v > 0.0))
        throw DomainError("smith_g: cosines must be positive (clamp first)");
    double k = (roughness + 1.0) * (roughness + 1.0) / 8.0;
    auto g1 = [k](double x) { return x / (x * (1.0 - k) + k); };
    return g1(n_dot_l) * g1(n_dot_v);
}

double fresnel_sg(double v_dot_h, double f0) {
    double e = (-5.55473 * v_dot_h - 6.98316) * v_dot_h;
    return f0 + (1.0 - f0) * std::exp2(e);
}

Vec3 brdf_eval(const ShadingGeometry& geom, const BrdfParams& params) {
    params.validate();
    double n_dot_l = std::max(dot(geom.n, geom.l), params.cos_clamp);
    double n_dot_v = std::max(dot(geom.n, geom.v), params.cos_clamp);
    double n_dot_h = std::clamp(dot(geom.n, geom.h), 0.0, 1.0);
    double v_dot_h = std::clamp(dot(geom.v, geom.h), 0.0, 1.0);

    double spec = ggx_d(n_dot_h, params.roughness) * fresnel_sg(v_dot_h, params.f0) *
                  smith_g(n_dot_l, n_dot_v, params.roughness) /
                  (4.0 * n_dot_l * n_dot_v);
    double inv_pi = 1.0 / kPi;
    return {params.albedo.x * inv_pi + spec, params.albedo.y * inv_pi + spec,
            params.albedo.z * inv_pi + spec};
}

namespace {

void require_maps(const MaterialMaps& maps, const PointImage& points) {
    if (!maps.same_shape() || maps.albedo.width() != points.width() ||
        maps.albedo.height() != points.height())
        throw ShapeError("shading: material maps and point image sizes differ");
}

}  // namespace

ImageBuffer shade_directional(const MaterialMaps& maps, const PointImage& points,
                              const LightDirection& w, const Vec3& intensity,
                              const ShadowMask* shadow, const ShadingConstants& sc) {
    require_maps(maps, points);
    if (shadow && (shadow->width() != points.width() || shadow->height() != points.height()))
        throw ShapeError("shade_directional: shadow mask size differs");
    const int W = points.width(), H = points.height();
    ImageBuffer out(W, H, 3);
    const Vec3 l = to_light_camera(w);

    parallel_for(H, [&](std::int64_t y) {
        for (int x = 0; x < W; ++x) {
            if (!points.valid(static_cast<int>(y), x)) continue;
            const Vec3 p = points.at(static_cast<int>(y), x);
            Vec3 n{maps.normal.at(0, static_cast<int>(y), x),
                   maps.normal.at(1, static_cast<int>(y), x),
                   maps.normal.at(2, static_cast<int>(y), x)};
            double cos_l = dot(n, l);
            if (cos_l <= 0.0) continue;
            Vec3 v = normalize(-p);
            ShadingGeometry geom = ShadingGeometry::make(n, l, v);
            BrdfParams params;
            params.albedo = {maps.albedo.at(0, static_cast<int>(y), x),
                             maps.albedo.at(1, static_cast<int>(y), x),
                             maps.albedo.at(2, static_cast<int>(y), x)};
            params.roughness = maps.roughness.at(0, static_cast<int>(y), x);
            params.f0 = sc.f0;
            params.cos_clamp = sc.cos_clamp;
            Vec3 f = brdf_eval(geom, params);
            double s = shadow ? static_cast<double>(shadow->at(0, static_cast<int>(y), x)) : 1.0;
            out.at(0, static_cast<int>(y), x) = static_cast<float>(f.x * cos_l * intensity.x * s);
            out.at(1, static_cast<int>(y), x) = static_cast<float>(f.y * cos_l * intensity.y * s);
            out.at(2, static_cast<int>(y), x) = static_cast<float>(f.z * cos_l * intensity.z * s);
        }
    });
    return out;
}

ImageBuffer render_flash(const MaterialMaps& maps, const PointImage& points,
                         double intensity, const ShadingConstants& sc) {
    require_maps(maps, points);
    const int W = points.width(), H = points.height();

    // validate before spawning workers: parallel_for bodies must not throw
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            if (points.valid(y, x) && norm(points.at(y, x)) < 1e-6)
                throw DomainError("render_flash: point too close to the camera origin");

    ImageBuffer out(W, H, 3);
    parallel_for(H, [&](std::int64_t y) {
        for (int x = 0; x < W; ++x) {
            if (!points.valid(static_cast<int>(y), x)) continue;
            const Vec3 p = points.at(static_cast<int>(y), x);
            double d2 = dot(p, p);
            Vec3 v = normalize(-p);
            Vec3 n{maps.normal.at(0, static_cast<int>(y), x),
                   maps.normal.at(1, static_cast<int>(y), x),
                   maps.normal.at(2, static_cast<int>(y), x)};
            double cos_l = dot(n, v);
            if (cos_l <= 0.0) continue;
            ShadingGeometry geom{n, v, v, v};
            BrdfParams params;
            params.albedo = {maps.albedo.at(0, static_cast<int>(y), x),
                             maps.albedo.at(1, static_cast<int>(y), x),
                             maps.albedo.at(2, static_cast<int>(y), x)};
            params.roughness = maps.roughness.at(0, static_cast<int>(y), x);
            params.f0 = sc.f0;
            params.cos_clamp = sc.cos_clamp;
            Vec3 f = brdf_eval(geom, params);
            double scale = cos_l * intensity / d2;
            out.at(0, static_cast<int>(y), x) = static_cast<float>(f.x * scale);
            out.at(1, static_cast<int>(y), x) = static_cast<float>(f.y * scale);
            out.at(2, static_cast<int>(y), x) = static_cast<float>(f.z * scale);
        }
    });
    return out;
}

}  // namespace rlk
