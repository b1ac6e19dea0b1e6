#pragma once

#include <optional>

#include "rlk/common.hpp"
#include "rlk/geometry.hpp"
#include "rlk/image.hpp"

namespace rlk {

constexpr double kDefaultF0 = 0.05;
constexpr double kCosineClamp = 1e-4;

struct BrdfParams {
    Vec3 albedo{0, 0, 0};
    double roughness = 1.0;
    double f0 = kDefaultF0;
    double cos_clamp = kCosineClamp;

    void validate() const {
        if (!(roughness > 0.0) || roughness > 1.0)
            throw DomainError("roughness must lie in (0,1]");
    }
};

// Unit shading vectors: normal, to-light, to-viewer, half vector.
struct ShadingGeometry {
    Vec3 n, l, v, h;

    static ShadingGeometry make(const Vec3& n, const Vec3& l, const Vec3& v) {
        Vec3 sum = l + v;
        if (norm(sum) < 1e-9) throw DomainError("degenerate half vector (l = -v)");
        return {n, l, v, normalize(sum)};
    }
};

// Albedo (3ch), unit normals (3ch), roughness in (0,1] (1ch).
struct MaterialMaps {
    ImageBuffer albedo;
    ImageBuffer normal;
    ImageBuffer roughness;

    bool same_shape() const {
        return albedo.same_shape(normal) && albedo.width() == roughness.width() &&
               albedo.height() == roughness.height();
    }
};

// GGX normal distribution, alpha = roughness^2.
double ggx_d(double n_dot_h, double roughness);

// Smith masking-shadowing, k = (roughness+1)^2 / 8.
double smith_g(double n_dot_l, double n_dot_v, double roughness);

// Spherical-Gaussian Schlick approximation with base-2 exponent.
double fresnel_sg(double v_dot_h, double f0 = kDefaultF0);

// albedo/pi + D*F*G / (4 (n.l)(n.v)), cosines clamped to kCosineClamp.
Vec3 brdf_eval(const ShadingGeometry& geom, const BrdfParams& params);

// Shared constants for image-level shading, overridable from the config.
struct ShadingConstants {
    double f0 = kDefaultF0;
    double cos_clamp = kCosineClamp;
};

// One-bounce image under a directional light; pixels facing away from the
// light are black, and the optional mask multiplies in cast shadow.
ImageBuffer shade_directional(const MaterialMaps& maps, const PointImage& points,
                              const LightDirection& w, const Vec3& intensity,
                              const ShadowMask* shadow = nullptr,
                              const ShadingConstants& sc = {});

// Point light at the camera origin (l = v), inverse-square falloff, no
// shadow term: the flash and camera are co-located.
ImageBuffer render_flash(const MaterialMaps& maps, const PointImage& points,
                         double intensity, const ShadingConstants& sc = {});

}  // namespace rlk
