#pragma once

// Brute-force cast-shadow reference: march every pixel's ray toward the
// light through camera space and test whether the bilinearly interpolated
// surface rises above the ray along the light axis. Shares nothing with the
// light-space depth buffer in cast_shadow_mask.

#include <algorithm>
#include <cmath>

#include "rlk/geometry.hpp"
#include "rlk/parallel.hpp"

namespace rlk::testsupport {

inline ShadowMask raymarch_shadow_mask(const PointImage& points,
                                       const CameraIntrinsics& K,
                                       const LightDirection& w, double bias = 1e-3,
                                       double contact_slope = 0.3,
                                       double contact_px = 4.0) {
    const int W = points.width(), H = points.height();
    // physical to-light direction in the mirrored (z toward camera) frame
    const Vec3 axis = w.w;

    std::vector<double> zsurf(static_cast<std::size_t>(W) * H, 0.0);
    double zmin = 1e30;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (!points.valid(y, x)) continue;
            zsurf[static_cast<std::size_t>(y) * W + x] = points.at(y, x).z;
            zmin = std::min(zmin, points.at(y, x).z);
        }


    // bilinear camera-space depth; occlusion means the sample sits behind
    // the visible surface at its own pixel
    auto sample_z = [&](double u, double v, double& out) -> bool {
        int x0 = static_cast<int>(std::floor(u)), y0 = static_cast<int>(std::floor(v));
        if (x0 < 0 || y0 < 0 || x0 + 1 >= W || y0 + 1 >= H) return false;
        if (!points.valid(y0, x0) || !points.valid(y0, x0 + 1) ||
            !points.valid(y0 + 1, x0) || !points.valid(y0 + 1, x0 + 1))
            return false;
        double tx = u - x0, ty = v - y0;
        const double* z = zsurf.data();
        double z0 = z[static_cast<std::size_t>(y0) * W + x0] * (1 - tx) +
                    z[static_cast<std::size_t>(y0) * W + x0 + 1] * tx;
        double z1 = z[static_cast<std::size_t>(y0 + 1) * W + x0] * (1 - tx) +
                    z[static_cast<std::size_t>(y0 + 1) * W + x0 + 1] * tx;
        out = z0 * (1 - ty) + z1 * ty;
        return true;
    };

    ShadowMask mask(W, H, 1);
    parallel_for(H, [&](std::int64_t yy) {
        int y = static_cast<int>(yy);
        for (int x = 0; x < W; ++x) {
            if (!points.valid(y, x)) {
                mask.at(0, y, x) = 0.0f;
                continue;
            }
            const Vec3 p = points.at(y, x);
            const Vec3 m0{p.x, p.y, -p.z};
            const double px_world = p.z / K.fx;  // pixel footprint at this depth
            const double dt = 0.35 * px_world;
            // contact offset: near the start the tolerance grows with the
            // travelled distance so a ray grazing its own hillside does not
            // read as cast shadow (terminator pixels stay lit)
            const double contact_cap = contact_px * px_world;
            bool lit = true;
            for (double t = dt; t < 8.0; t += dt) {
                Vec3 s = m0 + axis * t;
                double zc = -s.z;
                if (zc < zmin - bias) break;  // in front of the whole scene
                if (zc < 1e-3) break;         // at the camera plane
                double u = s.x * K.fx / zc + K.cx;
                double v = s.y * K.fy / zc + K.cy;
                if (u < 0 || v < 0 || u > W - 1 || v > H - 1) break;
                double zs;
                if (!sample_z(u, v, zs)) continue;
                if (zc > zs + bias + contact_slope * std::min(t, contact_cap)) {
                    lit = false;
                    break;
                }
            }
            mask.at(0, y, x) = lit ? 1.0f : 0.0f;
        }
    });
    return mask;
}

// Don't-care band: pixels within one pixel of a strong depth discontinuity
// (occlusion boundaries are undefined territory for both algorithms).
inline std::vector<std::uint8_t> silhouette_band(const DepthMap& depth,
                                                 double jump_threshold = 0.02) {
    const int W = depth.width(), H = depth.height();
    std::vector<std::uint8_t> band(static_cast<std::size_t>(W) * H, 0);
    auto mark = [&](int y, int x) {
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                int yy = y + dy, xx = x + dx;
                if (yy >= 0 && xx >= 0 && yy < H && xx < W)
                    band[static_cast<std::size_t>(yy) * W + xx] = 1;
            }
    };
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double z = depth.at(0, y, x);
            if ((x + 1 < W && std::abs(depth.at(0, y, x + 1) - z) > jump_threshold) ||
                (y + 1 < H && std::abs(depth.at(0, y + 1, x) - z) > jump_threshold))
                mark(y, x);
        }
    return band;
}

// Agreement fraction outside the silhouette band.
inline double mask_agreement(const ShadowMask& a, const ShadowMask& b,
                             const std::vector<std::uint8_t>& band) {
    std::int64_t same = 0, total = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
            if (band[static_cast<std::size_t>(y) * a.width() + x]) continue;
            ++total;
            if (a.at(0, y, x) == b.at(0, y, x)) ++same;
        }
    return total == 0 ? 1.0 : static_cast<double>(same) / static_cast<double>(total);
}

}  // namespace rlk::testsupport
