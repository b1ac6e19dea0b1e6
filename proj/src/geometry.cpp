#include "rlk/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "rlk/parallel.hpp"

namespace rlk {

std::int64_t PointImage::count_valid() const {
    std::int64_t n = 0;
    for (auto v : valid_) n += v;
    return n;
}

ImageBuffer PointImage::to_image() const {
    ImageBuffer img(width_, height_, 3);
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x) {
            const Vec3& p = at(y, x);
            img.at(0, y, x) = static_cast<float>(p.x);
            img.at(1, y, x) = static_cast<float>(p.y);
            img.at(2, y, x) = static_cast<float>(p.z);
        }
    return img;
}

PointImage unproject(const DepthMap& depth, const CameraIntrinsics& K) {
    K.validate();
    if (depth.channels() != 1) throw ShapeError("unproject: depth must be single channel");
    if (depth.width() != K.width || depth.height() != K.height)
        throw ShapeError("unproject: depth size does not match intrinsics");
    PointImage out(depth.width(), depth.height());
    for (int y = 0; y < depth.height(); ++y)
        for (int x = 0; x < depth.width(); ++x) {
            double z = depth.at(0, y, x);
            if (z <= 0.0) {
                out.set_valid(y, x, false);
                continue;
            }
            out.at(y, x) = {(x - K.cx) * z / K.fx, (y - K.cy) * z / K.fy, z};
        }
    return out;
}

ImageBuffer normals_from_depth(const PointImage& points) {
    const int W = points.width(), H = points.height();
    ImageBuffer n(W, H, 3);
    std::vector<std::uint8_t> ok(static_cast<std::size_t>(W) * H, 0);

    auto diff = [&](int y, int x, int dy, int dx) -> Vec3 {
        // central difference, degrading to one-sided at borders/invalid pixels
        int y0 = y - dy, x0 = x - dx, y1 = y + dy, x1 = x + dx;
        bool h0 = y0 >= 0 && x0 >= 0 && y0 < H && x0 < W && points.valid(y0, x0);
        bool h1 = y1 < H && x1 < W && y1 >= 0 && x1 >= 0 && points.valid(y1, x1);
        if (h0 && h1) return (points.at(y1, x1) - points.at(y0, x0)) * 0.5;
        if (h1) return points.at(y1, x1) - points.at(y, x);
        if (h0) return points.at(y, x) - points.at(y0, x0);
        return {0, 0, 0};
    };

    parallel_for(H, [&](std::int64_t yy) {
        int y = static_cast<int>(yy);
        for (int x = 0; x < W; ++x) {
            if (!points.valid(y, x)) continue;
            Vec3 tx = diff(y, x, 0, 1);
            Vec3 ty = diff(y, x, 1, 0);
            Vec3 c = cross(tx, ty);
            double len = norm(c);
            if (len < 1e-14) continue;  // degenerate; filled below
            c = c / len;
            if (dot(c, -points.at(y, x)) < 0.0) c = -c;
            n.at(0, y, x) = static_cast<float>(c.x);
            n.at(1, y, x) = static_cast<float>(c.y);
            n.at(2, y, x) = static_cast<float>(c.z);
            ok[static_cast<std::size_t>(y) * W + x] = 1;
        }
    });

    // degenerate pixels copy the nearest resolved neighbor (ring search)
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (!points.valid(y, x) || ok[static_cast<std::size_t>(y) * W + x]) continue;
            bool found = false;
            for (int r = 1; r < std::max(W, H) && !found; ++r)
                for (int dy = -r; dy <= r && !found; ++dy)
                    for (int dx = -r; dx <= r && !found; ++dx) {
                        if (std::max(std::abs(dy), std::abs(dx)) != r) continue;
                        int yy = y + dy, xx = x + dx;
                        if (yy < 0 || xx < 0 || yy >= H || xx >= W) continue;
                        if (!ok[static_cast<std::size_t>(yy) * W + xx]) continue;
                        n.at(0, y, x) = n.at(0, yy, xx);
                        n.at(1, y, x) = n.at(1, yy, xx);
                        n.at(2, y, x) = n.at(2, yy, xx);
                        found = true;
                    }
            if (!found) n.at(2, y, x) = -1.0f;  // lone pixel: face the camera
        }
    return n;
}

LightFrame light_frame(const LightDirection& w) {
    const Vec3 axis = w.w;
    // two standard basis vectors least aligned with the light axis
    std::array<double, 3> a = {std::abs(axis.x), std::abs(axis.y), std::abs(axis.z)};
    int i0 = 0, i1 = 1;
    {
        std::array<int, 3> idx = {0, 1, 2};
        std::stable_sort(idx.begin(), idx.end(),
                         [&](int i, int j) { return a[i] < a[j]; });
        i0 = std::min(idx[0], idx[1]);
        i1 = std::max(idx[0], idx[1]);
    }
    auto basis = [](int i) {
        return Vec3(i == 0 ? 1.0 : 0.0, i == 1 ? 1.0 : 0.0, i == 2 ? 1.0 : 0.0);
    };
    Vec3 e0 = basis(i0), e1 = basis(i1);
    Vec3 u = normalize(e0 - axis * dot(e0, axis));
    Vec3 v = e1 - axis * dot(e1, axis) - u * dot(e1, u);
    v = normalize(v);

    double det = dot(cross(u, v), axis);
    if (det < 0.0) u = -u;

    LightFrame f;
    f.R = {u.x, u.y, u.z, v.x, v.y, v.z, axis.x, axis.y, axis.z};
    return f;
}

PointImage shadow_encode(const PointImage& points, const LightDirection& w) {
    const LightFrame f = light_frame(w);
    const Vec3 t{0, 0, 1};
    PointImage out(points.width(), points.height());
    for (int y = 0; y < points.height(); ++y)
        for (int x = 0; x < points.width(); ++x) {
            if (!points.valid(y, x)) {
                out.set_valid(y, x, false);
                continue;
            }
            out.at(y, x) = f.apply_transposed(points.at(y, x)) + t;
        }
    return out;
}

// Occlusion test in the light's orthographic frame. Points are mirrored to
// z-up ("toward camera") coordinates so the stored direction is the physical
// to-light vector; c = w . m grows toward the light, so a cell's maximum c
// is its minimum light-depth. Each splat writes a conservative value
// (point c minus the local surface slope over the splat footprint) so the
// buffer approximates the *lower* envelope of the surface sheet crossing the
// cell; a flat tilted surface then never shadows itself while a detached
// occluder sheet still registers far above the receiver.
ShadowMask cast_shadow_mask(const PointImage& points, const LightDirection& w,
                            const ShadowConfig& cfg) {
    const int W = points.width(), H = points.height();
    if (points.count_valid() == 0)
        throw DomainError("cast_shadow_mask: no valid points");

    const LightFrame f = light_frame(w);
    const Vec3 e0 = f.col(0), e1 = f.col(1), axis = w.w;

    // light-frame coordinates of mirrored points
    std::vector<double> la(static_cast<std::size_t>(W) * H);
    std::vector<double> lb(la.size()), lc(la.size());
    double amin = std::numeric_limits<double>::max(), amax = -amin;
    double bmin = amin, bmax = -amin;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * W + x;
            if (!points.valid(y, x)) continue;
            const Vec3 p = points.at(y, x);
            const Vec3 m{p.x, p.y, -p.z};
            la[i] = dot(e0, m);
            lb[i] = dot(e1, m);
            lc[i] = dot(axis, m);
            amin = std::min(amin, la[i]);
            amax = std::max(amax, la[i]);
            bmin = std::min(bmin, lb[i]);
            bmax = std::max(bmax, lb[i]);
        }

    ShadowMask mask(W, H, 1);
    const int res = std::max(8, static_cast<int>(std::lround(cfg.resolution_multiplier * W)));
    const double extent = std::max(amax - amin, bmax - bmin);
    if (extent < 1e-12) {  // single column of points: nothing can occlude
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                mask.at(0, y, x) = points.valid(y, x) ? 1.0f : 0.0f;
        return mask;
    }
    const double cell = extent / res;
    const int na = static_cast<int>((amax - amin) / cell) + 1;
    const int nb = static_cast<int>((bmax - bmin) / cell) + 1;

    // per-pixel surface slope in the light frame: max |dc| per lateral cell
    std::vector<double> slope(la.size(), 0.0);
    parallel_for(H, [&](std::int64_t yy) {
        int y = static_cast<int>(yy);
        for (int x = 0; x < W; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * W + x;
            if (!points.valid(y, x)) continue;
            double s = 0.0;
            const int dy[4] = {0, 0, -1, 1}, dx[4] = {-1, 1, 0, 0};
            for (int k = 0; k < 4; ++k) {
                int y2 = y + dy[k], x2 = x + dx[k];
                if (y2 < 0 || x2 < 0 || y2 >= H || x2 >= W) continue;
                std::size_t j = static_cast<std::size_t>(y2) * W + x2;
                if (!points.valid(y2, x2)) continue;
                double lateral = std::max({std::abs(la[j] - la[i]),
                                           std::abs(lb[j] - lb[i]), 0.25 * cell});
                s = std::max(s, std::abs(lc[j] - lc[i]) / lateral);
            }
            slope[i] = s;
        }
    });

    std::vector<double> buf(static_cast<std::size_t>(na) * nb,
                            -std::numeric_limits<double>::max());

    auto cell_a = [&](double a) { return (a - amin) / cell - 0.5; };  // center coords
    auto cell_b = [&](double b) { return (b - bmin) / cell - 0.5; };
    auto update = [&](int ja, int jb, double c) {
        if (ja < 0 || jb < 0 || ja >= na || jb >= nb) return;
        std::size_t idx = static_cast<std::size_t>(ja) * nb + jb;
        buf[idx] = std::max(buf[idx], c);
    };
    // edge-on triangles have no interior; walk their longest edge writing
    // the value interpolated at each touched cell's center
    auto raster_segment = [&](const double* P0, const double* P1) {
        double u0 = cell_a(P0[0]), v0 = cell_b(P0[1]);
        double u1 = cell_a(P1[0]), v1 = cell_b(P1[1]);
        double du = u1 - u0, dv = v1 - v0;
        double len2 = du * du + dv * dv;
        int steps = static_cast<int>(std::max(std::abs(du), std::abs(dv))) * 2 + 1;
        for (int s = 0; s <= steps; ++s) {
            double t = static_cast<double>(s) / steps;
            int ja = static_cast<int>(std::lround(u0 + du * t));
            int jb = static_cast<int>(std::lround(v0 + dv * t));
            double tc = len2 < 1e-12
                            ? 0.5
                            : std::clamp(((ja - u0) * du + (jb - v0) * dv) / len2, 0.0, 1.0);
            update(ja, jb, P0[2] + (P1[2] - P0[2]) * tc);
        }
    };
    auto raster_triangle = [&](const double* A, const double* B, const double* C) {
        double ua = cell_a(A[0]), va = cell_b(A[1]);
        double ub = cell_a(B[0]), vb = cell_b(B[1]);
        double uc = cell_a(C[0]), vc = cell_b(C[1]);
        double area2 = (ub - ua) * (vc - va) - (uc - ua) * (vb - va);
        if (std::abs(area2) < 0.05) {
            raster_segment(A, B);
            raster_segment(A, C);
            raster_segment(B, C);
            return;
        }
        int ia0 = std::max(0, static_cast<int>(std::ceil(std::min({ua, ub, uc}))));
        int ia1 = std::min(na - 1, static_cast<int>(std::floor(std::max({ua, ub, uc}))));
        int ib0 = std::max(0, static_cast<int>(std::ceil(std::min({va, vb, vc}))));
        int ib1 = std::min(nb - 1, static_cast<int>(std::floor(std::max({va, vb, vc}))));
        double inv = 1.0 / area2;
        for (int ja = ia0; ja <= ia1; ++ja)
            for (int jb = ib0; jb <= ib1; ++jb) {
                double w0 = ((ub - ja) * (vc - jb) - (uc - ja) * (vb - jb)) * inv;
                double w1 = ((uc - ja) * (va - jb) - (ua - ja) * (vc - jb)) * inv;
                double w2 = 1.0 - w0 - w1;
                if (w0 < 0 || w1 < 0 || w2 < 0) continue;
                update(ja, jb, w0 * A[2] + w1 * B[2] + w2 * C[2]);
            }
    };

    // rasterize the depth mesh seen from the light: interpolated surface,
    // no gaps across cliffs or fold-overs (point splats leak there)
    for (int y = 0; y + 1 < H; ++y)
        for (int x = 0; x + 1 < W; ++x) {
            std::size_t i00 = static_cast<std::size_t>(y) * W + x;
            std::size_t i01 = i00 + 1;
            std::size_t i10 = i00 + W;
            std::size_t i11 = i10 + 1;
            if (!points.valid(y, x) || !points.valid(y, x + 1) ||
                !points.valid(y + 1, x) || !points.valid(y + 1, x + 1))
                continue;
            double p00[3] = {la[i00], lb[i00], lc[i00]};
            double p01[3] = {la[i01], lb[i01], lc[i01]};
            double p10[3] = {la[i10], lb[i10], lc[i10]};
            double p11[3] = {la[i11], lb[i11], lc[i11]};
            raster_triangle(p00, p01, p11);
            raster_triangle(p00, p11, p10);
        }

    // the pixel's own sheet can reach slope * cell above its own cell
    // center; the slope-scaled term keeps that from reading as
    // self-occlusion
    const double patch = cell * (cfg.splat_radius + 1);
    const double kEmpty = -std::numeric_limits<double>::max();
    parallel_for(H, [&](std::int64_t yy) {
        int y = static_cast<int>(yy);
        for (int x = 0; x < W; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * W + x;
            if (!points.valid(y, x)) {
                mask.at(0, y, x) = 0.0f;
                continue;
            }
            // bilinear read of the depth buffer at the exact lateral position
            double ua = (la[i] - amin) / cell - 0.5;
            double vb = (lb[i] - bmin) / cell - 0.5;
            int ja = static_cast<int>(std::floor(ua));
            int jb = static_cast<int>(std::floor(vb));
            double ta = ua - ja, tb = vb - jb;
            double occluder = kEmpty;
            double self = lc[i];
            auto cellv = [&](int a, int b) {
                if (a < 0 || b < 0 || a >= na || b >= nb) return self;
                double v = buf[static_cast<std::size_t>(a) * nb + b];
                return v == kEmpty ? self : v;
            };
            double c00 = cellv(ja, jb), c01 = cellv(ja, jb + 1);
            double c10 = cellv(ja + 1, jb), c11 = cellv(ja + 1, jb + 1);
            occluder = (c00 * (1 - ta) + c10 * ta) * (1 - tb) +
                       (c01 * (1 - ta) + c11 * ta) * tb;
            double threshold = cfg.bias + cfg.slope_bias_scale * slope[i] * patch;
            mask.at(0, y, x) = (lc[i] >= occluder - threshold) ? 1.0f : 0.0f;
        }
    });
    return mask;
}

DepthMap degrade_depth(const DepthMap& depth, std::uint64_t seed,
                       const DegradeParams& params) {
    if (depth.channels() != 1) throw ShapeError("degrade_depth: depth must be single channel");
    const int W = depth.width(), H = depth.height();
    ImageBuffer noisy(W, H, 1);

    Rng rng(seed);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double v = depth.at(0, y, x);
            if (params.noise_sigma > 0.0) v += rng.normal(0.0, params.noise_sigma);
            noisy.at(0, y, x) = static_cast<float>(v);
        }

    ImageBuffer out(W, H, 1);
    if (params.blur_sigma > 0.0) {
        // 5x5 truncated Gaussian, replicate borders
        double k[5];
        double sum = 0.0;
        for (int i = -2; i <= 2; ++i) {
            k[i + 2] = std::exp(-0.5 * i * i / (params.blur_sigma * params.blur_sigma));
            sum += k[i + 2];
        }
        for (double& v : k) v /= sum;

        ImageBuffer tmp(W, H, 1);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double acc = 0.0;
                for (int i = -2; i <= 2; ++i)
                    acc += k[i + 2] * noisy.at(0, y, std::clamp(x + i, 0, W - 1));
                tmp.at(0, y, x) = static_cast<float>(acc);
            }
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double acc = 0.0;
                for (int i = -2; i <= 2; ++i)
                    acc += k[i + 2] * tmp.at(0, std::clamp(y + i, 0, H - 1), x);
                out.at(0, y, x) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
            }
    } else {
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                out.at(0, y, x) =
                    static_cast<float>(std::clamp<double>(noisy.at(0, y, x), 0.0, 1.0));
    }
    return out;
}

}  // namespace rlk
