#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rlk/common.hpp"
#include "rlk/image.hpp"
#include "rlk/rng.hpp"

namespace rlk {

struct CameraIntrinsics {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;

    void validate() const {
        if (fx <= 0 || fy <= 0) throw ValidationError("intrinsics: focal length must be positive");
        if (cx < 0 || cx >= width || cy < 0 || cy >= height)
            throw ValidationError("intrinsics: principal point outside image");
    }
    // Pinhole defaults: ~53 degree horizontal FOV.
    static CameraIntrinsics standard(int width, int height) {
        CameraIntrinsics k;
        k.width = width;
        k.height = height;
        k.fx = k.fy = static_cast<double>(width);
        k.cx = (width - 1) * 0.5;
        k.cy = (height - 1) * 0.5;
        return k;
    }
};

// Per-pixel camera-space (or light-space) coordinates, double precision.
// Pixels with invalid depth carry a cleared valid flag and are never
// interpolated silently.
class PointImage {
public:
    PointImage() = default;
    PointImage(int width, int height)
        : width_(width), height_(height),
          pts_(static_cast<std::size_t>(width) * height),
          valid_(static_cast<std::size_t>(width) * height, 1) {}

    int width() const { return width_; }
    int height() const { return height_; }
    Vec3& at(int y, int x) { return pts_[static_cast<std::size_t>(y) * width_ + x]; }
    const Vec3& at(int y, int x) const {
        return pts_[static_cast<std::size_t>(y) * width_ + x];
    }
    bool valid(int y, int x) const {
        return valid_[static_cast<std::size_t>(y) * width_ + x] != 0;
    }
    void set_valid(int y, int x, bool v) {
        valid_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
    }
    std::int64_t count_valid() const;

    // 3-channel float view (for serialization / network input).
    ImageBuffer to_image() const;

private:
    int width_ = 0, height_ = 0;
    std::vector<Vec3> pts_;
    std::vector<std::uint8_t> valid_;
};

// Single-channel depth with values in (0,1]; 0 marks invalid pixels.
using DepthMap = ImageBuffer;

// Rotation whose third column is the light direction, plus t=(0,0,1).
struct LightFrame {
    std::array<double, 9> R;  // column-major: columns e1, e2, w

    Vec3 col(int i) const { return {R[3 * i], R[3 * i + 1], R[3 * i + 2]}; }
    Vec3 apply_transposed(const Vec3& p) const {
        return {dot(col(0), p), dot(col(1), p), dot(col(2), p)};
    }
};

// Hard {0,1} mask (0 = in shadow) or a network's soft [0,1] prediction.
using ShadowMask = ImageBuffer;

struct ShadowConfig {
    double resolution_multiplier = 2.0;  // buffer cells per image-width pixel
    double bias = 1e-3;                  // constant depth bias, scene units
    int splat_radius = 1;                // 1 = cell plus 4-neighborhood
    double slope_bias_scale = 2.0;       // slope-aware bias term, suppresses acne
};

struct DegradeParams {
    double noise_sigma = 6.25e-2;
    double blur_sigma = 1.0;  // 0 disables the blur
};

PointImage unproject(const DepthMap& depth, const CameraIntrinsics& K);

// Inverse of unproject for valid points; returns pixel coordinates.
inline void project(const CameraIntrinsics& K, const Vec3& p, double& u, double& v) {
    u = p.x * K.fx / p.z + K.cx;
    v = p.y * K.fy / p.z + K.cy;
}

// Central-difference cross-product normals, oriented toward the camera.
ImageBuffer normals_from_depth(const PointImage& points);

// Deterministic orthonormal completion of w: pick the two standard basis
// vectors least aligned with w (ties by index), Gram-Schmidt them, flip the
// first column if the determinant comes out negative.
LightFrame light_frame(const LightDirection& w);

// T(p) = R^T p + (0,0,1); third output channel is w.p + 1.
PointImage shadow_encode(const PointImage& points, const LightDirection& w);

// Orthographic min-depth buffer seen from the light; hard {0,1} output.
ShadowMask cast_shadow_mask(const PointImage& points, const LightDirection& w,
                            const ShadowConfig& cfg = {});

// Gaussian noise then 5x5 truncated Gaussian blur, clamped to [0,1].
DepthMap degrade_depth(const DepthMap& depth, std::uint64_t seed,
                       const DegradeParams& params = {});

}  // namespace rlk
