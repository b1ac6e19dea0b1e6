#pragma once

#include "rlk/brdf.hpp"
#include "rlk/geometry.hpp"
#include "rlk/nn/tensor.hpp"

namespace rlk::nn {

// Per-pixel constants of the shading equation under a fixed view and light:
// to-light, to-view and half-vector fields (no gradients flow into these).
struct RenderGeometry {
    Tensor to_light;  // (1,3,H,W)
    Tensor to_view;   // (1,3,H,W)
    Tensor half;      // (1,3,H,W)
};

RenderGeometry make_render_geometry(const PointImage& points, const LightDirection& w);

// Differentiable closed-form one-bounce shading. Matches shade_directional
// to double rounding; albedo/normal/roughness may carry gradients. mask and
// intensity are optional (undefined tensors mean "all lit" / scale one).
Tensor render_layer(const Tensor& albedo, const Tensor& normal, const Tensor& roughness,
                    const RenderGeometry& geom, const Tensor& mask,
                    const Tensor& intensity, const ShadingConstants& sc = {});

}  // namespace rlk::nn
