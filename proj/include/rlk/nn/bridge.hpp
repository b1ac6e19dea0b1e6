#pragma once

#include <vector>

#include "rlk/image.hpp"
#include "rlk/nn/tensor.hpp"

namespace rlk::nn {

// (1,C,H,W) tensor from a planar image.
Tensor to_tensor(const ImageBuffer& img, bool requires_grad = false);

// Batch (N,C,H,W) from same-shape images.
Tensor stack_images(const std::vector<const ImageBuffer*>& imgs);

// Batch element back to a planar float image.
ImageBuffer to_image(const Tensor& t, int batch_index = 0);

}  // namespace rlk::nn
