#include "rlk/nn/bridge.hpp"

namespace rlk::nn {

Tensor to_tensor(const ImageBuffer& img, bool requires_grad) {
    Shape s{1, img.channels(), img.height(), img.width()};
    std::vector<double> data(s.numel());
    const float* p = img.data();
    for (std::int64_t i = 0; i < s.numel(); ++i) data[i] = p[i];
    return Tensor::from_data(s, std::move(data), requires_grad);
}

Tensor stack_images(const std::vector<const ImageBuffer*>& imgs) {
    if (imgs.empty()) throw ShapeError("stack_images: empty batch");
    const ImageBuffer& first = *imgs[0];
    Shape s{static_cast<int>(imgs.size()), first.channels(), first.height(), first.width()};
    std::vector<double> data(s.numel());
    std::int64_t per = first.size();
    for (std::size_t n = 0; n < imgs.size(); ++n) {
        if (!imgs[n]->same_shape(first)) throw ShapeError("stack_images: shape mismatch");
        const float* p = imgs[n]->data();
        for (std::int64_t i = 0; i < per; ++i) data[n * per + i] = p[i];
    }
    return Tensor::from_data(s, std::move(data), false);
}

ImageBuffer to_image(const Tensor& t, int batch_index) {
    Shape s = t.shape();
    if (batch_index < 0 || batch_index >= s.n)
        throw ShapeError("to_image: batch index out of range");
    ImageBuffer img(s.w, s.h, s.c);
    const double* p =
        t.data() + static_cast<std::int64_t>(batch_index) * s.c * s.h * s.w;
    float* q = img.data();
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(s.c) * s.h * s.w; ++i)
        q[i] = static_cast<float>(p[i]);
    return img;
}

}  // namespace rlk::nn
