#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rlk/common.hpp"

namespace rlk {

// Planar (channel-major) image of linear-intensity floats. Row-major within
// a channel. Nominal range [0,1]; render outputs may exceed 1 but must stay
// finite. Treated as an immutable value once constructed by an operation.
class ImageBuffer {
public:
    ImageBuffer() = default;
    ImageBuffer(int width, int height, int channels, float fill = 0.0f);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }
    std::int64_t pixels() const {
        return static_cast<std::int64_t>(width_) * height_;
    }

    float& at(int c, int y, int x) {
        return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
    }
    float at(int c, int y, int x) const {
        return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
    }
    float* plane(int c) {
        return data_.data() + static_cast<std::size_t>(c) * height_ * width_;
    }
    const float* plane(int c) const {
        return data_.data() + static_cast<std::size_t>(c) * height_ * width_;
    }
    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    bool same_shape(const ImageBuffer& o) const {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }
    bool all_finite() const;

private:
    int width_ = 0, height_ = 0, channels_ = 0;
    std::vector<float> data_;
};

// Mean squared error over all elements. Shapes must match.
double mse(const ImageBuffer& a, const ImageBuffer& b);

// 10*log10(1/mse) with peak 1.0, capped at 99 dB.
double psnr(const ImageBuffer& a, const ImageBuffer& b);
double psnr_from_mse(double mse_value);

// max(a-b, 0) elementwise; flash isolation works in the linear domain.
ImageBuffer subtract_clamped(const ImageBuffer& a, const ImageBuffer& b);

// Piecewise sRGB transfer (IEC 61966-2-1), scalar form.
double srgb_encode_value(double linear);
double srgb_decode_value(double encoded);

// Clamp to [0,1], apply sRGB, quantize to 8 bits (and the inverse).
std::vector<std::uint8_t> display_encode(const ImageBuffer& img);
ImageBuffer display_decode(const std::vector<std::uint8_t>& bytes, int width,
                           int height, int channels);

// Raw float interchange format: 16-byte header (magic "RLK1", u32 width,
// u32 height, u32 channels, little endian) + float32 planar data.
void write_rlk(const std::string& path, const ImageBuffer& img);
ImageBuffer read_rlk(const std::string& path);

// 8-bit preview (PPM for 3 channels, PGM for 1). Write-only by design;
// previews never feed back into the pipeline.
void write_preview(const std::string& path, const ImageBuffer& img);

}  // namespace rlk
