#include "rlk/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace rlk {

namespace {

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " +
                         std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                         "x" + std::to_string(a.channels()) + " vs " +
                         std::to_string(b.width()) + "x" + std::to_string(b.height()) +
                         "x" + std::to_string(b.channels()));
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
    if (width <= 0 || height <= 0 || (channels != 1 && channels != 3))
        throw ShapeError("ImageBuffer: invalid dimensions");
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

bool ImageBuffer::all_finite() const {
    for (float v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double mse(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b, "mse");
    double acc = 0.0;
    const float* pa = a.data();
    const float* pb = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double psnr_from_mse(double mse_value) {
    if (mse_value <= 0.0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / mse_value));
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    return psnr_from_mse(mse(a, b));
}

ImageBuffer subtract_clamped(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b, "subtract_clamped");
    ImageBuffer out(a.width(), a.height(), a.channels());
    const float* pa = a.data();
    const float* pb = b.data();
    float* po = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) po[i] = std::max(pa[i] - pb[i], 0.0f);
    return out;
}

double srgb_encode_value(double linear) {
    double x = std::clamp(linear, 0.0, 1.0);
    return x <= 0.0031308 ? 12.92 * x : 1.055 * std::pow(x, 1.0 / 2.4) - 0.055;
}

double srgb_decode_value(double encoded) {
    double x = std::clamp(encoded, 0.0, 1.0);
    return x <= 0.04045 ? x / 12.92 : std::pow((x + 0.055) / 1.055, 2.4);
}

std::vector<std::uint8_t> display_encode(const ImageBuffer& img) {
    std::vector<std::uint8_t> out(img.size());
    const float* p = img.data();
    for (std::size_t i = 0; i < img.size(); ++i) {
        double c = srgb_encode_value(static_cast<double>(p[i]));
        out[i] = static_cast<std::uint8_t>(std::lround(c * 255.0));
    }
    return out;
}

ImageBuffer display_decode(const std::vector<std::uint8_t>& bytes, int width,
                           int height, int channels) {
    if (bytes.size() != static_cast<std::size_t>(width) * height * channels)
        throw ShapeError("display_decode: byte count does not match dimensions");
    ImageBuffer out(width, height, channels);
    float* p = out.data();
    for (std::size_t i = 0; i < bytes.size(); ++i)
        p[i] = static_cast<float>(srgb_decode_value(bytes[i] / 255.0));
    return out;
}

namespace {

constexpr char kMagic[4] = {'R', 'L', 'K', '1'};

void put_u32(std::ofstream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

static_assert(sizeof(float) == 4, "raw format assumes 32-bit floats");

}  // namespace

void write_rlk(const std::string& path, const ImageBuffer& img) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(kMagic, 4);
    put_u32(os, static_cast<std::uint32_t>(img.width()));
    put_u32(os, static_cast<std::uint32_t>(img.height()));
    put_u32(os, static_cast<std::uint32_t>(img.channels()));
    // x86/arm little-endian; byte-swapping on big-endian hosts is out of scope
    os.write(reinterpret_cast<const char*>(img.data()),
             static_cast<std::streamsize>(img.size() * sizeof(float)));
    if (!os) throw IoError("write failed: " + path);
}

ImageBuffer read_rlk(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("bad magic in raw float file: " + path);
    std::uint32_t w = get_u32(is), h = get_u32(is), c = get_u32(is);
    if (!is || w == 0 || h == 0 || (c != 1 && c != 3))
        throw IoError("bad header in raw float file: " + path);
    ImageBuffer img(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c));
    is.read(reinterpret_cast<char*>(img.data()),
            static_cast<std::streamsize>(img.size() * sizeof(float)));
    if (!is) throw IoError("truncated raw float file: " + path);
    return img;
}

void write_preview(const std::string& path, const ImageBuffer& img) {
    std::vector<std::uint8_t> bytes = display_encode(img);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    char header[64];
    std::snprintf(header, sizeof(header), "%s\n%d %d\n255\n",
                  img.channels() == 3 ? "P6" : "P5", img.width(), img.height());
    os << header;
    // planar -> interleaved
    std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width()) * img.channels());
    const std::size_t plane = static_cast<std::size_t>(img.width()) * img.height();
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c)
                row[static_cast<std::size_t>(x) * img.channels() + c] =
                    bytes[plane * c + static_cast<std::size_t>(y) * img.width() + x];
        os.write(reinterpret_cast<const char*>(row.data()),
                 static_cast<std::streamsize>(row.size()));
    }
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace rlk
