#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rlk/config.hpp"
#include "rlk/image.hpp"
#include "rlk/rng.hpp"

using namespace rlk;

namespace {

ImageBuffer filled(int w, int h, int c, float v) { return ImageBuffer(w, h, c, v); }

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("mse hand cases") {
    ImageBuffer a = filled(4, 4, 3, 0.0f);
    CHECK(mse(a, a) == 0.0);

    ImageBuffer b = filled(4, 4, 3, 0.1f);
    CHECK(mse(a, b) == doctest::Approx(0.01).epsilon(1e-9));

    ImageBuffer two(2, 1, 1);
    ImageBuffer two_r(2, 1, 1);
    two.at(0, 0, 0) = 0.0f;
    two.at(0, 0, 1) = 1.0f;
    two_r.at(0, 0, 0) = 1.0f;
    two_r.at(0, 0, 1) = 0.0f;
    CHECK(mse(two, two_r) == 1.0);

    CHECK_THROWS_AS(mse(a, filled(3, 4, 3, 0.f)), ShapeError);
}

TEST_CASE("mse is symmetric and psnr decreases with mse") {
    Rng rng(11);
    ImageBuffer a(8, 8, 3), b(8, 8, 3);
    for (int i = 0; i < 3 * 64; ++i) {
        a.data()[i] = static_cast<float>(rng.uniform());
        b.data()[i] = static_cast<float>(rng.uniform());
    }
    CHECK(mse(a, b) == mse(b, a));

    double prev_psnr = 1e9;
    for (double m : {1e-8, 1e-6, 1e-4, 1e-2, 1.0}) {
        double p = psnr_from_mse(m);
        CHECK(p <= prev_psnr);
        prev_psnr = p;
    }
}

TEST_CASE("psnr hand cases and the 99 dB cap") {
    CHECK(psnr_from_mse(0.01) == doctest::Approx(20.0).epsilon(1e-12));
    ImageBuffer a = filled(4, 4, 1, 0.2f);
    ImageBuffer b = filled(4, 4, 1, 0.3f);
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-6));  // float storage
    CHECK(psnr(a, a) == 99.0);
    CHECK(psnr_from_mse(1.0) == doctest::Approx(0.0));
    CHECK(psnr_from_mse(1e-12) == 99.0);
}

TEST_CASE("subtract_clamped basics and flash isolation") {
    ImageBuffer a = filled(2, 2, 1, 0.5f);
    ImageBuffer b = filled(2, 2, 1, 0.2f);
    CHECK(subtract_clamped(a, b).at(0, 0, 0) == doctest::Approx(0.3).epsilon(1e-7));
    CHECK(subtract_clamped(b, a).at(0, 0, 0) == 0.0f);

    // (flash+ambient) - ambient recovers flash exactly when the sums are
    // representable: use multiples of 2^-10
    Rng rng(3);
    ImageBuffer flash(8, 8, 3), ambient(8, 8, 3), lit(8, 8, 3);
    for (std::size_t i = 0; i < flash.size(); ++i) {
        flash.data()[i] = static_cast<float>(rng.uniform_int(0, 512)) / 1024.0f;
        ambient.data()[i] = static_cast<float>(rng.uniform_int(0, 511)) / 1024.0f;
        lit.data()[i] = flash.data()[i] + ambient.data()[i];
    }
    ImageBuffer isolated = subtract_clamped(lit, ambient);
    for (std::size_t i = 0; i < flash.size(); ++i)
        CHECK(isolated.data()[i] == flash.data()[i]);

    // b = 0 is the identity
    ImageBuffer zero = filled(8, 8, 3, 0.0f);
    ImageBuffer same = subtract_clamped(flash, zero);
    for (std::size_t i = 0; i < flash.size(); ++i) CHECK(same.data()[i] == flash.data()[i]);
}

TEST_CASE("display transfer endpoints and the reference mid value") {
    ImageBuffer img(2, 2, 1);
    img.at(0, 0, 0) = 0.0f;
    img.at(0, 0, 1) = 1.0f;
    img.at(0, 1, 0) = 0.5f;
    img.at(0, 1, 1) = 0.25f;
    auto bytes = display_encode(img);
    CHECK(bytes[0] == 0);
    CHECK(bytes[1] == 255);
    CHECK(bytes[2] == 188);  // srgb(0.5)*255 = 187.52, reference script
    CHECK(bytes[3] == 137);  // srgb(0.25)*255 = 136.96
}

TEST_CASE("display round trip stays within one code value") {
    Rng rng(77);
    const int n = 10000;
    ImageBuffer img(100, 100, 1);
    for (int i = 0; i < n; ++i) img.data()[i] = static_cast<float>(rng.uniform(-0.1, 1.1));
    ImageBuffer back = display_decode(display_encode(img), 100, 100, 1);
    for (int i = 0; i < n; ++i) {
        double clamped = std::clamp(static_cast<double>(img.data()[i]), 0.0, 1.0);
        // one code value in the display domain; the widest linear-domain bin
        // of the sRGB transfer (near white) is ~1.13/255, so the linear
        // bound carries that factor
        CHECK(std::abs(srgb_encode_value(back.data()[i]) - srgb_encode_value(clamped)) <=
              1.0 / 255.0);
        CHECK(std::abs(back.data()[i] - clamped) <= 1.15 / 255.0);
    }
}

TEST_CASE("raw float files round trip bit-exactly") {
    Rng rng(123);
    ImageBuffer img(13, 7, 3);
    for (std::size_t i = 0; i < img.size(); ++i)
        img.data()[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
    auto path = temp_file("rlk_io_test.rlk");
    write_rlk(path.string(), img);
    ImageBuffer back = read_rlk(path.string());
    REQUIRE(back.same_shape(img));
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(back.data()[i] == img.data()[i]);
    std::filesystem::remove(path);
}

TEST_CASE("raw reader rejects corrupt headers") {
    auto path = temp_file("rlk_bad_magic.rlk");
    {
        std::ofstream os(path, std::ios::binary);
        os << "JUNKJUNKJUNKJUNKJUNK";
    }
    CHECK_THROWS_AS(read_rlk(path.string()), IoError);
    CHECK_THROWS_AS(read_rlk("/nonexistent/nowhere.rlk"), IoError);
    std::filesystem::remove(path);
}

TEST_CASE("previews carry the PPM magic") {
    ImageBuffer img(4, 4, 3, 0.5f);
    auto path = temp_file("rlk_preview.ppm");
    write_preview(path.string(), img);
    std::ifstream is(path, std::ios::binary);
    std::string magic(2, '\0');
    is.read(magic.data(), 2);
    CHECK(magic == "P6");
    std::filesystem::remove(path);
}

TEST_CASE("pipeline config round trips through json") {
    PipelineConfig cfg;
    cfg.image_size = 96;
    cfg.train.learning_rate = 1e-3;
    cfg.shadow.bias = 2e-3;
    cfg.light_intensity = {1.0, 0.5, 0.25};
    std::string text = serialize_config(cfg);
    PipelineConfig back = parse_config(text);
    CHECK(back == cfg);
    CHECK(serialize_config(back) == text);
}

TEST_CASE("config parser rejects unknown keys and bad values") {
    CHECK_THROWS_AS(parse_config("{\"no_such_key\": 1}"), ConfigError);
    CHECK_THROWS_AS(parse_config("{\"image_size\": 2}"), ValidationError);
    CHECK_THROWS_AS(parse_config("not json"), ConfigError);
    PipelineConfig defaults = parse_config("{}");
    CHECK(defaults == PipelineConfig{});
}

TEST_CASE("learning rate schedule decays by 10x every two epochs") {
    TrainConfig t;
    CHECK(t.lr_at_epoch(0) == doctest::Approx(5e-4));
    CHECK(t.lr_at_epoch(1) == doctest::Approx(5e-4));
    CHECK(t.lr_at_epoch(2) == doctest::Approx(5e-5));
    CHECK(t.lr_at_epoch(3) == doctest::Approx(5e-5));
    CHECK(t.lr_at_epoch(4) == doctest::Approx(5e-6));
}
