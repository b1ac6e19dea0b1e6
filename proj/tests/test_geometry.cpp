#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rlk/datagen.hpp"
#include "rlk/geometry.hpp"
#include "rlk/rng.hpp"
#include "support/raymarch.hpp"

using namespace rlk;

namespace {

DepthMap constant_depth(int w, int h, float z) {
    DepthMap d(w, h, 1, z);
    return d;
}

LightDirection random_direction(Rng& rng, double min_cos = 0.05) {
    double cz = rng.uniform(min_cos, 1.0);
    double phi = rng.uniform(0.0, 2.0 * kPi);
    double s = std::sqrt(1.0 - cz * cz);
    return LightDirection(Vec3{s * std::cos(phi), s * std::sin(phi), cz});
}

}  // namespace

TEST_CASE("unproject maps the principal ray to the optical axis") {
    CameraIntrinsics K = CameraIntrinsics::standard(65, 65);
    DepthMap d = constant_depth(65, 65, 0.5f);
    PointImage pts = unproject(d, K);
    Vec3 p = pts.at(32, 32);  // cx = cy = 32 exactly for 65-wide images
    CHECK(p.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p.y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p.z == doctest::Approx(0.5));
}

TEST_CASE("unproject similar-triangles hand case") {
    CameraIntrinsics K;
    K.fx = 100;
    K.fy = 100;
    K.cx = 64;
    K.cy = 64;
    K.width = 256;
    K.height = 256;
    DepthMap d = constant_depth(256, 256, 2.0f);
    PointImage pts = unproject(d, K);
    Vec3 p = pts.at(64, 164);
    CHECK(p.x == doctest::Approx(2.0));
    CHECK(p.y == doctest::Approx(0.0));
    CHECK(p.z == doctest::Approx(2.0));
}

TEST_CASE("project is the inverse of unproject on valid pixels") {
    CameraIntrinsics K = CameraIntrinsics::standard(32, 32);
    Rng rng(7);
    DepthMap d(32, 32, 1);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            d.at(0, y, x) = static_cast<float>(rng.uniform(0.3, 1.0));
    PointImage pts = unproject(d, K);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            double u, v;
            project(K, pts.at(y, x), u, v);
            CHECK(u == doctest::Approx(x).epsilon(1e-9));
            CHECK(v == doctest::Approx(y).epsilon(1e-9));
        }
}

TEST_CASE("unproject rejects size mismatches and flags invalid depth") {
    CameraIntrinsics K = CameraIntrinsics::standard(16, 16);
    CHECK_THROWS_AS(unproject(constant_depth(8, 8, 0.5f), K), ShapeError);
    DepthMap d = constant_depth(16, 16, 0.5f);
    d.at(0, 3, 4) = 0.0f;
    PointImage pts = unproject(d, K);
    CHECK_FALSE(pts.valid(3, 4));
    CHECK(pts.valid(0, 0));
}

TEST_CASE("normals of a frontal plane point at the camera") {
    CameraIntrinsics K = CameraIntrinsics::standard(24, 24);
    PointImage pts = unproject(constant_depth(24, 24, 0.7f), K);
    ImageBuffer n = normals_from_depth(pts);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x) {
            CHECK(n.at(0, y, x) == doctest::Approx(0.0).epsilon(1e-9));
            CHECK(n.at(1, y, x) == doctest::Approx(0.0).epsilon(1e-9));
            CHECK(n.at(2, y, x) == doctest::Approx(-1.0).epsilon(1e-9));
        }
}

TEST_CASE("normals of an analytic ramp match the plane normal") {
    // camera-space plane z = 1 + 0.1 x  =>  pixel depth z(u) = 1 / (1 - 0.1(u-cx)/fx)
    CameraIntrinsics K = CameraIntrinsics::standard(64, 64);
    DepthMap d(64, 64, 1);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            d.at(0, y, x) = static_cast<float>(1.0 / (1.0 - 0.1 * (x - K.cx) / K.fx));
    PointImage pts = unproject(d, K);
    ImageBuffer n = normals_from_depth(pts);
    Vec3 expected = normalize(Vec3{0.1, 0.0, -1.0});
    for (int y = 8; y < 56; ++y)
        for (int x = 8; x < 56; ++x) {
            CHECK(n.at(0, y, x) == doctest::Approx(expected.x).epsilon(1e-3));
            CHECK(n.at(2, y, x) == doctest::Approx(expected.z).epsilon(1e-3));
        }
}

TEST_CASE("normals have unit norm everywhere") {
    SceneSpec spec;
    spec.seed = 99;
    spec.width = spec.height = 48;
    Scene scene = make_scene(spec);
    PointImage pts =
        unproject(scene.depth, CameraIntrinsics::standard(48, 48));
    ImageBuffer n = normals_from_depth(pts);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) {
            double len = std::sqrt(double(n.at(0, y, x)) * n.at(0, y, x) +
                                   double(n.at(1, y, x)) * n.at(1, y, x) +
                                   double(n.at(2, y, x)) * n.at(2, y, x));
            CHECK(len == doctest::Approx(1.0).epsilon(1e-6));
        }
}

TEST_CASE("light_frame of the zenith direction is the identity") {
    LightFrame f = light_frame(LightDirection::zenith());
    const double expected[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    for (int i = 0; i < 9; ++i) CHECK(f.R[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("light_frame is orthonormal with the light in the third column") {
    Rng rng(41);
    for (int k = 0; k < 1000; ++k) {
        LightDirection w = random_direction(rng);
        LightFrame f = light_frame(w);
        // third column equals w
        CHECK(std::abs(f.R[6] - w.w.x) < 1e-9);
        CHECK(std::abs(f.R[7] - w.w.y) < 1e-9);
        CHECK(std::abs(f.R[8] - w.w.z) < 1e-9);
        // R^T R = I
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double d = dot(f.col(i), f.col(j));
                CHECK(std::abs(d - (i == j ? 1.0 : 0.0)) < 1e-9);
            }
        // right-handed
        CHECK(dot(cross(f.col(0), f.col(1)), f.col(2)) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("light_frame is deterministic") {
    LightDirection w(Vec3{0.3, -0.4, 0.87});
    LightFrame a = light_frame(w);
    LightFrame b = light_frame(w);
    for (int i = 0; i < 9; ++i) CHECK(a.R[i] == b.R[i]);
}

TEST_CASE("shadow_encode pins the zenith example and the rigid properties") {
    PointImage pts(2, 1);
    pts.at(0, 0) = {0.1, 0.2, 0.5};
    pts.at(0, 1) = {-0.3, 0.05, 0.9};
    PointImage enc = shadow_encode(pts, LightDirection::zenith());
    CHECK(enc.at(0, 0).x == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(enc.at(0, 0).y == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(enc.at(0, 0).z == doctest::Approx(1.5).epsilon(1e-12));

    Rng rng(17);
    for (int k = 0; k < 1000; ++k) {
        LightDirection w = random_direction(rng);
        PointImage p2(2, 1);
        Vec3 a{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.1, 1)};
        Vec3 b{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.1, 1)};
        p2.at(0, 0) = a;
        p2.at(0, 1) = b;
        PointImage e2 = shadow_encode(p2, w);
        // isometry
        CHECK(std::abs(norm(e2.at(0, 0) - e2.at(0, 1)) - norm(a - b)) < 1e-9);
        // third channel is w.p + 1
        CHECK(std::abs(e2.at(0, 0).z - (dot(w.w, a) + 1.0)) < 1e-9);
    }
}

TEST_CASE("frontal plane casts no shadow for any visible light") {
    CameraIntrinsics K = CameraIntrinsics::standard(32, 32);
    PointImage pts = unproject(constant_depth(32, 32, 0.8f), K);
    Rng rng(5);
    for (int k = 0; k < 8; ++k) {
        ShadowMask m = cast_shadow_mask(pts, random_direction(rng, 0.1));
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) CHECK(m.at(0, y, x) == 1.0f);
    }
}

TEST_CASE("axis-aligned light leaves a single-layer heightfield fully lit") {
    SceneSpec spec;
    spec.seed = 3;
    spec.width = spec.height = 64;
    Scene scene = make_scene(spec);
    CameraIntrinsics K = CameraIntrinsics::standard(64, 64);
    PointImage pts = unproject(scene.depth, K);
    ShadowMask m = cast_shadow_mask(pts, LightDirection::zenith());
    ShadowMask ref = testsupport::raymarch_shadow_mask(pts, K, LightDirection::zenith());
    std::int64_t dark = 0, dark_ref = 0;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            dark += m.at(0, y, x) == 0.0f;
            dark_ref += ref.at(0, y, x) == 0.0f;
        }
    CHECK(dark == 0);
    CHECK(dark_ref == 0);
}

TEST_CASE("step heightfield casts the textbook 45-degree band") {
    // plane at z=1 for x<0, raised block z=0.8 for x>=0; light at 45 deg in
    // the x-z plane. Expected shadow: 0.2 scene units on the low plane.
    const int N = 128;
    CameraIntrinsics K = CameraIntrinsics::standard(N, N);
    DepthMap d(N, N, 1);
    for (int y = 0; y < N; ++y)
        for (int x = 0; x < N; ++x) {
            // world x at depth z: x_w = (x - cx) z / fx; block occupies x_w >= 0
            bool block = (x - K.cx) >= 0;
            d.at(0, y, x) = block ? 0.8f : 1.0f;
        }
    PointImage pts = unproject(d, K);
    double s = std::sqrt(0.5);
    LightDirection w(Vec3{s, 0, s});
    ShadowMask m = cast_shadow_mask(pts, w);
    ShadowMask ref = testsupport::raymarch_shadow_mask(pts, K, w);

    // measure the band on the low plane in world units along a middle row
    auto band_len = [&](const ShadowMask& mask) {
        int y = N / 2;
        double lo = 0, hi = 0;
        bool any = false;
        for (int x = 0; x < N; ++x) {
            if ((x - K.cx) >= 0) continue;  // only the low plane
            if (mask.at(0, y, x) == 0.0f) {
                double xw = (x - K.cx) * 1.0 / K.fx;
                if (!any) {
                    lo = hi = xw;
                    any = true;
                } else {
                    lo = std::min(lo, xw);
                    hi = std::max(hi, xw);
                }
            }
        }
        return any ? hi - lo : 0.0;
    };
    double len = band_len(m);
    double len_ref = band_len(ref);
    double px = 1.0 / K.fx;  // one pixel of world size at z=1
    CHECK(len == doctest::Approx(0.2).epsilon(0.15));
    CHECK(std::abs(len - len_ref) <= 3 * px);

    auto band = testsupport::silhouette_band(d);
    CHECK(testsupport::mask_agreement(m, ref, band) >= 0.995);
}

TEST_CASE("shadow buffer agrees with the ray-march reference" *
          doctest::description("reduced version of the acceptance matrix")) {
    Rng rng(2024);
    const int size = 96;
    for (int field = 0; field < 4; ++field) {
        SceneSpec spec;
        spec.seed = 500 + field;
        spec.width = spec.height = size;
        spec.geometry = static_cast<GeometryFamily>(field % 3);
        Scene scene = make_scene(spec);
        CameraIntrinsics K = CameraIntrinsics::standard(size, size);
        PointImage pts = unproject(scene.depth, K);
        auto band = testsupport::silhouette_band(scene.depth);
        for (int k = 0; k < 4; ++k) {
            LightDirection w = random_direction(rng, 0.125);
            ShadowMask m = cast_shadow_mask(pts, w);
            ShadowMask ref = testsupport::raymarch_shadow_mask(pts, K, w);
            double agree = testsupport::mask_agreement(m, ref, band);
            INFO("field ", field, " dir ", k, " wz ", w.w.z, " agreement ", agree);
            CHECK(agree >= 0.99);
        }
    }
}

TEST_CASE("degrade_depth is deterministic and honors the noise protocol") {
    SceneSpec spec;
    spec.seed = 321;
    spec.width = spec.height = 32;
    Scene scene = make_scene(spec);

    DegradeParams off;
    off.noise_sigma = 0.0;
    off.blur_sigma = 0.0;
    DepthMap same = degrade_depth(scene.depth, 9, off);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) CHECK(same.at(0, y, x) == scene.depth.at(0, y, x));

    DepthMap a = degrade_depth(scene.depth, 42);
    DepthMap b = degrade_depth(scene.depth, 42);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) CHECK(a.at(0, y, x) == b.at(0, y, x));

    DepthMap c = degrade_depth(scene.depth, 43);
    double diff = mse(a, c);
    CHECK(diff > 0.0);

    DegradeParams defaults;
    CHECK(defaults.noise_sigma == 6.25e-2);
    CHECK(defaults.blur_sigma == 1.0);

    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            CHECK(a.at(0, y, x) >= 0.0f);
            CHECK(a.at(0, y, x) <= 1.0f);
        }
}

TEST_CASE("cast_shadow_mask rejects an empty point set") {
    PointImage pts(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) pts.set_valid(y, x, false);
    CHECK_THROWS_AS(cast_shadow_mask(pts, LightDirection::zenith()), DomainError);
}
