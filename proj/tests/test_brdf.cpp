#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rlk/brdf.hpp"
#include "rlk/rng.hpp"

using namespace rlk;

namespace {

// random unit vector in the upper shading hemisphere around n=(0,0,-1)
Vec3 random_dir_above(Rng& rng, const Vec3& n, double min_cos = 0.05) {
    for (;;) {
        Vec3 v{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        double len = norm(v);
        if (len < 1e-3 || len > 1.0) continue;
        v = v / len;
        if (dot(v, n) > min_cos) return v;
    }
}

}  // namespace

TEST_CASE("ggx_d constant at roughness one") {
    for (double ndh : {0.0, 0.3, 0.7, 1.0})
        CHECK(ggx_d(ndh, 1.0) == doctest::Approx(1.0 / kPi).epsilon(1e-12));
}

TEST_CASE("ggx_d hand values") {
    // frozen with an independent direct evaluation script
    CHECK(ggx_d(0.0, 0.5) == doctest::Approx(0.019894367886).epsilon(1e-9));
    CHECK(ggx_d(1.0, 0.5) == doctest::Approx(5.092958178941).epsilon(1e-9));
    CHECK_THROWS_AS(ggx_d(0.5, 0.0), DomainError);
}

TEST_CASE("smith_g identities and substitution case") {
    for (double r : {0.1, 0.5, 1.0})
        CHECK(smith_g(1.0, 1.0, r) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(smith_g(0.5, 0.5, 1.0) == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
    CHECK(smith_g(1e-9, 1.0, 0.5) < 1e-6);  // G -> 0 at grazing
    CHECK_THROWS_AS(smith_g(0.0, 1.0, 0.5), DomainError);
}

TEST_CASE("fresnel_sg frozen values and monotonicity") {
    CHECK(fresnel_sg(0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fresnel_sg(1.0) == doctest::Approx(0.050159750650).epsilon(1e-9));
    CHECK(fresnel_sg(0.5) == doctest::Approx(0.082256571577).epsilon(1e-9));
    double prev = 2.0;
    for (int i = 0; i <= 100; ++i) {
        double f = fresnel_sg(i / 100.0);
        CHECK(f <= prev);
        prev = f;
    }
}

TEST_CASE("brdf_eval normal-incidence composition") {
    Vec3 n{0, 0, -1};
    ShadingGeometry geom{n, n, n, n};
    BrdfParams params;
    params.albedo = {0, 0, 0};
    params.roughness = 1.0;
    Vec3 f = brdf_eval(geom, params);
    CHECK(f.x == doctest::Approx(0.003991586130).epsilon(1e-9));
    CHECK(f.y == f.x);
    CHECK(f.z == f.x);
}

TEST_CASE("brdf_eval reciprocity over random geometries") {
    Rng rng(99);
    const Vec3 n{0, 0, -1};
    double max_rel = 0.0;
    for (int k = 0; k < 10000; ++k) {
        Vec3 l = random_dir_above(rng, n);
        Vec3 v = random_dir_above(rng, n);
        if (norm(l + v) < 1e-6) continue;
        BrdfParams params;
        params.albedo = {rng.uniform(), rng.uniform(), rng.uniform()};
        params.roughness = rng.uniform(0.05, 1.0);
        Vec3 f1 = brdf_eval(ShadingGeometry::make(n, l, v), params);
        Vec3 f2 = brdf_eval(ShadingGeometry::make(n, v, l), params);
        double rel = std::abs(f1.x - f2.x) / std::max(1e-12, std::abs(f1.x));
        max_rel = std::max(max_rel, rel);
    }
    CHECK(max_rel < 1e-9);
}

TEST_CASE("brdf_eval clamp semantics at the horizon") {
    // same h and v, light cosine below the horizon vs exactly at the clamp:
    // the clamp makes both evaluate identically
    Vec3 n{0, 0, -1};
    Vec3 v = normalize(Vec3{0.2, 0.0, -0.9});
    Vec3 h = normalize(Vec3{0.05, 0.05, -0.99});
    BrdfParams params;
    params.albedo = {0.4, 0.4, 0.4};
    params.roughness = 0.5;
    Vec3 l_below{0.995, 0.0, 0.1};     // n.l = -0.1
    Vec3 l_at_eps{0.995, 0.0, -1e-4};  // n.l = 1e-4 = the clamp
    Vec3 f1 = brdf_eval(ShadingGeometry{n, l_below, v, h}, params);
    Vec3 f2 = brdf_eval(ShadingGeometry{n, l_at_eps, v, h}, params);
    CHECK(f1.x == f2.x);

    CHECK_THROWS_AS(ShadingGeometry::make(n, Vec3{0, 0, 1}, Vec3{0, 0, -1}), DomainError);
}

TEST_CASE("brdf factors are non-negative") {
    Rng rng(7);
    const Vec3 n{0, 0, -1};
    for (int k = 0; k < 2000; ++k) {
        Vec3 l = random_dir_above(rng, n, 0.0);
        Vec3 v = random_dir_above(rng, n, 0.0);
        if (norm(l + v) < 1e-6) continue;
        BrdfParams params;
        params.albedo = {rng.uniform(), rng.uniform(), rng.uniform()};
        params.roughness = rng.uniform(0.02, 1.0);
        Vec3 f = brdf_eval(ShadingGeometry::make(n, l, v), params);
        CHECK(f.x >= 0.0);
        CHECK(f.y >= 0.0);
        CHECK(f.z >= 0.0);
    }
}

TEST_CASE("ggx_d satisfies the projected normalization integral" *
          doctest::description("Monte-Carlo oracle, 1e6 samples per roughness")) {
    Rng rng(2718);
    const int samples = 1000000;
    for (double r : {0.3, 0.5, 1.0}) {
        double acc = 0.0;
        for (int i = 0; i < samples; ++i) {
            // uniform hemisphere sampling around n (pdf 1/2pi)
            double cz = rng.uniform();
            double phi = rng.uniform(0.0, 2.0 * kPi);
            (void)phi;  // D depends only on the cosine
            acc += ggx_d(cz, r) * cz * 2.0 * kPi;
        }
        double integral = acc / samples;
        INFO("roughness ", r, " integral ", integral);
        CHECK(integral == doctest::Approx(1.0).epsilon(0.05));
    }
}

TEST_CASE("shade_directional is linear in intensity and honors masks") {
    const int N = 16;
    MaterialMaps maps;
    maps.albedo = ImageBuffer(N, N, 3, 0.5f);
    maps.normal = ImageBuffer(N, N, 3, 0.0f);
    for (int y = 0; y < N; ++y)
        for (int x = 0; x < N; ++x) maps.normal.at(2, y, x) = -1.0f;
    maps.roughness = ImageBuffer(N, N, 1, 0.6f);
    PointImage pts(N, N);
    for (int y = 0; y < N; ++y)
        for (int x = 0; x < N; ++x)
            pts.at(y, x) = {0.01 * (x - N / 2), 0.01 * (y - N / 2), 0.75};

    LightDirection w(Vec3{0.3, 0.1, 0.95});
    ImageBuffer one = shade_directional(maps, pts, w, {1, 1, 1});
    ImageBuffer two = shade_directional(maps, pts, w, {2, 2, 2});
    for (std::size_t i = 0; i < one.size(); ++i)
        CHECK(two.data()[i] == doctest::Approx(2.0f * one.data()[i]).epsilon(1e-7));

    // superposition: power-of-two scaling is bit-exact; a mixed sum is exact
    // up to the single float rounding at storage
    for (std::size_t i = 0; i < one.size(); ++i)
        CHECK(two.data()[i] == 2.0f * one.data()[i]);
    ImageBuffer three = shade_directional(maps, pts, w, {3, 3, 3});
    for (std::size_t i = 0; i < one.size(); ++i)
        CHECK(three.data()[i] ==
              doctest::Approx(one.data()[i] + two.data()[i]).epsilon(1e-6));

    // below the horizon everywhere -> black (light from behind the scene)
    MaterialMaps tilted = maps;
    for (int y = 0; y < N; ++y)
        for (int x = 0; x < N; ++x) {
            tilted.normal.at(0, y, x) = 0.0f;
            tilted.normal.at(2, y, x) = 1.0f;  // facing away from the camera
        }
    ImageBuffer dark = shade_directional(tilted, pts, w, {1, 1, 1});
    for (std::size_t i = 0; i < dark.size(); ++i) CHECK(dark.data()[i] == 0.0f);

    ShadowMask zero_mask(N, N, 1, 0.0f);
    ImageBuffer masked = shade_directional(maps, pts, w, {1, 1, 1}, &zero_mask);
    for (std::size_t i = 0; i < masked.size(); ++i) CHECK(masked.data()[i] == 0.0f);
}

TEST_CASE("render_flash follows the inverse square law") {
    const int N = 8;
    MaterialMaps maps;
    maps.albedo = ImageBuffer(N, N, 3, 0.5f);
    maps.normal = ImageBuffer(N, N, 3, 0.0f);
    for (int y = 0; y < N; ++y)
        for (int x = 0; x < N; ++x) maps.normal.at(2, y, x) = -1.0f;
    maps.roughness = ImageBuffer(N, N, 1, 0.5f);

    PointImage near(N, N), far(N, N);
    for (int y = 0; y < N; ++y)
        for (int x = 0; x < N; ++x) {
            near.at(y, x) = {0, 0, 0.5};
            far.at(y, x) = {0, 0, 1.0};
        }
    ImageBuffer a = render_flash(maps, near, 1.0);
    ImageBuffer b = render_flash(maps, far, 1.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a.data()[i] == doctest::Approx(4.0f * b.data()[i]).epsilon(1e-7));

    ImageBuffer dark = render_flash(maps, far, 0.0);
    for (std::size_t i = 0; i < dark.size(); ++i) CHECK(dark.data()[i] == 0.0f);

    PointImage at_origin(N, N);
    CHECK_THROWS_AS(render_flash(maps, at_origin, 1.0), DomainError);
}
