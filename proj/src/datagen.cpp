#include "rlk/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rlk/rng.hpp"

namespace fs = std::filesystem;

namespace rlk {

using json = nlohmann::ordered_json;

void SceneSpec::validate() const {
    if (width < 8 || height < 8) throw ValidationError("scene: image too small");
    if (!(roughness_min > 0.0) || roughness_max > 1.0 || roughness_min > roughness_max)
        throw ValidationError("scene: roughness range must lie in (0,1]");
    if (min_bumps < 0 || max_bumps < min_bumps) throw ValidationError("scene: bad bump counts");
    if (bump_amplitude < 0) throw ValidationError("scene: negative bump amplitude");
}

std::vector<LightDirection> direction_grid(int n_rings, int per_ring) {
    std::vector<LightDirection> dirs;
    for (int ring = 0; ring < n_rings; ++ring) {
        // cos(theta) band midpoints; each band holds 2*pi/n_rings steradians
        double cos_t = (ring + 0.5) / n_rings;
        double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
        double offset = (ring % 2) * kPi / per_ring;  // stagger alternate rings
        for (int j = 0; j < per_ring; ++j) {
            double phi = 2.0 * kPi * j / per_ring + offset;
            dirs.emplace_back(Vec3{sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t});
        }
    }
    dirs.push_back(LightDirection::zenith());
    return dirs;
}

namespace {

// Value noise: random coarse grid, smoothstep-bilinear upsample, in [0,1].
std::vector<double> smooth_noise(int W, int H, int cells, Rng& rng) {
    int gw = cells + 1, gh = cells + 1;
    std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
    for (double& v : grid) v = rng.uniform();
    auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
    std::vector<double> out(static_cast<std::size_t>(W) * H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double gx = static_cast<double>(x) / W * cells;
            double gy = static_cast<double>(y) / H * cells;
            int ix = std::min(static_cast<int>(gx), cells - 1);
            int iy = std::min(static_cast<int>(gy), cells - 1);
            double tx = smooth(gx - ix), ty = smooth(gy - iy);
            double v00 = grid[static_cast<std::size_t>(iy) * gw + ix];
            double v01 = grid[static_cast<std::size_t>(iy) * gw + ix + 1];
            double v10 = grid[static_cast<std::size_t>(iy + 1) * gw + ix];
            double v11 = grid[static_cast<std::size_t>(iy + 1) * gw + ix + 1];
            out[static_cast<std::size_t>(y) * W + x] =
                (v00 * (1 - tx) + v01 * tx) * (1 - ty) + (v10 * (1 - tx) + v11 * tx) * ty;
        }
    return out;
}

DepthMap generate_depth(const SceneSpec& spec, Rng& rng) {
    const int W = spec.width, H = spec.height;
    DepthMap depth(W, H, 1);
    double base = rng.uniform(0.55, 0.8);
    std::vector<double> z(static_cast<std::size_t>(W) * H, base);

    switch (spec.geometry) {
        case GeometryFamily::Bumps: {
            int n = rng.uniform_int(spec.min_bumps, spec.max_bumps);
            for (int k = 0; k < n; ++k) {
                double cx = rng.uniform(0.1, 0.9) * W;
                double cy = rng.uniform(0.1, 0.9) * H;
                double sigma = rng.uniform(0.05, 0.18) * W;
                double amp = rng.uniform(0.4, 1.0) * spec.bump_amplitude;
                if (rng.uniform() < 0.3) amp = -amp;  // occasional pit
                for (int y = 0; y < H; ++y)
                    for (int x = 0; x < W; ++x) {
                        double d2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) /
                                    (2.0 * sigma * sigma);
                        z[static_cast<std::size_t>(y) * W + x] -= amp * std::exp(-d2);
                    }
            }
            break;
        }
        case GeometryFamily::Steps: {
            int n = rng.uniform_int(2, 5);
            for (int k = 0; k < n; ++k) {
                int x0 = rng.uniform_int(0, W - W / 4);
                int y0 = rng.uniform_int(0, H - H / 4);
                int x1 = std::min(W, x0 + rng.uniform_int(W / 5, W / 2));
                int y1 = std::min(H, y0 + rng.uniform_int(H / 5, H / 2));
                double amp = rng.uniform(0.4, 1.0) * spec.bump_amplitude;
                for (int y = y0; y < y1; ++y)
                    for (int x = x0; x < x1; ++x)
                        z[static_cast<std::size_t>(y) * W + x] -= amp;
            }
            break;
        }
        case GeometryFamily::Blobs: {
            int cells = rng.uniform_int(3, 6);
            auto n1 = smooth_noise(W, H, cells, rng);
            auto n2 = smooth_noise(W, H, cells * 2, rng);
            for (std::size_t i = 0; i < z.size(); ++i)
                z[i] -= spec.bump_amplitude *
                        (2.0 * (0.7 * n1[i] + 0.3 * n2[i]) - 1.0);
            break;
        }
    }

    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            depth.at(0, y, x) =
                static_cast<float>(std::clamp(z[static_cast<std::size_t>(y) * W + x], 0.25, 1.0));
    return depth;
}

ImageBuffer generate_albedo(const SceneSpec& spec, Rng& rng) {
    const int W = spec.width, H = spec.height;
    ImageBuffer albedo(W, H, 3);
    switch (spec.texture) {
        case TextureFamily::Constant: {
            Vec3 c{rng.uniform(0.15, 0.9), rng.uniform(0.15, 0.9), rng.uniform(0.15, 0.9)};
            for (int ch = 0; ch < 3; ++ch)
                for (int y = 0; y < H; ++y)
                    for (int x = 0; x < W; ++x)
                        albedo.at(ch, y, x) = static_cast<float>(c[ch]);
            break;
        }
        case TextureFamily::Checker: {
            Vec3 c0{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
            Vec3 c1{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
            int period = rng.uniform_int(8, std::max(9, W / 4));
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    bool odd = ((x / period) + (y / period)) % 2 != 0;
                    const Vec3& c = odd ? c1 : c0;
                    albedo.at(0, y, x) = static_cast<float>(c.x);
                    albedo.at(1, y, x) = static_cast<float>(c.y);
                    albedo.at(2, y, x) = static_cast<float>(c.z);
                }
            break;
        }
        case TextureFamily::Noise: {
            Vec3 c0{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
            Vec3 c1{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
            auto n = smooth_noise(W, H, rng.uniform_int(4, 10), rng);
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    double t = n[static_cast<std::size_t>(y) * W + x];
                    albedo.at(0, y, x) = static_cast<float>(c0.x + (c1.x - c0.x) * t);
                    albedo.at(1, y, x) = static_cast<float>(c0.y + (c1.y - c0.y) * t);
                    albedo.at(2, y, x) = static_cast<float>(c0.z + (c1.z - c0.z) * t);
                }
            break;
        }
    }
    return albedo;
}

ImageBuffer generate_roughness(const SceneSpec& spec, Rng& rng) {
    const int W = spec.width, H = spec.height;
    ImageBuffer rough(W, H, 1);
    if (rng.uniform() < 0.4) {
        double r = rng.uniform(spec.roughness_min, spec.roughness_max);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) rough.at(0, y, x) = static_cast<float>(r);
    } else {
        auto n = smooth_noise(W, H, rng.uniform_int(3, 8), rng);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double t = n[static_cast<std::size_t>(y) * W + x];
                rough.at(0, y, x) = static_cast<float>(
                    spec.roughness_min + (spec.roughness_max - spec.roughness_min) * t);
            }
    }
    return rough;
}

}  // namespace

Scene make_scene(const SceneSpec& spec, const CameraIntrinsics* K_in) {
    spec.validate();
    Rng rng(spec.seed);
    Scene scene;
    scene.depth = generate_depth(spec, rng);
    scene.maps.albedo = generate_albedo(spec, rng);
    scene.maps.roughness = generate_roughness(spec, rng);

    CameraIntrinsics K =
        K_in ? *K_in : CameraIntrinsics::standard(spec.width, spec.height);
    PointImage points = unproject(scene.depth, K);
    ImageBuffer geo_n = normals_from_depth(points);

    // micro-scale detail lives in the normal map, not the depth
    ImageBuffer normal(spec.width, spec.height, 3);
    auto dx = smooth_noise(spec.width, spec.height, 12, rng);
    auto dy = smooth_noise(spec.width, spec.height, 12, rng);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * spec.width + x;
            Vec3 n{geo_n.at(0, y, x), geo_n.at(1, y, x), geo_n.at(2, y, x)};
            Vec3 d{spec.normal_detail * (2.0 * dx[i] - 1.0),
                   spec.normal_detail * (2.0 * dy[i] - 1.0), 0.0};
            Vec3 np = normalize(n + d);
            if (dot(np, -points.at(y, x)) <= 0.05) np = n;  // keep facing the camera
            normal.at(0, y, x) = static_cast<float>(np.x);
            normal.at(1, y, x) = static_cast<float>(np.y);
            normal.at(2, y, x) = static_cast<float>(np.z);
        }
    scene.maps.normal = normal;
    return scene;
}

DatasetSample render_sample(const Scene& scene, const std::vector<LightDirection>& dirs,
                            const CameraIntrinsics& K, std::uint64_t noise_seed,
                            const PipelineConfig& cfg) {
    DatasetSample s;
    s.depth = scene.depth;
    s.maps = scene.maps;
    s.depth_noisy = degrade_depth(scene.depth, noise_seed, cfg.degrade);

    PointImage points = unproject(scene.depth, K);
    ShadingConstants sc{cfg.f0, cfg.cos_clamp};
    s.flash = render_flash(scene.maps, points, cfg.flash_intensity, sc);
    s.directions.reserve(dirs.size());
    for (const auto& w : dirs) {
        ShadowMask mask = cast_shadow_mask(points, w, cfg.shadow);
        s.relit.push_back(
            shade_directional(scene.maps, points, w, cfg.light_intensity, &mask, sc));
        s.shadows.push_back(std::move(mask));
        s.directions.push_back(w.w);
    }
    return s;
}

std::vector<int> DatasetManifest::split_indices(const std::string& split) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(scenes.size()); ++i)
        if (scenes[i].split == split) out.push_back(i);
    return out;
}

void write_manifest(const std::string& root, const DatasetManifest& m) {
    json j;
    j["format"] = "relightkit-dataset";
    j["version"] = m.version;
    j["width"] = m.width;
    j["height"] = m.height;
    j["intrinsics"] = {{"fx", m.intrinsics.fx}, {"fy", m.intrinsics.fy},
                       {"cx", m.intrinsics.cx}, {"cy", m.intrinsics.cy}};
    j["flash_intensity"] = m.flash_intensity;
    j["light_intensity"] = {m.light_intensity.x, m.light_intensity.y, m.light_intensity.z};
    json dirs = json::array();
    for (const Vec3& d : m.directions) dirs.push_back({d.x, d.y, d.z});
    j["directions"] = dirs;
    json scenes = json::array();
    for (const auto& s : m.scenes)
        scenes.push_back({{"name", s.name},
                          {"split", s.split},
                          {"seed", s.seed},
                          {"noise_seed", s.noise_seed}});
    j["scenes"] = scenes;
    std::ofstream os(fs::path(root) / "manifest");
    if (!os) throw IoError("cannot write manifest in " + root);
    os << j.dump(2) << "\n";
    if (!os) throw IoError("manifest write failed in " + root);
}

DatasetManifest load_manifest(const std::string& root) {
    std::ifstream is(fs::path(root) / "manifest");
    if (!is) throw IoError("cannot open manifest in " + root);
    json j;
    try {
        std::stringstream ss;
        ss << is.rdbuf();
        j = json::parse(ss.str());
    } catch (const std::exception& e) {
        throw IoError(std::string("manifest parse failed: ") + e.what());
    }
    if (!j.contains("format") || j.at("format") != "relightkit-dataset")
        throw IoError("not a relightkit dataset manifest: " + root);
    DatasetManifest m;
    m.version = j.at("version").get<int>();
    if (m.version != 1) throw IoError("unsupported dataset version");
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    const json& k = j.at("intrinsics");
    m.intrinsics.fx = k.at("fx").get<double>();
    m.intrinsics.fy = k.at("fy").get<double>();
    m.intrinsics.cx = k.at("cx").get<double>();
    m.intrinsics.cy = k.at("cy").get<double>();
    m.intrinsics.width = m.width;
    m.intrinsics.height = m.height;
    m.flash_intensity = j.at("flash_intensity").get<double>();
    auto li = j.at("light_intensity");
    m.light_intensity = {li[0].get<double>(), li[1].get<double>(), li[2].get<double>()};
    for (const auto& d : j.at("directions"))
        m.directions.push_back({d[0].get<double>(), d[1].get<double>(), d[2].get<double>()});
    for (const auto& s : j.at("scenes")) {
        DatasetManifest::SceneEntry e;
        e.name = s.at("name").get<std::string>();
        e.split = s.at("split").get<std::string>();
        e.seed = s.at("seed").get<std::uint64_t>();
        e.noise_seed = s.at("noise_seed").get<std::uint64_t>();
        m.scenes.push_back(e);
    }
    return m;
}

void write_sample(const std::string& root, const std::string& name,
                  const DatasetSample& sample) {
    fs::path dir = fs::path(root) / name;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_rlk((dir / "flash.rlk").string(), sample.flash);
    write_rlk((dir / "depth.rlk").string(), sample.depth);
    write_rlk((dir / "depth_noisy.rlk").string(), sample.depth_noisy);
    write_rlk((dir / "albedo.rlk").string(), sample.maps.albedo);
    write_rlk((dir / "normal.rlk").string(), sample.maps.normal);
    write_rlk((dir / "rough.rlk").string(), sample.maps.roughness);
    for (std::size_t i = 0; i < sample.relit.size(); ++i) {
        write_rlk((dir / ("relit_" + std::to_string(i) + ".rlk")).string(), sample.relit[i]);
        write_rlk((dir / ("shadow_" + std::to_string(i) + ".rlk")).string(),
                  sample.shadows[i]);
    }
}

DatasetSample load_sample(const std::string& root, const DatasetManifest& m,
                          int scene_index) {
    if (scene_index < 0 || scene_index >= static_cast<int>(m.scenes.size()))
        throw ValidationError("scene index out of range");
    fs::path dir = fs::path(root) / m.scenes[scene_index].name;
    DatasetSample s;
    s.flash = read_rlk((dir / "flash.rlk").string());
    s.depth = read_rlk((dir / "depth.rlk").string());
    s.depth_noisy = read_rlk((dir / "depth_noisy.rlk").string());
    s.maps.albedo = read_rlk((dir / "albedo.rlk").string());
    s.maps.normal = read_rlk((dir / "normal.rlk").string());
    s.maps.roughness = read_rlk((dir / "rough.rlk").string());
    s.directions = m.directions;
    for (std::size_t i = 0; i < m.directions.size(); ++i) {
        s.relit.push_back(read_rlk((dir / ("relit_" + std::to_string(i) + ".rlk")).string()));
        s.shadows.push_back(
            read_rlk((dir / ("shadow_" + std::to_string(i) + ".rlk")).string()));
    }
    return s;
}

SceneSpec scene_spec_for(const PipelineConfig& cfg, int scene_index) {
    bool is_test = scene_index >= cfg.train_scenes;
    SceneSpec spec;
    spec.width = cfg.image_size;
    spec.height = cfg.image_size;
    spec.seed = Rng::derive(cfg.seed, is_test ? 100000 + scene_index : scene_index);
    spec.geometry = static_cast<GeometryFamily>(scene_index % 3);
    Rng pick(Rng::derive(spec.seed, 7));
    spec.texture = static_cast<TextureFamily>(pick.uniform_int(0, 2));
    spec.min_bumps = std::max(1, cfg.max_bumps / 2);
    spec.max_bumps = cfg.max_bumps;
    spec.bump_amplitude = cfg.bump_amplitude;
    spec.roughness_min = cfg.roughness_min;
    spec.roughness_max = cfg.roughness_max;
    spec.normal_detail = cfg.normal_detail;
    return spec;
}

DatasetManifest generate_dataset(const PipelineConfig& cfg, const std::string& out_root) {
    cfg.validate();
    std::error_code ec;
    fs::create_directories(out_root, ec);
    if (ec) throw IoError("cannot create " + out_root + ": " + ec.message());

    auto dirs = direction_grid(cfg.n_rings, cfg.per_ring);
    DatasetManifest m;
    m.width = cfg.image_size;
    m.height = cfg.image_size;
    m.intrinsics = cfg.intrinsics_for(cfg.image_size, cfg.image_size);
    m.flash_intensity = cfg.flash_intensity;
    m.light_intensity = cfg.light_intensity;
    for (const auto& w : dirs) m.directions.push_back(w.w);

    const int total = cfg.train_scenes + cfg.test_scenes;
    for (int i = 0; i < total; ++i) {
        SceneSpec spec = scene_spec_for(cfg, i);
        Scene scene = make_scene(spec, &m.intrinsics);
        std::uint64_t noise_seed = Rng::derive(cfg.seed, 200000 + i);
        DatasetSample sample = render_sample(scene, dirs, m.intrinsics, noise_seed, cfg);
        DatasetManifest::SceneEntry e;
        e.name = "scene_" + std::to_string(i);
        e.split = i < cfg.train_scenes ? "train" : "test";
        e.seed = spec.seed;
        e.noise_seed = noise_seed;
        write_sample(out_root, e.name, sample);
        m.scenes.push_back(e);
    }
    write_manifest(out_root, m);
    return m;
}

}  // namespace rlk
