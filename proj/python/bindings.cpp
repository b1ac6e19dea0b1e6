#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rlk/datagen.hpp"
#include "rlk/eval.hpp"
#include "rlk/nn/train.hpp"
#include "rlk/parallel.hpp"
#include "rlk/relight.hpp"

namespace py = pybind11;
using namespace rlk;

namespace {

using Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

// numpy uses (H, W) or (H, W, C); ImageBuffer stores planar (C, H, W)
ImageBuffer to_buffer(const Array& arr) {
    py::buffer_info info = arr.request();
    int h, w, c;
    if (info.ndim == 2) {
        h = static_cast<int>(info.shape[0]);
        w = static_cast<int>(info.shape[1]);
        c = 1;
    } else if (info.ndim == 3) {
        h = static_cast<int>(info.shape[0]);
        w = static_cast<int>(info.shape[1]);
        c = static_cast<int>(info.shape[2]);
    } else {
        throw ShapeError("expected a (H,W) or (H,W,C) array");
    }
    ImageBuffer img(w, h, c);
    const float* p = static_cast<const float*>(info.ptr);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch)
                img.at(ch, y, x) = p[(static_cast<std::size_t>(y) * w + x) * c + ch];
    return img;
}

py::array to_numpy(const ImageBuffer& img) {
    const int h = img.height(), w = img.width(), c = img.channels();
    if (c == 1) {
        py::array_t<float> out({h, w});
        float* p = out.mutable_data();
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) p[static_cast<std::size_t>(y) * w + x] = img.at(0, y, x);
        return out;
    }
    py::array_t<float> out({h, w, c});
    float* p = out.mutable_data();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch)
                p[(static_cast<std::size_t>(y) * w + x) * c + ch] = img.at(ch, y, x);
    return out;
}

Vec3 to_vec3(const std::array<double, 3>& v) { return {v[0], v[1], v[2]}; }

PipelineConfig config_from_json(const std::string& text) {
    return text.empty() ? PipelineConfig{} : parse_config(text);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "relightkit core operations";

    py::register_exception<ShapeError>(m, "RlkShapeError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "RlkDomainError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "RlkValidationError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "RlkConfigError", PyExc_ValueError);
    py::register_exception<IoError>(m, "RlkIoError", PyExc_IOError);

    m.def("set_deterministic", &set_deterministic, py::arg("on"));

    // imaging
    m.def("read_rlk", [](const std::string& p) { return to_numpy(read_rlk(p)); });
    m.def("write_rlk",
          [](const std::string& p, const Array& a) { write_rlk(p, to_buffer(a)); });
    m.def("write_preview",
          [](const std::string& p, const Array& a) { write_preview(p, to_buffer(a)); });
    m.def("mse", [](const Array& a, const Array& b) { return mse(to_buffer(a), to_buffer(b)); });
    m.def("psnr",
          [](const Array& a, const Array& b) { return psnr(to_buffer(a), to_buffer(b)); });
    m.def("subtract_clamped", [](const Array& a, const Array& b) {
        return to_numpy(subtract_clamped(to_buffer(a), to_buffer(b)));
    });
    m.def("srgb_encode_value", &srgb_encode_value);
    m.def("srgb_decode_value", &srgb_decode_value);

    // brdf
    m.def("ggx_d", &ggx_d, py::arg("n_dot_h"), py::arg("roughness"));
    m.def("smith_g", &smith_g, py::arg("n_dot_l"), py::arg("n_dot_v"), py::arg("roughness"));
    m.def("fresnel_sg", &fresnel_sg, py::arg("v_dot_h"), py::arg("f0") = kDefaultF0);
    m.def(
        "brdf_eval",
        [](const std::array<double, 3>& n, const std::array<double, 3>& l,
           const std::array<double, 3>& v, const std::array<double, 3>& albedo,
           double roughness, double f0) {
            ShadingGeometry geom = ShadingGeometry::make(
                normalize(to_vec3(n)), normalize(to_vec3(l)), normalize(to_vec3(v)));
            BrdfParams params;
            params.albedo = to_vec3(albedo);
            params.roughness = roughness;
            params.f0 = f0;
            Vec3 f = brdf_eval(geom, params);
            return std::array<double, 3>{f.x, f.y, f.z};
        },
        py::arg("n"), py::arg("l"), py::arg("v"), py::arg("albedo"), py::arg("roughness"),
        py::arg("f0") = kDefaultF0);

    // geometry
    m.def("direction_grid", [](int n_rings, int per_ring) {
        auto dirs = direction_grid(n_rings, per_ring);
        py::array_t<double> out({static_cast<int>(dirs.size()), 3});
        double* p = out.mutable_data();
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            p[3 * i] = dirs[i].w.x;
            p[3 * i + 1] = dirs[i].w.y;
            p[3 * i + 2] = dirs[i].w.z;
        }
        return out;
    });
    m.def("light_frame", [](const std::array<double, 3>& w) {
        LightFrame f = light_frame(LightDirection(to_vec3(w)));
        py::array_t<double> out({3, 3});
        double* p = out.mutable_data();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) p[3 * r + c] = f.R[3 * c + r];  // row-major out
        return out;
    });
    m.def(
        "unproject",
        [](const Array& depth, const std::string& config_json) {
            ImageBuffer d = to_buffer(depth);
            PipelineConfig cfg = config_from_json(config_json);
            PointImage pts = unproject(d, cfg.intrinsics_for(d.width(), d.height()));
            return to_numpy(pts.to_image());
        },
        py::arg("depth"), py::arg("config_json") = "");
    m.def(
        "normals_from_depth",
        [](const Array& depth, const std::string& config_json) {
            ImageBuffer d = to_buffer(depth);
            PipelineConfig cfg = config_from_json(config_json);
            return to_numpy(
                normals_from_depth(unproject(d, cfg.intrinsics_for(d.width(), d.height()))));
        },
        py::arg("depth"), py::arg("config_json") = "");
    m.def(
        "shadow_encode",
        [](const Array& depth, const std::array<double, 3>& w,
           const std::string& config_json) {
            ImageBuffer d = to_buffer(depth);
            PipelineConfig cfg = config_from_json(config_json);
            PointImage pts = unproject(d, cfg.intrinsics_for(d.width(), d.height()));
            return to_numpy(shadow_encode(pts, LightDirection(to_vec3(w))).to_image());
        },
        py::arg("depth"), py::arg("light"), py::arg("config_json") = "");
    m.def(
        "cast_shadow_mask",
        [](const Array& depth, const std::array<double, 3>& w,
           const std::string& config_json) {
            ImageBuffer d = to_buffer(depth);
            PipelineConfig cfg = config_from_json(config_json);
            PointImage pts = unproject(d, cfg.intrinsics_for(d.width(), d.height()));
            return to_numpy(cast_shadow_mask(pts, LightDirection(to_vec3(w)), cfg.shadow));
        },
        py::arg("depth"), py::arg("light"), py::arg("config_json") = "");
    m.def(
        "degrade_depth",
        [](const Array& depth, std::uint64_t seed, double noise_sigma, double blur_sigma) {
            DegradeParams p;
            p.noise_sigma = noise_sigma;
            p.blur_sigma = blur_sigma;
            return to_numpy(degrade_depth(to_buffer(depth), seed, p));
        },
        py::arg("depth"), py::arg("seed"), py::arg("noise_sigma") = 6.25e-2,
        py::arg("blur_sigma") = 1.0);

    // relighting
    m.def("superpose", [](const std::vector<Array>& images, const Array& dirs,
                          const Array& weights) {
        BasisStack stack;
        py::buffer_info di = dirs.request();
        for (std::size_t i = 0; i < images.size(); ++i) {
            stack.images.push_back(to_buffer(images[i]));
            const float* p = static_cast<const float*>(di.ptr);
            stack.directions.push_back(
                {p[3 * i], p[3 * i + 1], p[3 * i + 2]});
        }
        py::buffer_info wi = weights.request();
        const float* wp = static_cast<const float*>(wi.ptr);
        std::vector<Vec3> ws(images.size());
        for (std::size_t i = 0; i < ws.size(); ++i)
            ws[i] = {wp[3 * i], wp[3 * i + 1], wp[3 * i + 2]};
        return to_numpy(superpose(stack, ws));
    });
    m.def("env_weights", [](const Array& env, const Array& dirs) {
        py::buffer_info di = dirs.request();
        const float* p = static_cast<const float*>(di.ptr);
        std::vector<LightDirection> ds;
        for (py::ssize_t i = 0; i < di.shape[0]; ++i)
            ds.emplace_back(Vec3{p[3 * i], p[3 * i + 1], p[3 * i + 2]});
        auto ws = env_weights(to_buffer(env), ds);
        py::array_t<double> out({static_cast<int>(ws.size()), 3});
        double* q = out.mutable_data();
        for (std::size_t i = 0; i < ws.size(); ++i) {
            q[3 * i] = ws[i].x;
            q[3 * i + 1] = ws[i].y;
            q[3 * i + 2] = ws[i].z;
        }
        return out;
    });

    // pipeline
    m.def("default_config", [] { return serialize_config(PipelineConfig{}); });
    m.def(
        "generate_dataset",
        [](const std::string& out_dir, const std::string& config_json) {
            DatasetManifest m = generate_dataset(config_from_json(config_json), out_dir);
            return py::make_tuple(m.scenes.size(), m.directions.size());
        },
        py::arg("out_dir"), py::arg("config_json") = "");
    m.def(
        "train",
        [](const std::string& data_dir, const std::string& out_dir,
           const std::string& config_json) {
            PipelineConfig cfg = config_from_json(config_json);
            DatasetManifest m = load_manifest(data_dir);
            nn::train_pipeline(data_dir, m, cfg, out_dir);
        },
        py::arg("data_dir"), py::arg("out_dir"), py::arg("config_json") = "");
    m.def(
        "oracle_relit",
        [](const Array& albedo, const Array& normal, const Array& rough,
           const Array& depth, const std::array<double, 3>& light,
           const std::string& config_json) {
            PipelineConfig cfg = config_from_json(config_json);
            OracleInputs oracle;
            oracle.maps.albedo = to_buffer(albedo);
            oracle.maps.normal = to_buffer(normal);
            oracle.maps.roughness = to_buffer(rough);
            ImageBuffer d = to_buffer(depth);
            ImageBuffer flash(d.width(), d.height(), 3);
            return to_numpy(infer_relit(flash, d, LightDirection(to_vec3(light)),
                                        cfg.intrinsics_for(d.width(), d.height()), nullptr,
                                        &oracle, cfg));
        },
        py::arg("albedo"), py::arg("normal"), py::arg("rough"), py::arg("depth"),
        py::arg("light"), py::arg("config_json") = "");
    m.def(
        "relight",
        [](const Array& flash, const Array& depth, const std::array<double, 3>& light,
           const std::string& model_dir, const std::string& config_json) {
            PipelineConfig cfg = config_from_json(config_json);
            nn::TrainedModels models = nn::TrainedModels::load(model_dir);
            ImageBuffer f = to_buffer(flash);
            ImageBuffer d = to_buffer(depth);
            return to_numpy(predict_relit(models, f, d, LightDirection(to_vec3(light)),
                                          cfg.intrinsics_for(d.width(), d.height()), cfg));
        },
        py::arg("flash"), py::arg("depth"), py::arg("light"), py::arg("model_dir"),
        py::arg("config_json") = "");
    m.def(
        "evaluate",
        [](const std::string& data_dir, const std::string& model_dir,
           const std::string& config_json) {
            PipelineConfig cfg = config_from_json(config_json);
            DatasetManifest m = load_manifest(data_dir);
            nn::TrainedModels models = nn::TrainedModels::load(model_dir);
            return format_report(evaluate_models(data_dir, m, models, cfg));
        },
        py::arg("data_dir"), py::arg("model_dir"), py::arg("config_json") = "");
}
