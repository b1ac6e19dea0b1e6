#include "rlk/nn/network.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "rlk/rng.hpp"

namespace fs = std::filesystem;

namespace rlk::nn {

using json = nlohmann::ordered_json;

int scaled_channels(int base, double scale) {
    return std::max(4, static_cast<int>(std::ceil(base * scale)));
}

namespace {

LayerDesc conv(std::string name, int k, int in_ch, int out_ch, std::string input) {
    LayerDesc d;
    d.name = std::move(name);
    d.kind = LayerKind::Conv;
    d.kernel = k;
    d.stride = 2;
    d.in_ch = in_ch;
    d.out_ch = out_ch;
    d.input = std::move(input);
    return d;
}

LayerDesc upconv(std::string name, int in_ch, int out_ch, std::string input,
                 std::string skip) {
    LayerDesc d;
    d.name = std::move(name);
    d.kind = LayerKind::ConvTransposed;
    d.kernel = 4;
    d.stride = 2;
    d.in_ch = in_ch;
    d.out_ch = out_ch;
    d.input = std::move(input);
    d.skip = std::move(skip);
    return d;
}

LayerDesc head(std::string name, int k, int in_ch, int out_ch, std::string input,
               HeadKind kind) {
    LayerDesc d;
    d.name = std::move(name);
    d.kind = LayerKind::Conv;
    d.kernel = k;
    d.stride = 1;
    d.in_ch = in_ch;
    d.out_ch = out_ch;
    d.input = std::move(input);
    d.head = kind;
    return d;
}

// Shared U-Net trunk used by ShadowNet and SynthesisNet; channel counts of
// concatenated decoder inputs are recomputed from the skip topology.
void unet_trunk(NetworkSpec& s, const std::array<int, 5>& enc,
                const std::array<int, 5>& dec, double sc) {
    auto c = [sc](int v) { return scaled_channels(v, sc); };
    s.layers.push_back(conv("conv0", 6, s.input_channels, c(enc[0]), "input"));
    for (int i = 1; i < 5; ++i)
        s.layers.push_back(
            conv("conv" + std::to_string(i), 4, c(enc[i - 1]), c(enc[i]),
                 "conv" + std::to_string(i - 1)));
    s.layers.push_back(upconv("upconv0", c(enc[4]), c(dec[0]), "conv4", ""));
    for (int i = 1; i < 5; ++i) {
        int skip_ch = c(enc[4 - i]);
        int prev_ch = c(dec[i - 1]);
        s.layers.push_back(upconv("upconv" + std::to_string(i), skip_ch + prev_ch,
                                  c(dec[i]), "upconv" + std::to_string(i - 1),
                                  "conv" + std::to_string(4 - i)));
    }
}

}  // namespace

NetworkSpec make_network_spec(const std::string& which, double channel_scale) {
    if (!(channel_scale > 0.0) || channel_scale > 1.0)
        throw ConfigError("channel scale must lie in (0,1]");
    const double sc = channel_scale;
    auto c = [sc](int v) { return scaled_channels(v, sc); };
    NetworkSpec s;
    s.name = which;
    s.channel_scale = sc;

    if (which == "decompose") {
        s.input_channels = 4;  // flash rgb + depth
        s.layers.push_back(conv("rgb_conv0", 6, 4, c(32), "input"));
        s.layers.push_back(conv("rgb_conv1", 4, c(32), c(64), "rgb_conv0"));
        s.layers.push_back(conv("rgb_conv2", 4, c(64), c(128), "rgb_conv1"));
        s.layers.push_back(conv("rgb_conv3", 4, c(128), c(256), "rgb_conv2"));
        s.layers.push_back(conv("rgb_conv4", 4, c(256), c(512), "rgb_conv3"));
        struct Branch {
            const char* tag;
            int out_ch;
            HeadKind kind;
        };
        const Branch branches[] = {{"albedo", 3, HeadKind::LinearNoBias},
                                   {"normal", 3, HeadKind::UnitNormal},
                                   {"rough", 1, HeadKind::Sigmoid}};
        for (const auto& br : branches) {
            std::string t = br.tag;
            s.layers.push_back(upconv(t + "_upconv0", c(512), c(256), "rgb_conv4", ""));
            s.layers.push_back(upconv(t + "_upconv1", c(256) + c(256), c(128),
                                      t + "_upconv0", "rgb_conv3"));
            s.layers.push_back(upconv(t + "_upconv2", c(128) + c(128), c(128),
                                      t + "_upconv1", "rgb_conv2"));
            s.layers.push_back(upconv(t + "_upconv3", c(64) + c(128), c(64),
                                      t + "_upconv2", "rgb_conv1"));
            s.layers.push_back(upconv(t + "_upconv4", c(32) + c(64), c(64),
                                      t + "_upconv3", "rgb_conv0"));
            s.layers.push_back(head(t, 5, c(64), br.out_ch, t + "_upconv4", br.kind));
            s.heads.push_back(t);
        }
    } else if (which == "shadow") {
        s.input_channels = 3;  // encoded point coordinates
        unet_trunk(s, {32, 64, 128, 256, 256}, {256, 256, 128, 64, 32}, sc);
        s.layers.push_back(head("shadow", 6, c(32), 1, "upconv4", HeadKind::Sigmoid));
        s.heads.push_back("shadow");
    } else if (which == "synthesis") {
        s.input_channels = 17;  // shadow 1, render 3, flash 3, albedo 3,
                                // normal 3, roughness 1, encoded points 3
        unet_trunk(s, {64, 128, 128, 256, 256}, {512, 256, 128, 64, 32}, sc);
        s.layers.push_back(head("relight", 5, c(32), 3, "upconv4", HeadKind::LinearNoBias));
        s.heads.push_back("relight");
    } else {
        throw ConfigError("unknown network '" + which + "'");
    }
    return s;
}

Network::Network(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    Rng rng(Rng::derive(seed, std::hash<std::string>{}(spec_.name) & 0xffff));
    for (const LayerDesc& d : spec_.layers) {
        std::int64_t fan_in = static_cast<std::int64_t>(d.in_ch) * d.kernel * d.kernel;
        double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        Shape ws = d.kind == LayerKind::Conv
                       ? Shape{d.out_ch, d.in_ch, d.kernel, d.kernel}
                       : Shape{d.in_ch, d.out_ch, d.kernel, d.kernel};
        std::vector<double> wd(ws.numel());
        for (double& v : wd) v = rng.normal(0.0, stddev);
        weights_.push_back(Tensor::from_data(ws, std::move(wd), true));
        if (d.head == HeadKind::LinearNoBias) {
            biases_.emplace_back();
        } else {
            biases_.push_back(Tensor::zeros(Shape{1, d.out_ch, 1, 1}, true));
        }
    }
}

std::map<std::string, Tensor> Network::forward(const Tensor& input) const {
    if (input.shape().c != spec_.input_channels)
        throw ShapeError(spec_.name + ": expected " +
                         std::to_string(spec_.input_channels) + " input channels, got " +
                         std::to_string(input.shape().c));
    std::map<std::string, Tensor> acts;
    acts["input"] = input;
    std::map<std::string, Tensor> outs;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        const LayerDesc& d = spec_.layers[i];
        Tensor in = acts.at(d.input);
        if (!d.skip.empty()) in = concat_channels({acts.at(d.skip), in});
        Tensor t;
        if (d.kind == LayerKind::ConvTransposed) {
            t = conv_transpose2d(in, weights_[i], biases_[i], d.stride, 1);
        } else if (d.stride == 2) {
            t = conv2d(in, weights_[i], biases_[i], 2, (d.kernel - 2) / 2);
        } else {
            // stride 1, resolution preserving; even kernels pad asymmetrically
            int pl = (d.kernel - 1) / 2, pr = d.kernel - 1 - pl;
            t = conv2d(in, weights_[i], biases_[i], 1, pl, pl, pr, pr);
        }
        switch (d.head) {
            case HeadKind::None:
                t = leaky_relu(t, 0.1);
                break;
            case HeadKind::Sigmoid:
                t = sigmoid(t);
                break;
            case HeadKind::UnitNormal: {
                Tensor len = sqrt(add_const(channel_sum(square(t)), 1e-12));
                t = t / broadcast_channels(len, t.shape().c);
                break;
            }
            case HeadKind::Linear:
            case HeadKind::LinearNoBias:
                break;
        }
        acts[d.name] = t;
        if (d.head != HeadKind::None) outs[d.name] = t;
    }
    return outs;
}

std::vector<Tensor> Network::parameters() const {
    std::vector<Tensor> ps;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        ps.push_back(weights_[i]);
        if (biases_[i].defined()) ps.push_back(biases_[i]);
    }
    return ps;
}

void Network::set_requires_grad(bool on) {
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        weights_[i].node()->requires_grad = on;
        if (biases_[i].defined()) biases_[i].node()->requires_grad = on;
    }
}

std::int64_t Network::parameter_count() const {
    std::int64_t n = 0;
    for (const Tensor& t : parameters()) n += t.numel();
    return n;
}

// ---- NetworkSpec json ----

std::string NetworkSpec::to_json() const {
    json j;
    j["name"] = name;
    j["channel_scale"] = channel_scale;
    j["input_channels"] = input_channels;
    json layers_j = json::array();
    for (const LayerDesc& d : layers)
        layers_j.push_back({{"name", d.name},
                            {"kind", d.kind == LayerKind::Conv ? "conv" : "tconv"},
                            {"kernel", d.kernel},
                            {"stride", d.stride},
                            {"in_ch", d.in_ch},
                            {"out_ch", d.out_ch},
                            {"input", d.input},
                            {"skip", d.skip},
                            {"head", static_cast<int>(d.head)}});
    j["layers"] = layers_j;
    j["heads"] = heads;
    return j.dump(2) + "\n";
}

NetworkSpec NetworkSpec::from_json(const std::string& text) {
    json j = json::parse(text);
    NetworkSpec s;
    s.name = j.at("name").get<std::string>();
    s.channel_scale = j.at("channel_scale").get<double>();
    s.input_channels = j.at("input_channels").get<int>();
    for (const auto& l : j.at("layers")) {
        LayerDesc d;
        d.name = l.at("name").get<std::string>();
        d.kind = l.at("kind").get<std::string>() == "conv" ? LayerKind::Conv
                                                           : LayerKind::ConvTransposed;
        d.kernel = l.at("kernel").get<int>();
        d.stride = l.at("stride").get<int>();
        d.in_ch = l.at("in_ch").get<int>();
        d.out_ch = l.at("out_ch").get<int>();
        d.input = l.at("input").get<std::string>();
        d.skip = l.at("skip").get<std::string>();
        d.head = static_cast<HeadKind>(l.at("head").get<int>());
        s.layers.push_back(d);
    }
    for (const auto& h : j.at("heads")) s.heads.push_back(h.get<std::string>());
    return s;
}

// ---- checkpoints: versioned container of named float32 tensors ----

namespace {

constexpr char kCkptMagic[4] = {'R', 'L', 'K', 'C'};

void put_u32(std::ofstream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}
std::uint32_t get_u32(std::ifstream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

void write_tensor(std::ofstream& os, const std::string& name, const Tensor& t) {
    std::uint16_t len = static_cast<std::uint16_t>(name.size());
    os.write(reinterpret_cast<const char*>(&len), 2);
    os.write(name.data(), len);
    Shape s = t.shape();
    put_u32(os, static_cast<std::uint32_t>(s.n));
    put_u32(os, static_cast<std::uint32_t>(s.c));
    put_u32(os, static_cast<std::uint32_t>(s.h));
    put_u32(os, static_cast<std::uint32_t>(s.w));
    std::vector<float> buf(t.numel());
    const double* p = t.data();
    for (std::int64_t i = 0; i < t.numel(); ++i) buf[i] = static_cast<float>(p[i]);
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

}  // namespace

void Network::save(const std::string& dir) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
    {
        std::ofstream os(fs::path(dir) / (spec_.name + ".json"));
        if (!os) throw IoError("cannot write network spec in " + dir);
        os << spec_.to_json();
    }
    std::ofstream os(fs::path(dir) / (spec_.name + ".ckpt"), std::ios::binary);
    if (!os) throw IoError("cannot write checkpoint in " + dir);
    os.write(kCkptMagic, 4);
    put_u32(os, 1);  // version
    std::uint32_t count = 0;
    for (std::size_t i = 0; i < weights_.size(); ++i)
        count += biases_[i].defined() ? 2 : 1;
    put_u32(os, count);
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        write_tensor(os, spec_.layers[i].name + ".weight", weights_[i]);
        if (biases_[i].defined())
            write_tensor(os, spec_.layers[i].name + ".bias", biases_[i]);
    }
    if (!os) throw IoError("checkpoint write failed in " + dir);
}

void Network::save_epoch(const std::string& dir, int epoch) const {
    Network copy = *this;
    copy.spec_.name = spec_.name + "_epoch" + std::to_string(epoch);
    copy.save(dir);
}

Network Network::load(const std::string& dir, const std::string& name) {
    std::ifstream spec_is(fs::path(dir) / (name + ".json"));
    if (!spec_is) throw ConfigError("missing network spec: " + name + ".json in " + dir);
    std::string text((std::istreambuf_iterator<char>(spec_is)),
                     std::istreambuf_iterator<char>());
    Network net;
    net.spec_ = NetworkSpec::from_json(text);

    std::ifstream is(fs::path(dir) / (name + ".ckpt"), std::ios::binary);
    if (!is) throw ConfigError("missing checkpoint: " + name + ".ckpt in " + dir);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kCkptMagic, 4) != 0)
        throw IoError("bad checkpoint magic in " + dir);
    std::uint32_t version = get_u32(is);
    if (version != 1) throw IoError("unsupported checkpoint version");
    std::uint32_t count = get_u32(is);

    std::map<std::string, Tensor> tensors;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint16_t len = 0;
        is.read(reinterpret_cast<char*>(&len), 2);
        std::string tname(len, '\0');
        is.read(tname.data(), len);
        Shape s;
        s.n = static_cast<int>(get_u32(is));
        s.c = static_cast<int>(get_u32(is));
        s.h = static_cast<int>(get_u32(is));
        s.w = static_cast<int>(get_u32(is));
        std::vector<float> buf(s.numel());
        is.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!is) throw IoError("truncated checkpoint in " + dir);
        std::vector<double> vals(buf.begin(), buf.end());
        tensors[tname] = Tensor::from_data(s, std::move(vals), true);
    }
    for (const LayerDesc& d : net.spec_.layers) {
        auto wit = tensors.find(d.name + ".weight");
        if (wit == tensors.end())
            throw IoError("checkpoint missing tensor " + d.name + ".weight");
        net.weights_.push_back(wit->second);
        auto bit = tensors.find(d.name + ".bias");
        net.biases_.push_back(bit == tensors.end() ? Tensor() : bit->second);
    }
    return net;
}

void TrainedModels::save(const std::string& dir) const {
    decompose.save(dir);
    shadow.save(dir);
    synthesis.save(dir);
}

TrainedModels TrainedModels::load(const std::string& dir) {
    TrainedModels m;
    m.decompose = Network::load(dir, "decompose");
    m.shadow = Network::load(dir, "shadow");
    m.synthesis = Network::load(dir, "synthesis");
    return m;
}

}  // namespace rlk::nn
