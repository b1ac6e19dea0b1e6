#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rlk/nn/tensor.hpp"

namespace rlk::nn {

enum class LayerKind { Conv, ConvTransposed };
enum class HeadKind { None, Linear, LinearNoBias, Sigmoid, UnitNormal };

struct LayerDesc {
    std::string name;
    LayerKind kind = LayerKind::Conv;
    int kernel = 4;
    int stride = 2;
    int in_ch = 0;
    int out_ch = 0;
    std::string input;  // producing layer, or "input"
    std::string skip;   // encoder layer concatenated in front, if any
    HeadKind head = HeadKind::None;  // None marks hidden layers (leaky-relu)
};

struct NetworkSpec {
    std::string name;  // decompose | shadow | synthesis
    double channel_scale = 1.0;
    int input_channels = 0;
    std::vector<LayerDesc> layers;
    std::vector<std::string> heads;  // output order

    std::string to_json() const;
    static NetworkSpec from_json(const std::string& text);
};

// Channel widths scale as ceil(c*s) with a floor of 4; raw input channels
// and head outputs are left alone.
int scaled_channels(int base, double scale);

NetworkSpec make_network_spec(const std::string& which, double channel_scale);

class Network {
public:
    Network() = default;
    // He-initialized parameters, biases zero, deterministic in seed.
    Network(NetworkSpec spec, std::uint64_t seed);

    const NetworkSpec& spec() const { return spec_; }
    bool defined() const { return !spec_.layers.empty(); }

    // Head name -> output tensor. Hidden activations are leaky-relu(0.1).
    std::map<std::string, Tensor> forward(const Tensor& input) const;

    std::vector<Tensor> parameters() const;  // weights then bias, layer order
    void set_requires_grad(bool on);
    std::int64_t parameter_count() const;

    void save(const std::string& dir) const;
    static Network load(const std::string& dir, const std::string& name);
    void save_epoch(const std::string& dir, int epoch) const;

private:
    NetworkSpec spec_;
    std::vector<Tensor> weights_;
    std::vector<Tensor> biases_;  // undefined tensor when the layer has none
};

struct TrainedModels {
    Network decompose;
    Network shadow;
    Network synthesis;

    void save(const std::string& dir) const;
    static TrainedModels load(const std::string& dir);
};

}  // namespace rlk::nn
