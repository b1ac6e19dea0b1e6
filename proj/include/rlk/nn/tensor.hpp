#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rlk/common.hpp"

namespace rlk::nn {

struct Shape {
    int n = 1, c = 1, h = 1, w = 1;

    std::int64_t numel() const {
        return static_cast<std::int64_t>(n) * c * h * w;
    }
    bool operator==(const Shape& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    bool operator!=(const Shape& o) const { return !(*this == o); }
    std::string str() const;
};

namespace detail {
struct Node;
}

// Value node in a reverse-mode differentiation graph. Cheap to copy (shared
// handle). Graphs are rebuilt per step; leaf tensors (parameters, checked
// inputs) persist across graphs and accumulate gradients until zero_grad.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape s, bool requires_grad = false);
    static Tensor full(Shape s, double value, bool requires_grad = false);
    static Tensor from_data(Shape s, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    Shape shape() const;
    std::int64_t numel() const { return shape().numel(); }
    double* data();
    const double* data() const;
    double* grad();              // allocated on demand
    const double* grad() const;  // nullptr until allocated
    bool requires_grad() const;
    double value() const;  // scalar tensors only

    void zero_grad();

    // Reverse pass from a scalar output; each reachable node is visited
    // exactly once in reverse topological order.
    void backward() const;

    detail::Node* node() const { return node_.get(); }

private:
    friend Tensor make_op(Shape, std::vector<Tensor>, std::function<void(detail::Node&)>);
    std::shared_ptr<detail::Node> node_;
};

namespace detail {
struct Node {
    Shape shape;
    std::vector<double> val;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    void ensure_grad() {
        if (grad.empty()) grad.assign(val.size(), 0.0);
    }
};
}  // namespace detail

// ---- elementwise / scalar ops ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_const(const Tensor& a, double c);
Tensor exp(const Tensor& a);
Tensor exp2(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor square(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double negative_slope = 0.1);
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor clamp_min(const Tensor& a, double lo);
Tensor clamp_max(const Tensor& a, double hi);

// ---- reductions / shape ops ----
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor channel_sum(const Tensor& a);                    // (N,C,H,W)->(N,1,H,W)
Tensor broadcast_channels(const Tensor& a, int c);      // (N,1,H,W)->(N,c,H,W)
Tensor concat_channels(const std::vector<Tensor>& xs);
Tensor slice_channels(const Tensor& a, int c0, int len);
Tensor forward_diff_x(const Tensor& a);  // width shrinks by one
Tensor forward_diff_y(const Tensor& a);  // height shrinks by one

// ---- convolution ----
// x (N,Ci,H,W), w (Co,Ci,kh,kw), b (1,Co,1,1) or undefined for no bias.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad_t, int pad_l, int pad_b, int pad_r);
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);
// x (N,Ci,H,W), w (Ci,Co,kh,kw); output spatial size = (H-1)*stride - 2*pad + k.
Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                        int pad);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }

}  // namespace rlk::nn
