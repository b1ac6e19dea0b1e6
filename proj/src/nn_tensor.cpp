#include "rlk/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <cblas.h>

namespace rlk::nn {

std::string Shape::str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) +
           "," + std::to_string(w) + ")";
}

using detail::Node;

Tensor make_op(Shape s, std::vector<Tensor> parents, std::function<void(Node&)> backward);

Tensor Tensor::zeros(Shape s, bool requires_grad) {
    return from_data(s, std::vector<double>(s.numel(), 0.0), requires_grad);
}

Tensor Tensor::full(Shape s, double value, bool requires_grad) {
    return from_data(s, std::vector<double>(s.numel(), value), requires_grad);
}

Tensor Tensor::from_data(Shape s, std::vector<double> data, bool requires_grad) {
    if (static_cast<std::int64_t>(data.size()) != s.numel())
        throw ShapeError("Tensor::from_data: size mismatch for " + s.str());
    Tensor t;
    t.node_ = std::make_shared<Node>();
    t.node_->shape = s;
    t.node_->val = std::move(data);
    t.node_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data(Shape{1, 1, 1, 1}, {value}, requires_grad);
}

Shape Tensor::shape() const { return node_->shape; }
double* Tensor::data() { return node_->val.data(); }
const double* Tensor::data() const { return node_->val.data(); }
double* Tensor::grad() {
    node_->ensure_grad();
    return node_->grad.data();
}
const double* Tensor::grad() const {
    return node_->grad.empty() ? nullptr : node_->grad.data();
}
bool Tensor::requires_grad() const { return node_->requires_grad; }

double Tensor::value() const {
    if (node_->shape.numel() != 1) throw ShapeError("Tensor::value: not a scalar");
    return node_->val[0];
}

void Tensor::zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() const {
    if (node_->shape.numel() != 1)
        throw ShapeError("backward: output must be a scalar");
    // iterative post-order DFS
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.push_back({node_.get(), 0});
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, i] = stack.back();
        if (i < n->parents.size()) {
            Node* p = n->parents[i++].get();
            if (visited.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    node_->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

Tensor make_op(Shape s, std::vector<Tensor> parents, std::function<void(Node&)> backward) {
    Tensor t;
    t.node_ = std::make_shared<Node>();
    t.node_->shape = s;
    t.node_->val.assign(s.numel(), 0.0);
    bool req = false;
    for (const Tensor& p : parents) req = req || p.node()->requires_grad;
    t.node_->requires_grad = req;
    if (req) {
        for (const Tensor& p : parents) t.node_->parents.push_back(p.node_);
        t.node_->backward_fn = std::move(backward);
    }
    return t;
}

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
}

bool is_scalar(const Tensor& t) { return t.numel() == 1; }

// grad helper: accumulate into parent if it participates in the graph
void acc(Node* p, std::int64_t i, double v) {
    p->grad[i] += v;
}

}  // namespace

// ---------- binary elementwise (identical shapes or scalar operand) ----------

template <typename FwdFn, typename BwdFn>
static Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, FwdFn fwd,
                        BwdFn bwd) {
    const bool sa = is_scalar(a), sb = is_scalar(b);
    if (!sa && !sb) require_same(a, b, name);
    Shape s = sa ? b.shape() : a.shape();
    Tensor out = make_op(s, {a, b}, nullptr);
    const std::int64_t n = s.numel();
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::int64_t i = 0; i < n; ++i) fwd(po[i], pa[sa ? 0 : i], pb[sb ? 0 : i]);
    if (out.requires_grad()) {
        Node* an = a.node();
        Node* bn = b.node();
        out.node()->backward_fn = [an, bn, sa, sb, n, bwd](Node& o) {
            an->ensure_grad();
            bn->ensure_grad();
            for (std::int64_t i = 0; i < n; ++i) {
                double ga = 0, gb = 0;
                bwd(o.grad[i], an->val[sa ? 0 : i], bn->val[sb ? 0 : i], o.val[i], ga, gb);
                acc(an, sa ? 0 : i, ga);
                acc(bn, sb ? 0 : i, gb);
            }
        };
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "add", [](double& o, double x, double y) { o = x + y; },
        [](double g, double, double, double, double& ga, double& gb) {
            ga = g;
            gb = g;
        });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "sub", [](double& o, double x, double y) { o = x - y; },
        [](double g, double, double, double, double& ga, double& gb) {
            ga = g;
            gb = -g;
        });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "mul", [](double& o, double x, double y) { o = x * y; },
        [](double g, double x, double y, double, double& ga, double& gb) {
            ga = g * y;
            gb = g * x;
        });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "div", [](double& o, double x, double y) { o = x / y; },
        [](double g, double x, double y, double, double& ga, double& gb) {
            ga = g / y;
            gb = -g * x / (y * y);
        });
}

// ---------- unary elementwise ----------

template <typename FwdFn, typename BwdFn>
static Tensor unary_op(const Tensor& a, FwdFn fwd, BwdFn bwd) {
    Tensor out = make_op(a.shape(), {a}, nullptr);
    const std::int64_t n = a.numel();
    const double* pa = a.data();
    double* po = out.data();
    for (std::int64_t i = 0; i < n; ++i) po[i] = fwd(pa[i]);
    if (out.requires_grad()) {
        Node* an = a.node();
        out.node()->backward_fn = [an, n, bwd](Node& o) {
            an->ensure_grad();
            for (std::int64_t i = 0; i < n; ++i)
                an->grad[i] += o.grad[i] * bwd(an->val[i], o.val[i]);
        };
    }
    return out;
}

Tensor neg(const Tensor& a) {
    return unary_op(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}
Tensor scale(const Tensor& a, double s) {
    return unary_op(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}
Tensor add_const(const Tensor& a, double c) {
    return unary_op(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}
Tensor exp(const Tensor& a) {
    return unary_op(a, [](double x) { return std::exp(x); },
                    [](double, double y) { return y; });
}
Tensor exp2(const Tensor& a) {
    constexpr double ln2 = 0.6931471805599453;
    return unary_op(a, [](double x) { return std::exp2(x); },
                    [ln2](double, double y) { return y * ln2; });
}
Tensor log(const Tensor& a) {
    return unary_op(a, [](double x) { return std::log(x); },
                    [](double x, double) { return 1.0 / x; });
}
Tensor sqrt(const Tensor& a) {
    return unary_op(a, [](double x) { return std::sqrt(x); },
                    [](double, double y) { return 0.5 / y; });
}
Tensor square(const Tensor& a) {
    return unary_op(a, [](double x) { return x * x; },
                    [](double x, double) { return 2.0 * x; });
}
Tensor abs(const Tensor& a) {
    return unary_op(a, [](double x) { return std::abs(x); },
                    [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}
Tensor sigmoid(const Tensor& a) {
    return unary_op(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                    [](double, double y) { return y * (1.0 - y); });
}
Tensor leaky_relu(const Tensor& a, double negative_slope) {
    return unary_op(
        a, [negative_slope](double x) { return x >= 0 ? x : negative_slope * x; },
        [negative_slope](double x, double) { return x >= 0 ? 1.0 : negative_slope; });
}
Tensor clamp(const Tensor& a, double lo, double hi) {
    return unary_op(
        a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
        [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}
Tensor clamp_min(const Tensor& a, double lo) {
    return unary_op(a, [lo](double x) { return std::max(x, lo); },
                    [lo](double x, double) { return x > lo ? 1.0 : 0.0; });
}
Tensor clamp_max(const Tensor& a, double hi) {
    return unary_op(a, [hi](double x) { return std::min(x, hi); },
                    [hi](double x, double) { return x < hi ? 1.0 : 0.0; });
}

// ---------- reductions / shape ----------

Tensor sum(const Tensor& a) {
    Tensor out = make_op(Shape{1, 1, 1, 1}, {a}, nullptr);
    double acc_v = 0.0;
    const double* pa = a.data();
    for (std::int64_t i = 0; i < a.numel(); ++i) acc_v += pa[i];
    out.data()[0] = acc_v;
    if (out.requires_grad()) {
        Node* an = a.node();
        const std::int64_t n = a.numel();
        out.node()->backward_fn = [an, n](Node& o) {
            an->ensure_grad();
            for (std::int64_t i = 0; i < n; ++i) an->grad[i] += o.grad[0];
        };
    }
    return out;
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor channel_sum(const Tensor& a) {
    Shape s = a.shape();
    Shape os{s.n, 1, s.h, s.w};
    Tensor out = make_op(os, {a}, nullptr);
    const std::int64_t hw = static_cast<std::int64_t>(s.h) * s.w;
    const double* pa = a.data();
    double* po = out.data();
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (std::int64_t i = 0; i < hw; ++i)
                po[n * hw + i] += pa[(static_cast<std::int64_t>(n) * s.c + c) * hw + i];
    if (out.requires_grad()) {
        Node* an = a.node();
        out.node()->backward_fn = [an, s, hw](Node& o) {
            an->ensure_grad();
            for (int n = 0; n < s.n; ++n)
                for (int c = 0; c < s.c; ++c)
                    for (std::int64_t i = 0; i < hw; ++i)
                        an->grad[(static_cast<std::int64_t>(n) * s.c + c) * hw + i] +=
                            o.grad[n * hw + i];
        };
    }
    return out;
}

Tensor broadcast_channels(const Tensor& a, int c) {
    Shape s = a.shape();
    if (s.c != 1) throw ShapeError("broadcast_channels: input must have one channel");
    Shape os{s.n, c, s.h, s.w};
    Tensor out = make_op(os, {a}, nullptr);
    const std::int64_t hw = static_cast<std::int64_t>(s.h) * s.w;
    const double* pa = a.data();
    double* po = out.data();
    for (int n = 0; n < s.n; ++n)
        for (int ch = 0; ch < c; ++ch)
            std::copy(pa + n * hw, pa + (n + 1) * hw,
                      po + (static_cast<std::int64_t>(n) * c + ch) * hw);
    if (out.requires_grad()) {
        Node* an = a.node();
        out.node()->backward_fn = [an, c, hw, s](Node& o) {
            an->ensure_grad();
            for (int n = 0; n < s.n; ++n)
                for (int ch = 0; ch < c; ++ch)
                    for (std::int64_t i = 0; i < hw; ++i)
                        an->grad[n * hw + i] +=
                            o.grad[(static_cast<std::int64_t>(n) * c + ch) * hw + i];
        };
    }
    return out;
}

Tensor concat_channels(const std::vector<Tensor>& xs) {
    if (xs.empty()) throw ShapeError("concat_channels: empty input list");
    Shape s0 = xs[0].shape();
    int ctot = 0;
    for (const Tensor& t : xs) {
        Shape s = t.shape();
        if (s.n != s0.n || s.h != s0.h || s.w != s0.w)
            throw ShapeError("concat_channels: spatial/batch mismatch");
        ctot += s.c;
    }
    Shape os{s0.n, ctot, s0.h, s0.w};
    Tensor out = make_op(os, xs, nullptr);
    const std::int64_t hw = static_cast<std::int64_t>(s0.h) * s0.w;
    double* po = out.data();
    for (int n = 0; n < s0.n; ++n) {
        int coff = 0;
        for (const Tensor& t : xs) {
            int c = t.shape().c;
            const double* pa = t.data() + static_cast<std::int64_t>(n) * c * hw;
            std::copy(pa, pa + static_cast<std::int64_t>(c) * hw,
                      po + (static_cast<std::int64_t>(n) * ctot + coff) * hw);
            coff += c;
        }
    }
    if (out.requires_grad()) {
        std::vector<Node*> nodes;
        std::vector<int> chans;
        for (const Tensor& t : xs) {
            nodes.push_back(t.node());
            chans.push_back(t.shape().c);
        }
        out.node()->backward_fn = [nodes, chans, s0, hw, ctot](Node& o) {
            for (int n = 0; n < s0.n; ++n) {
                int coff = 0;
                for (std::size_t k = 0; k < nodes.size(); ++k) {
                    nodes[k]->ensure_grad();
                    int c = chans[k];
                    for (std::int64_t i = 0; i < static_cast<std::int64_t>(c) * hw; ++i)
                        nodes[k]->grad[static_cast<std::int64_t>(n) * c * hw + i] +=
                            o.grad[(static_cast<std::int64_t>(n) * ctot + coff) * hw + i];
                    coff += c;
                }
            }
        };
    }
    return out;
}

Tensor slice_channels(const Tensor& a, int c0, int len) {
    Shape s = a.shape();
    if (c0 < 0 || len <= 0 || c0 + len > s.c) throw ShapeError("slice_channels: bad range");
    Shape os{s.n, len, s.h, s.w};
    Tensor out = make_op(os, {a}, nullptr);
    const std::int64_t hw = static_cast<std::int64_t>(s.h) * s.w;
    const double* pa = a.data();
    double* po = out.data();
    for (int n = 0; n < s.n; ++n)
        std::copy(pa + (static_cast<std::int64_t>(n) * s.c + c0) * hw,
                  pa + (static_cast<std::int64_t>(n) * s.c + c0 + len) * hw,
                  po + static_cast<std::int64_t>(n) * len * hw);
    if (out.requires_grad()) {
        Node* an = a.node();
        out.node()->backward_fn = [an, s, c0, len, hw](Node& o) {
            an->ensure_grad();
            for (int n = 0; n < s.n; ++n)
                for (std::int64_t i = 0; i < static_cast<std::int64_t>(len) * hw; ++i)
                    an->grad[(static_cast<std::int64_t>(n) * s.c + c0) * hw + i] +=
                        o.grad[static_cast<std::int64_t>(n) * len * hw + i];
        };
    }
    return out;
}

template <bool AlongX>
static Tensor forward_diff(const Tensor& a) {
    Shape s = a.shape();
    Shape os = AlongX ? Shape{s.n, s.c, s.h, s.w - 1} : Shape{s.n, s.c, s.h - 1, s.w};
    if (os.h <= 0 || os.w <= 0) throw ShapeError("forward_diff: image too small");
    Tensor out = make_op(os, {a}, nullptr);
    const double* pa = a.data();
    double* po = out.data();
    const std::int64_t planes = static_cast<std::int64_t>(s.n) * s.c;
    for (std::int64_t p = 0; p < planes; ++p)
        for (int y = 0; y < os.h; ++y)
            for (int x = 0; x < os.w; ++x) {
                std::int64_t src = (p * s.h + y) * s.w + x;
                std::int64_t nxt = AlongX ? src + 1 : src + s.w;
                po[(p * os.h + y) * os.w + x] = pa[nxt] - pa[src];
            }
    if (out.requires_grad()) {
        Node* an = a.node();
        out.node()->backward_fn = [an, s, os, planes](Node& o) {
            an->ensure_grad();
            for (std::int64_t p = 0; p < planes; ++p)
                for (int y = 0; y < os.h; ++y)
                    for (int x = 0; x < os.w; ++x) {
                        double g = o.grad[(p * os.h + y) * os.w + x];
                        std::int64_t src = (p * s.h + y) * s.w + x;
                        std::int64_t nxt = AlongX ? src + 1 : src + s.w;
                        an->grad[nxt] += g;
                        an->grad[src] -= g;
                    }
        };
    }
    return out;
}

Tensor forward_diff_x(const Tensor& a) { return forward_diff<true>(a); }
Tensor forward_diff_y(const Tensor& a) { return forward_diff<false>(a); }

// ---------- convolution ----------

namespace {

struct ConvGeom {
    int C, H, W;      // image being unrolled
    int kh, kw, stride;
    int pt, pl;
    int Ho, Wo;       // unrolled output positions
};

// cols is (C*kh*kw) x (Ho*Wo), row-major
void im2col(const double* src, const ConvGeom& g, double* cols) {
    const std::int64_t ow = static_cast<std::int64_t>(g.Ho) * g.Wo;
    for (int c = 0; c < g.C; ++c)
        for (int ky = 0; ky < g.kh; ++ky)
            for (int kx = 0; kx < g.kw; ++kx) {
                double* row = cols + ((static_cast<std::int64_t>(c) * g.kh + ky) * g.kw + kx) * ow;
                for (int oy = 0; oy < g.Ho; ++oy) {
                    int iy = oy * g.stride - g.pt + ky;
                    if (iy < 0 || iy >= g.H) {
                        std::fill(row + static_cast<std::int64_t>(oy) * g.Wo,
                                  row + (static_cast<std::int64_t>(oy) + 1) * g.Wo, 0.0);
                        continue;
                    }
                    const double* srow = src + (static_cast<std::int64_t>(c) * g.H + iy) * g.W;
                    for (int ox = 0; ox < g.Wo; ++ox) {
                        int ix = ox * g.stride - g.pl + kx;
                        row[static_cast<std::int64_t>(oy) * g.Wo + ox] =
                            (ix >= 0 && ix < g.W) ? srow[ix] : 0.0;
                    }
                }
            }
}

void col2im_add(const double* cols, const ConvGeom& g, double* dst) {
    const std::int64_t ow = static_cast<std::int64_t>(g.Ho) * g.Wo;
    for (int c = 0; c < g.C; ++c)
        for (int ky = 0; ky < g.kh; ++ky)
            for (int kx = 0; kx < g.kw; ++kx) {
                const double* row =
                    cols + ((static_cast<std::int64_t>(c) * g.kh + ky) * g.kw + kx) * ow;
                for (int oy = 0; oy < g.Ho; ++oy) {
                    int iy = oy * g.stride - g.pt + ky;
                    if (iy < 0 || iy >= g.H) continue;
                    double* drow = dst + (static_cast<std::int64_t>(c) * g.H + iy) * g.W;
                    for (int ox = 0; ox < g.Wo; ++ox) {
                        int ix = ox * g.stride - g.pl + kx;
                        if (ix >= 0 && ix < g.W)
                            drow[ix] += row[static_cast<std::int64_t>(oy) * g.Wo + ox];
                    }
                }
            }
}

void gemm(bool ta, bool tb, int m, int n, int k, double alpha, const double* A, int lda,
          const double* B, int ldb, double beta, double* C, int ldc) {
    cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans,
                tb ? CblasTrans : CblasNoTrans, m, n, k, alpha, A, lda, B, ldb, beta, C,
                ldc);
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
    return conv2d(x, w, b, stride, pad, pad, pad, pad);
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad_t,
              int pad_l, int pad_b, int pad_r) {
    Shape xs = x.shape(), ws = w.shape();
    const int N = xs.n, Ci = xs.c, H = xs.h, W = xs.w;
    const int Co = ws.n, kh = ws.h, kw = ws.w;
    if (ws.c != Ci)
        throw ShapeError("conv2d: weight expects " + std::to_string(ws.c) +
                         " input channels, got " + std::to_string(Ci));
    if (b.defined() && (b.shape().c != Co || b.numel() != Co))
        throw ShapeError("conv2d: bias channel mismatch");
    const int Ho = (H + pad_t + pad_b - kh) / stride + 1;
    const int Wo = (W + pad_l + pad_r - kw) / stride + 1;
    if (Ho <= 0 || Wo <= 0) throw ShapeError("conv2d: empty output");

    std::vector<Tensor> parents = {x, w};
    if (b.defined()) parents.push_back(b);
    Tensor out = make_op(Shape{N, Co, Ho, Wo}, parents, nullptr);

    const ConvGeom g{Ci, H, W, kh, kw, stride, pad_t, pad_l, Ho, Wo};
    const std::int64_t K = static_cast<std::int64_t>(Ci) * kh * kw;
    const std::int64_t P = static_cast<std::int64_t>(Ho) * Wo;
    std::vector<double> cols(K * P);
    for (int n = 0; n < N; ++n) {
        im2col(x.data() + static_cast<std::int64_t>(n) * Ci * H * W, g, cols.data());
        gemm(false, false, Co, static_cast<int>(P), static_cast<int>(K), 1.0, w.data(),
             static_cast<int>(K), cols.data(), static_cast<int>(P), 0.0,
             out.data() + static_cast<std::int64_t>(n) * Co * P, static_cast<int>(P));
    }
    if (b.defined()) {
        double* po = out.data();
        for (int n = 0; n < N; ++n)
            for (int co = 0; co < Co; ++co) {
                double bias = b.data()[co];
                double* plane = po + (static_cast<std::int64_t>(n) * Co + co) * P;
                for (std::int64_t i = 0; i < P; ++i) plane[i] += bias;
            }
    }

    if (out.requires_grad()) {
        Node* xn = x.node();
        Node* wn = w.node();
        Node* bn = b.defined() ? b.node() : nullptr;
        const bool xreq = xn->requires_grad;
        out.node()->backward_fn = [xn, wn, bn, g, N, Co, K, P, xreq](Node& o) {
            xn->ensure_grad();
            wn->ensure_grad();
            if (bn) bn->ensure_grad();
            std::vector<double> cols(K * P);
            std::vector<double> dcols(xreq ? K * P : 0);
            const std::int64_t xplane = static_cast<std::int64_t>(g.C) * g.H * g.W;
            for (int n = 0; n < N; ++n) {
                const double* dy = o.grad.data() + static_cast<std::int64_t>(n) * Co * P;
                im2col(xn->val.data() + n * xplane, g, cols.data());
                // dW += dY . cols^T
                gemm(false, true, Co, static_cast<int>(K), static_cast<int>(P), 1.0, dy,
                     static_cast<int>(P), cols.data(), static_cast<int>(P), 1.0,
                     wn->grad.data(), static_cast<int>(K));
                if (xreq) {
                    // dcols = W^T . dY, then scatter
                    gemm(true, false, static_cast<int>(K), static_cast<int>(P), Co, 1.0,
                         wn->val.data(), static_cast<int>(K), dy, static_cast<int>(P), 0.0,
                         dcols.data(), static_cast<int>(P));
                    col2im_add(dcols.data(), g, xn->grad.data() + n * xplane);
                }
                if (bn)
                    for (int co = 0; co < Co; ++co) {
                        double s = 0.0;
                        const double* row = dy + static_cast<std::int64_t>(co) * P;
                        for (std::int64_t i = 0; i < P; ++i) s += row[i];
                        bn->grad[co] += s;
                    }
            }
        };
    }
    return out;
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                        int pad) {
    Shape xs = x.shape(), ws = w.shape();
    const int N = xs.n, Ci = xs.c, H = xs.h, W = xs.w;
    const int Co = ws.c, kh = ws.h, kw = ws.w;
    if (ws.n != Ci)
        throw ShapeError("conv_transpose2d: weight expects " + std::to_string(ws.n) +
                         " input channels, got " + std::to_string(Ci));
    if (b.defined() && (b.shape().c != Co || b.numel() != Co))
        throw ShapeError("conv_transpose2d: bias channel mismatch");
    const int Ho = (H - 1) * stride - 2 * pad + kh;
    const int Wo = (W - 1) * stride - 2 * pad + kw;
    if (Ho <= 0 || Wo <= 0) throw ShapeError("conv_transpose2d: empty output");

    std::vector<Tensor> parents = {x, w};
    if (b.defined()) parents.push_back(b);
    Tensor out = make_op(Shape{N, Co, Ho, Wo}, parents, nullptr);

    // virtual forward conv: (Co,Ho,Wo) -> (Ci,H,W)
    const ConvGeom g{Co, Ho, Wo, kh, kw, stride, pad, pad, H, W};
    const std::int64_t K = static_cast<std::int64_t>(Co) * kh * kw;
    const std::int64_t P = static_cast<std::int64_t>(H) * W;
    const std::int64_t oplane = static_cast<std::int64_t>(Co) * Ho * Wo;
    std::vector<double> cols(K * P);
    for (int n = 0; n < N; ++n) {
        // cols = W_mat^T (K x Ci) . x_n (Ci x P)
        gemm(true, false, static_cast<int>(K), static_cast<int>(P), Ci, 1.0, w.data(),
             static_cast<int>(K), x.data() + static_cast<std::int64_t>(n) * Ci * P,
             static_cast<int>(P), 0.0, cols.data(), static_cast<int>(P));
        col2im_add(cols.data(), g, out.data() + n * oplane);
    }
    if (b.defined()) {
        double* po = out.data();
        const std::int64_t hw = static_cast<std::int64_t>(Ho) * Wo;
        for (int n = 0; n < N; ++n)
            for (int co = 0; co < Co; ++co) {
                double bias = b.data()[co];
                double* plane = po + (static_cast<std::int64_t>(n) * Co + co) * hw;
                for (std::int64_t i = 0; i < hw; ++i) plane[i] += bias;
            }
    }

    if (out.requires_grad()) {
        Node* xn = x.node();
        Node* wn = w.node();
        Node* bn = b.defined() ? b.node() : nullptr;
        const bool xreq = xn->requires_grad;
        const int Ci_ = Ci;
        out.node()->backward_fn = [xn, wn, bn, g, N, Ci_, K, P, Ho, Wo, xreq](Node& o) {
            xn->ensure_grad();
            wn->ensure_grad();
            if (bn) bn->ensure_grad();
            const std::int64_t oplane = static_cast<std::int64_t>(g.C) * Ho * Wo;
            std::vector<double> cols(K * P);
            for (int n = 0; n < N; ++n) {
                const double* dy = o.grad.data() + n * oplane;
                im2col(dy, g, cols.data());
                if (xreq)
                    // dX += W_mat (Ci x K) . cols (K x P)
                    gemm(false, false, Ci_, static_cast<int>(P), static_cast<int>(K), 1.0,
                         wn->val.data(), static_cast<int>(K), cols.data(),
                         static_cast<int>(P), 1.0,
                         xn->grad.data() + static_cast<std::int64_t>(n) * Ci_ * P,
                         static_cast<int>(P));
                // dW += x_n (Ci x P) . cols^T (P x K)
                gemm(false, true, Ci_, static_cast<int>(K), static_cast<int>(P), 1.0,
                     xn->val.data() + static_cast<std::int64_t>(n) * Ci_ * P,
                     static_cast<int>(P), cols.data(), static_cast<int>(P), 1.0,
                     wn->grad.data(), static_cast<int>(K));
                if (bn) {
                    const std::int64_t hw = static_cast<std::int64_t>(Ho) * Wo;
                    for (int co = 0; co < g.C; ++co) {
                        double s = 0.0;
                        const double* row = dy + static_cast<std::int64_t>(co) * hw;
                        for (std::int64_t i = 0; i < hw; ++i) s += row[i];
                        bn->grad[co] += s;
                    }
                }
            }
        };
    }
    return out;
}

}  // namespace rlk::nn
