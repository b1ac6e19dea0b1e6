#include "rlk/nn/loss.hpp"

#include <algorithm>
#include <cmath>

namespace rlk::nn {

Tensor loss_bce(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape())
        throw ShapeError("loss_bce: shape mismatch " + pred.shape().str() + " vs " +
                         target.shape().str());
    Tensor p = clamp(pred, 1e-7, 1.0 - 1e-7);
    Tensor term = target * log(p) + add_const(neg(target), 1.0) * log(add_const(neg(p), 1.0));
    return neg(mean(term));
}

Tensor loss_l1_grad(const Tensor& pred, const Tensor& target, double lambda_grad) {
    if (pred.shape() != target.shape())
        throw ShapeError("loss_l1_grad: shape mismatch " + pred.shape().str() + " vs " +
                         target.shape().str());
    Tensor loss = mean(abs(pred - target));
    if (lambda_grad != 0.0) {
        Tensor gx = mean(abs(forward_diff_x(pred) - forward_diff_x(target)));
        Tensor gy = mean(abs(forward_diff_y(pred) - forward_diff_y(target)));
        loss = loss + scale(gx + gy, lambda_grad);
    }
    return loss;
}

void AdamState::init(const std::vector<Tensor>& params) {
    m.clear();
    v.clear();
    for (const Tensor& p : params) {
        m.emplace_back(p.numel(), 0.0);
        v.emplace_back(p.numel(), 0.0);
    }
    step = 0;
}

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
    if (state.m.size() != params.size()) throw TrainingError("adam state not initialized");
    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = params[k];
        double* val = p.data();
        double* g = p.grad();
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::int64_t i = 0; i < p.numel(); ++i) {
            if (!std::isfinite(g[i]))
                throw TrainingError("non-finite gradient in parameter tensor " +
                                    std::to_string(k) + " at element " + std::to_string(i));
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            val[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

double grad_check(const std::function<Tensor()>& build, std::vector<Tensor> inputs,
                  double fd_step) {
    for (Tensor& t : inputs) {
        t.node()->requires_grad = true;
        t.zero_grad();
    }
    Tensor loss = build();
    loss.backward();

    std::vector<std::vector<double>> analytic;
    for (Tensor& t : inputs) {
        const double* g = t.grad();
        analytic.emplace_back(g, g + t.numel());
    }

    double max_rel = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        Tensor& t = inputs[k];
        double* val = t.data();
        for (std::int64_t i = 0; i < t.numel(); ++i) {
            double orig = val[i];
            val[i] = orig + fd_step;
            double fp = build().value();
            val[i] = orig - fd_step;
            double fm = build().value();
            val[i] = orig;
            double numeric = (fp - fm) / (2.0 * fd_step);
            double a = analytic[k][i];
            double rel = std::abs(a - numeric) /
                         std::max({1.0, std::abs(a), std::abs(numeric)});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace rlk::nn
