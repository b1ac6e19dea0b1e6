#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "rlk/nn/tensor.hpp"

namespace rlk::nn {

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Pixel-wise binary cross entropy; predictions clamped to [1e-7, 1-1e-7].
Tensor loss_bce(const Tensor& pred, const Tensor& target);

// L1 on values plus lambda * L1 on forward-difference image gradients.
Tensor loss_l1_grad(const Tensor& pred, const Tensor& target, double lambda_grad);

struct AdamState {
    std::vector<std::vector<double>> m, v;
    long step = 0;

    void init(const std::vector<Tensor>& params);
};

// Standard Adam (beta1 0.9, beta2 0.999, eps 1e-8). Throws TrainingError on
// non-finite gradients.
void adam_step(std::vector<Tensor>& params, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Central finite differences against analytic gradients for every element
// of every input; returns the max relative error. build() must reconstruct
// the scalar graph from the inputs' current values.
double grad_check(const std::function<Tensor()>& build, std::vector<Tensor> inputs,
                  double fd_step = 1e-3);

}  // namespace rlk::nn
