#pragma once

#include "adex/nn/tensor.hpp"

namespace adex::nn {

template <class S>
struct LossResult {
    double loss;
    Tensor<S> grad;
};

// Mean over all elements of the squared difference; gradient wrt prediction.
template <class S>
LossResult<S> mse_loss(const Tensor<S>& prediction, const Tensor<S>& target) {
    if (prediction.shape != target.shape) throw ShapeError("mse_loss: shape mismatch");
    const long n = prediction.numel();
    double acc = 0;
    Tensor<S> grad(prediction.shape);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (long i = 0; i < n; ++i) {
        const double d = static_cast<double>(prediction.data[i]) - target.data[i];
        acc += d * d;
        grad.data[i] = static_cast<S>(2.0 * d * inv_n);
    }
    return {acc * inv_n, std::move(grad)};
}

}  // namespace adex::nn
