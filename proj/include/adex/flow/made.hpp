#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "adex/nn/tensor.hpp"
#include "adex/parallel.hpp"
#include "adex/rng.hpp"

namespace adex::flow {

using adex::nn::Param;
using adex::nn::Tensor;

// Dense layer with a fixed binary connectivity mask. Gradients of masked
// weights are zeroed, so masked entries stay at their zero initialization.
template <class S>
class MaskedLinear {
public:
    MaskedLinear() = default;
    MaskedLinear(std::string name, int in, int out, std::vector<std::uint8_t> mask,
                 std::uint64_t init_seed, bool zero_init)
        : name_(std::move(name)), in_(in), out_(out), mask_(std::move(mask)) {
        w_.init(name_ + ".w", {out, in});
        b_.init(name_ + ".b", {out});
        if (!zero_init) {
            Rng rng(init_seed);
            const double bound = std::sqrt(6.0 / in);
            for (std::size_t i = 0; i < w_.value.size(); ++i)
                w_.value[i] = mask_[i] ? static_cast<S>(rng.uniform(-bound, bound)) : S(0);
        }
    }

    // X: [R, in] -> [R, out]. The masked weight matrix is materialized per
    // pass so masked coordinates are inert no matter what the raw values
    // hold.
    Tensor<S> forward(const Tensor<S>& x) {
        const long R = x.dim(0);
        refresh_masked_weights();
        Tensor<S> y({R, out_});
        parallel_for_chunks(R, [&](long rb, long re) {
            for (long r = rb; r < re; ++r) {
                const S* xr = x.ptr() + r * in_;
                S* yr = y.ptr() + r * out_;
                for (int o = 0; o < out_; ++o) {
                    const S* wr = wm_.data() + static_cast<long>(o) * in_;
                    S acc = b_.value[o];
                    for (int i = 0; i < in_; ++i) acc += wr[i] * xr[i];
                    yr[o] = acc;
                }
            }
        });
        return y;
    }

    // Accumulates parameter gradients; returns gradient wrt the input.
    Tensor<S> backward(const Tensor<S>& x, const Tensor<S>& dy) {
        const long R = x.dim(0);
        parallel_for_chunks(out_, [&](long ob, long oe) {
            for (long o = ob; o < oe; ++o) {
                S* dwr = w_.grad.data() + o * in_;
                const std::uint8_t* mr = mask_.data() + o * in_;
                S db = 0;
                for (long r = 0; r < R; ++r) {
                    const S d = dy.ptr()[r * out_ + o];
                    db += d;
                    const S* xr = x.ptr() + r * in_;
                    for (int i = 0; i < in_; ++i) dwr[i] += d * xr[i];
                }
                for (int i = 0; i < in_; ++i)
                    if (!mr[i]) dwr[i] = S(0);
                b_.grad[o] += db;
            }
        });
        Tensor<S> dx({R, in_});
        parallel_for_chunks(R, [&](long rb, long re) {
            for (long r = rb; r < re; ++r) {
                const S* dyr = dy.ptr() + r * out_;
                S* dxr = dx.ptr() + r * in_;
                for (int o = 0; o < out_; ++o) {
                    const S d = dyr[o];
                    const S* wr = wm_.data() + static_cast<long>(o) * in_;
                    for (int i = 0; i < in_; ++i) dxr[i] += d * wr[i];
                }
            }
        });
        return dx;
    }

    void apply_mask() {
        for (std::size_t i = 0; i < w_.value.size(); ++i)
            if (!mask_[i]) w_.value[i] = S(0);
    }

    void refresh_masked_weights() {
        wm_.resize(w_.value.size());
        for (std::size_t i = 0; i < w_.value.size(); ++i)
            wm_[i] = mask_[i] ? w_.value[i] : S(0);
    }

    Param<S>& weight() { return w_; }
    Param<S>& bias() { return b_; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    std::vector<std::uint8_t>& mutable_mask() { return mask_; }
    int in_features() const { return in_; }
    int out_features() const { return out_; }

private:
    std::string name_;
    int in_ = 0, out_ = 0;
    Param<S> w_, b_;
    std::vector<std::uint8_t> mask_;
    std::vector<S> wm_;  // mask-applied weights for the current pass
};

// Masked autoregressive conditioner producing a per-dimension shift mu_i and
// log-scale alpha_i from (theta, context).
//
// Degree scheme: theta input j carries degree j+1; hidden units cycle
// degrees 0..D-1 (degree-0 units read only the context and feed every
// output); context columns are unrestricted. The output pair (mu_i, alpha_i)
// connects to hidden degrees < i+1 strictly, so it has no computational path
// from theta_j with j >= i.
template <class S>
class MadeBlock {
public:
    MadeBlock() = default;
    MadeBlock(std::string name, int dim, int context_dim, int hidden, int n_hidden_layers,
              std::uint64_t init_seed)
        : name_(std::move(name)), dim_(dim), ctx_(context_dim), hidden_(hidden) {
        if (n_hidden_layers < 1) throw ShapeError("MADE needs at least one hidden layer");
        std::vector<int> hid_deg(hidden);
        for (int k = 0; k < hidden; ++k) hid_deg[k] = k % dim;

        // input layer: [theta (deg j+1) | context (free)]
        std::vector<std::uint8_t> m0(static_cast<std::size_t>(hidden) * (dim + ctx_));
        for (int k = 0; k < hidden; ++k) {
            for (int j = 0; j < dim; ++j) m0[k * (dim + ctx_) + j] = hid_deg[k] >= j + 1 ? 1 : 0;
            for (int j = 0; j < ctx_; ++j) m0[k * (dim + ctx_) + dim + j] = 1;
        }
        layers_.emplace_back(name_ + ".l0", dim + ctx_, hidden, std::move(m0),
                             Rng::split(init_seed, 0), false);

        for (int h = 1; h < n_hidden_layers; ++h) {
            std::vector<std::uint8_t> mh(static_cast<std::size_t>(hidden) * hidden);
            for (int k2 = 0; k2 < hidden; ++k2)
                for (int k1 = 0; k1 < hidden; ++k1)
                    mh[k2 * hidden + k1] = hid_deg[k2] >= hid_deg[k1] ? 1 : 0;
            layers_.emplace_back(name_ + ".l" + std::to_string(h), hidden, hidden, std::move(mh),
                                 Rng::split(init_seed, static_cast<std::uint64_t>(h)), false);
        }

        // output layer: rows [mu_1..mu_D, alpha_1..alpha_D], zero-initialized
        // so the flow starts as the identity
        std::vector<std::uint8_t> mo(static_cast<std::size_t>(2 * dim) * hidden);
        for (int i = 0; i < 2 * dim; ++i) {
            const int deg = (i % dim) + 1;
            for (int k = 0; k < hidden; ++k) mo[i * hidden + k] = deg > hid_deg[k] ? 1 : 0;
        }
        layers_.emplace_back(name_ + ".out", hidden, 2 * dim, std::move(mo), 0, true);
    }

    // theta: [R, dim], context: [R, ctx] -> mu, alpha: [R, dim].
    // Caches activations for one backward pass.
    void forward(const Tensor<S>& theta, const Tensor<S>& context, Tensor<S>& mu,
                 Tensor<S>& alpha) {
        const long R = theta.dim(0);
        acts_.clear();
        Tensor<S> x({R, dim_ + ctx_});
        for (long r = 0; r < R; ++r) {
            std::copy_n(theta.ptr() + r * dim_, dim_, x.ptr() + r * (dim_ + ctx_));
            if (ctx_ > 0) std::copy_n(context.ptr() + r * ctx_, ctx_, x.ptr() + r * (dim_ + ctx_) + dim_);
        }
        acts_.push_back(std::move(x));
        for (std::size_t li = 0; li + 1 < layers_.size(); ++li) {
            Tensor<S> h = layers_[li].forward(acts_.back());
            relu_masks_.resize(layers_.size() - 1);
            relu_masks_[li].assign(h.data.size(), 0);
            for (std::size_t i = 0; i < h.data.size(); ++i) {
                if (h.data[i] > S(0))
                    relu_masks_[li][i] = 1;
                else
                    h.data[i] = S(0);
            }
            acts_.push_back(std::move(h));
        }
        Tensor<S> out = layers_.back().forward(acts_.back());
        mu = Tensor<S>({R, dim_});
        alpha = Tensor<S>({R, dim_});
        for (long r = 0; r < R; ++r) {
            std::copy_n(out.ptr() + r * 2 * dim_, dim_, mu.ptr() + r * dim_);
            std::copy_n(out.ptr() + r * 2 * dim_ + dim_, dim_, alpha.ptr() + r * dim_);
        }
    }

    // Backpropagates (dmu, dalpha); returns (dtheta, dcontext).
    void backward(const Tensor<S>& dmu, const Tensor<S>& dalpha, Tensor<S>& dtheta,
                  Tensor<S>& dcontext) {
        const long R = dmu.dim(0);
        Tensor<S> dout({R, 2 * dim_});
        for (long r = 0; r < R; ++r) {
            std::copy_n(dmu.ptr() + r * dim_, dim_, dout.ptr() + r * 2 * dim_);
            std::copy_n(dalpha.ptr() + r * dim_, dim_, dout.ptr() + r * 2 * dim_ + dim_);
        }
        Tensor<S> d = layers_.back().backward(acts_.back(), dout);
        for (std::size_t li = layers_.size() - 1; li-- > 0;) {
            for (std::size_t i = 0; i < d.data.size(); ++i)
                if (!relu_masks_[li][i]) d.data[i] = S(0);
            d = layers_[li].backward(acts_[li], d);
        }
        dtheta = Tensor<S>({R, dim_});
        dcontext = Tensor<S>({R, ctx_});
        for (long r = 0; r < R; ++r) {
            std::copy_n(d.ptr() + r * (dim_ + ctx_), dim_, dtheta.ptr() + r * dim_);
            if (ctx_ > 0)
                std::copy_n(d.ptr() + r * (dim_ + ctx_) + dim_, ctx_, dcontext.ptr() + r * ctx_);
        }
    }

    std::vector<Param<S>*> params() {
        std::vector<Param<S>*> out;
        for (auto& l : layers_) {
            out.push_back(&l.weight());
            out.push_back(&l.bias());
        }
        return out;
    }

    std::vector<MaskedLinear<S>>& layers() { return layers_; }
    int dim() const { return dim_; }
    int context_dim() const { return ctx_; }

private:
    std::string name_;
    int dim_ = 0, ctx_ = 0, hidden_ = 0;
    std::vector<MaskedLinear<S>> layers_;
    std::vector<Tensor<S>> acts_;                       // input + post-relu hiddens
    std::vector<std::vector<std::uint8_t>> relu_masks_;
};

}  // namespace adex::flow
