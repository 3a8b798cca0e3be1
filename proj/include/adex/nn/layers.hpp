#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "adex/nn/gemm.hpp"
#include "adex/nn/tensor.hpp"
#include "adex/parallel.hpp"
#include "adex/rng.hpp"

namespace adex::nn {

// Non-trainable per-layer state (batchnorm running statistics).
template <class S>
struct Buffer {
    std::string name;
    std::vector<S> value;
};

// One stage of a sequential model over [N, C, L] activations. A layer owns
// its parameters and whatever it cached during the last forward pass; one
// trainer drives forward/backward exclusively.
template <class S>
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor<S> forward(const Tensor<S>& x, bool training) = 0;
    virtual Tensor<S> backward(const Tensor<S>& dy) = 0;
    virtual void collect_params(std::vector<Param<S>*>& out) { (void)out; }
    virtual void collect_buffers(std::vector<Buffer<S>*>& out) { (void)out; }
    virtual const std::string& name() const = 0;
    // whether this layer corresponds to a row of the architecture table
    virtual bool shape_probe_point() const { return true; }
};

// 1-D cross-correlation, stride 1, zero "same" padding (odd kernel).
// Lowered to im2col + GEMM; the column buffer from the forward pass is kept
// for the weight-gradient GEMM.
template <class S>
class Conv1d : public Layer<S> {
public:
    Conv1d(std::string name, int in_ch, int out_ch, int kernel, std::uint64_t init_seed)
        : name_(std::move(name)), in_ch_(in_ch), out_ch_(out_ch), k_(kernel) {
        if (kernel % 2 == 0) throw ShapeError(name_ + ": kernel size must be odd");
        w_.init(name_ + ".w", {out_ch, in_ch, kernel});
        b_.init(name_ + ".b", {out_ch});
        // uniform +-1/sqrt(fan_in) for weights and biases; the larger
        // He bound compounds through the unnormalized deep layers and
        // reliably kills the single-channel bottleneck
        Rng rng(init_seed);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch) * kernel);
        for (auto& v : w_.value) v = static_cast<S>(rng.uniform(-bound, bound));
        for (auto& v : b_.value) v = static_cast<S>(rng.uniform(-bound, bound));
    }

    Tensor<S> forward(const Tensor<S>& x, bool training) override {
        if (x.rank() != 3 || x.dim(1) != in_ch_)
            throw ShapeError(name_ + ": input must be [N," + std::to_string(in_ch_) + ",L]");
        (void)training;
        const long N = x.dim(0), L = x.dim(2);
        const long K = static_cast<long>(in_ch_) * k_;
        const int p = (k_ - 1) / 2;
        N_ = N;
        L_ = L;

        cols_.assign(static_cast<std::size_t>(N) * K * L, S(0));
        Tensor<S> y({N, out_ch_, L});
        parallel_for(N, [&](long n) {
            S* cols = cols_.data() + static_cast<std::size_t>(n) * K * L;
            for (int ci = 0; ci < in_ch_; ++ci) {
                const S* xr = x.row(n, ci);
                for (int t = 0; t < k_; ++t) {
                    // cols[ci*k + t][l] = x[ci][l + t - p], zero outside
                    S* row = cols + (static_cast<long>(ci) * k_ + t) * L;
                    const long lo = std::max<long>(0, p - t);
                    const long hi = std::min<long>(L, L + p - t);
                    for (long l = lo; l < hi; ++l) row[l] = xr[l + t - p];
                }
            }
            S* yn = y.row(n, 0);
            for (int co = 0; co < out_ch_; ++co) {
                const S bias = b_.value[co];
                S* yr = yn + static_cast<long>(co) * L;
                for (long l = 0; l < L; ++l) yr[l] = bias;
            }
            detail::gemm_acc<S>(out_ch_, L, K, w_.value.data(), cols, yn);
        });
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) override {
        const long N = N_, L = L_;
        dy.require_shape({N, out_ch_, L}, name_ + " backward");
        const long K = static_cast<long>(in_ch_) * k_;
        const int p = (k_ - 1) / 2;

        // transposed views used by the two GEMMs
        std::vector<S> wt(static_cast<std::size_t>(K) * out_ch_);
        for (int co = 0; co < out_ch_; ++co)
            for (long kk = 0; kk < K; ++kk) wt[kk * out_ch_ + co] = w_.value[co * K + kk];
        std::vector<S> dyt(static_cast<std::size_t>(N) * L * out_ch_);
        parallel_for(N, [&](long n) {
            S* t = dyt.data() + static_cast<std::size_t>(n) * L * out_ch_;
            for (int co = 0; co < out_ch_; ++co) {
                const S* dyr = dy.row(n, co);
                for (long l = 0; l < L; ++l) t[l * out_ch_ + co] = dyr[l];
            }
        });

        // input gradient: dcols = W^T * dY, then fold columns back
        Tensor<S> dx({N, in_ch_, L});
        parallel_for(N, [&](long n) {
            std::vector<S> dcols(static_cast<std::size_t>(K) * L, S(0));
            detail::gemm_acc<S>(K, L, out_ch_, wt.data(), dy.row(n, 0), dcols.data());
            for (int ci = 0; ci < in_ch_; ++ci) {
                S* dxr = dx.row(n, ci);
                for (int t = 0; t < k_; ++t) {
                    const S* row = dcols.data() + (static_cast<long>(ci) * k_ + t) * L;
                    const long lo = std::max<long>(0, p - t);
                    const long hi = std::min<long>(L, L + p - t);
                    for (long l = lo; l < hi; ++l) dxr[l + t - p] += row[l];
                }
            }
        });

        // weight gradient, transposed: dW^T[kk, co] = sum_n cols_n * dYT_n.
        // Threads own disjoint kk ranges and sweep samples in order, so the
        // reduction order is fixed regardless of thread count.
        std::vector<S> dwt(static_cast<std::size_t>(K) * out_ch_, S(0));
        parallel_for_chunks(K, [&](long k0, long k1) {
            for (long n = 0; n < N; ++n)
                detail::gemm_acc<S>(k1 - k0, out_ch_, L,
                                    cols_.data() + static_cast<std::size_t>(n) * K * L + k0 * L,
                                    dyt.data() + static_cast<std::size_t>(n) * L * out_ch_,
                                    dwt.data() + k0 * out_ch_);
        });
        for (int co = 0; co < out_ch_; ++co)
            for (long kk = 0; kk < K; ++kk) w_.grad[co * K + kk] += dwt[kk * out_ch_ + co];

        parallel_for(out_ch_, [&](long co) {
            S db = 0;
            for (long n = 0; n < N; ++n) {
                const S* dyr = dy.row(n, co);
                for (long l = 0; l < L; ++l) db += dyr[l];
            }
            b_.grad[co] += db;
        });
        return dx;
    }

    void collect_params(std::vector<Param<S>*>& out) override {
        out.push_back(&w_);
        out.push_back(&b_);
    }
    const std::string& name() const override { return name_; }

    int in_channels() const { return in_ch_; }
    int out_channels() const { return out_ch_; }
    int kernel() const { return k_; }
    Param<S>& weight() { return w_; }
    Param<S>& bias() { return b_; }

private:
    std::string name_;
    int in_ch_, out_ch_, k_;
    Param<S> w_, b_;
    std::vector<S> cols_;  // im2col buffer from the last forward, [N, K, L]
    long N_ = 0, L_ = 0;
};

template <class S>
class Relu : public Layer<S> {
public:
    explicit Relu(std::string name) : name_(std::move(name)) {}

    Tensor<S> forward(const Tensor<S>& x, bool) override {
        x_ = x;
        Tensor<S> y = x;
        for (auto& v : y.data)
            if (v < S(0)) v = S(0);
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) override {
        Tensor<S> dx = dy;
        for (std::size_t i = 0; i < dx.data.size(); ++i)
            if (x_.data[i] <= S(0)) dx.data[i] = S(0);
        return dx;
    }

    const std::string& name() const override { return name_; }
    bool shape_probe_point() const override { return false; }  // fused into the conv row

private:
    std::string name_;
    Tensor<S> x_;
};

// Per-channel normalization over (N, L) with learned scale/shift; eval mode
// applies the running statistics as a fixed affine map.
template <class S>
class BatchNorm1d : public Layer<S> {
public:
    BatchNorm1d(std::string name, int channels, double momentum = 0.1, double eps = 1e-5)
        : name_(std::move(name)), C_(channels), momentum_(momentum), eps_(eps) {
        gamma_.init(name_ + ".gamma", {channels});
        beta_.init(name_ + ".beta", {channels});
        std::fill(gamma_.value.begin(), gamma_.value.end(), S(1));
        running_mean_.name = name_ + ".running_mean";
        running_mean_.value.assign(channels, S(0));
        running_var_.name = name_ + ".running_var";
        running_var_.value.assign(channels, S(1));
    }

    Tensor<S> forward(const Tensor<S>& x, bool training) override {
        if (x.rank() != 3 || x.dim(1) != C_)
            throw ShapeError(name_ + ": input must be [N," + std::to_string(C_) + ",L]");
        const long N = x.dim(0), L = x.dim(2);
        Tensor<S> y({N, C_, L});
        training_ = training;
        if (training) {
            if (N < 2) throw ShapeError(name_ + ": training-mode batchnorm needs batch >= 2");
            N_ = N;
            L_ = L;
            xhat_ = Tensor<S>({N, C_, L});
            mean_.assign(C_, S(0));
            inv_std_.assign(C_, S(0));
            const double M = static_cast<double>(N) * L;
            parallel_for(C_, [&](long c) {
                double sum = 0, sq = 0;
                for (long n = 0; n < N; ++n) {
                    const S* xr = x.row(n, c);
                    for (long l = 0; l < L; ++l) {
                        sum += xr[l];
                        sq += static_cast<double>(xr[l]) * xr[l];
                    }
                }
                const double mu = sum / M;
                double var = sq / M - mu * mu;
                if (var < 0) var = 0;
                mean_[c] = static_cast<S>(mu);
                const double istd = 1.0 / std::sqrt(var + eps_);
                inv_std_[c] = static_cast<S>(istd);
                const S g = gamma_.value[c], b = beta_.value[c];
                for (long n = 0; n < N; ++n) {
                    const S* xr = x.row(n, c);
                    S* hr = xhat_.row(n, c);
                    S* yr = y.row(n, c);
                    for (long l = 0; l < L; ++l) {
                        const S h = static_cast<S>((xr[l] - mu) * istd);
                        hr[l] = h;
                        yr[l] = g * h + b;
                    }
                }
                const double unbiased = (M > 1) ? var * M / (M - 1) : var;
                running_mean_.value[c] =
                    static_cast<S>((1 - momentum_) * running_mean_.value[c] + momentum_ * mu);
                running_var_.value[c] =
                    static_cast<S>((1 - momentum_) * running_var_.value[c] + momentum_ * unbiased);
            });
        } else {
            parallel_for(C_, [&](long c) {
                const double mu = running_mean_.value[c];
                const double istd = 1.0 / std::sqrt(static_cast<double>(running_var_.value[c]) + eps_);
                const S g = gamma_.value[c], b = beta_.value[c];
                for (long n = 0; n < N; ++n) {
                    const S* xr = x.row(n, c);
                    S* yr = y.row(n, c);
                    for (long l = 0; l < L; ++l)
                        yr[l] = static_cast<S>(g * ((xr[l] - mu) * istd) + b);
                }
            });
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) override {
        if (!training_) throw ShapeError(name_ + ": backward requires a training-mode forward");
        const long N = N_, L = L_;
        dy.require_shape({N, C_, L}, name_ + " backward");
        Tensor<S> dx({N, C_, L});
        const double M = static_cast<double>(N) * L;
        parallel_for(C_, [&](long c) {
            const double istd = inv_std_[c];
            const S g = gamma_.value[c];
            double sum_dy = 0, sum_dy_h = 0;
            for (long n = 0; n < N; ++n) {
                const S* dyr = dy.row(n, c);
                const S* hr = xhat_.row(n, c);
                for (long l = 0; l < L; ++l) {
                    sum_dy += dyr[l];
                    sum_dy_h += static_cast<double>(dyr[l]) * hr[l];
                }
            }
            gamma_.grad[c] += static_cast<S>(sum_dy_h);
            beta_.grad[c] += static_cast<S>(sum_dy);
            // dx = (g*istd/M) * (M*dy - sum(dy) - xhat * sum(dy*xhat))
            const double k = static_cast<double>(g) * istd / M;
            for (long n = 0; n < N; ++n) {
                const S* dyr = dy.row(n, c);
                const S* hr = xhat_.row(n, c);
                S* dxr = dx.row(n, c);
                for (long l = 0; l < L; ++l)
                    dxr[l] = static_cast<S>(k * (M * dyr[l] - sum_dy - hr[l] * sum_dy_h));
            }
        });
        return dx;
    }

    void collect_params(std::vector<Param<S>*>& out) override {
        out.push_back(&gamma_);
        out.push_back(&beta_);
    }
    void collect_buffers(std::vector<Buffer<S>*>& out) override {
        out.push_back(&running_mean_);
        out.push_back(&running_var_);
    }
    const std::string& name() const override { return name_; }

private:
    std::string name_;
    int C_;
    double momentum_, eps_;
    Param<S> gamma_, beta_;
    Buffer<S> running_mean_, running_var_;
    Tensor<S> xhat_;
    std::vector<S> mean_, inv_std_;
    long N_ = 0, L_ = 0;
    bool training_ = false;
};

// Max pooling, kernel 2 stride 2; leftmost element wins ties.
template <class S>
class MaxPool1d : public Layer<S> {
public:
    explicit MaxPool1d(std::string name) : name_(std::move(name)) {}

    Tensor<S> forward(const Tensor<S>& x, bool) override {
        const long N = x.dim(0), C = x.dim(1), L = x.dim(2);
        if (L % 2 != 0) throw ShapeError(name_ + ": length must be even");
        in_shape_ = x.shape;
        Tensor<S> y({N, C, L / 2});
        argmax_.resize(static_cast<std::size_t>(N) * C * (L / 2));
        parallel_for(N * C, [&](long nc) {
            const S* xr = x.ptr() + nc * L;
            S* yr = y.ptr() + nc * (L / 2);
            std::uint8_t* am = argmax_.data() + nc * (L / 2);
            for (long i = 0; i < L / 2; ++i) {
                const S a = xr[2 * i], b = xr[2 * i + 1];
                const bool right = b > a;
                yr[i] = right ? b : a;
                am[i] = right ? 1 : 0;
            }
        });
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) override {
        const long N = in_shape_[0], C = in_shape_[1], L = in_shape_[2];
        dy.require_shape({N, C, L / 2}, name_ + " backward");
        Tensor<S> dx(in_shape_);
        parallel_for(N * C, [&](long nc) {
            const S* dyr = dy.ptr() + nc * (L / 2);
            S* dxr = dx.ptr() + nc * L;
            const std::uint8_t* am = argmax_.data() + nc * (L / 2);
            for (long i = 0; i < L / 2; ++i) dxr[2 * i + am[i]] = dyr[i];
        });
        return dx;
    }

    const std::string& name() const override { return name_; }

private:
    std::string name_;
    std::vector<long> in_shape_;
    std::vector<std::uint8_t> argmax_;
};

// Nearest-neighbor upsampling by 2: every sample is duplicated.
template <class S>
class Upsample2 : public Layer<S> {
public:
    explicit Upsample2(std::string name) : name_(std::move(name)) {}

    Tensor<S> forward(const Tensor<S>& x, bool) override {
        const long N = x.dim(0), C = x.dim(1), L = x.dim(2);
        in_shape_ = x.shape;
        Tensor<S> y({N, C, 2 * L});
        parallel_for(N * C, [&](long nc) {
            const S* xr = x.ptr() + nc * L;
            S* yr = y.ptr() + nc * 2 * L;
            for (long i = 0; i < L; ++i) {
                yr[2 * i] = xr[i];
                yr[2 * i + 1] = xr[i];
            }
        });
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) override {
        const long N = in_shape_[0], C = in_shape_[1], L = in_shape_[2];
        dy.require_shape({N, C, 2 * L}, name_ + " backward");
        Tensor<S> dx(in_shape_);
        parallel_for(N * C, [&](long nc) {
            const S* dyr = dy.ptr() + nc * 2 * L;
            S* dxr = dx.ptr() + nc * L;
            for (long i = 0; i < L; ++i) dxr[i] = dyr[2 * i] + dyr[2 * i + 1];
        });
        return dx;
    }

    const std::string& name() const override { return name_; }

private:
    std::string name_;
    std::vector<long> in_shape_;
};

template <class S>
class Sequential {
public:
    void add(std::unique_ptr<Layer<S>> layer) { layers_.push_back(std::move(layer)); }

    Tensor<S> forward(const Tensor<S>& x, bool training) {
        Tensor<S> cur = x;
        for (auto& l : layers_) cur = l->forward(cur, training);
        return cur;
    }

    Tensor<S> backward(const Tensor<S>& dy) {
        Tensor<S> cur = dy;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
        return cur;
    }

    std::vector<Param<S>*> params() {
        std::vector<Param<S>*> out;
        for (auto& l : layers_) l->collect_params(out);
        return out;
    }
    std::vector<Buffer<S>*> buffers() {
        std::vector<Buffer<S>*> out;
        for (auto& l : layers_) l->collect_buffers(out);
        return out;
    }

    std::vector<Layer<S>*> layers() {
        std::vector<Layer<S>*> out;
        for (auto& l : layers_) out.push_back(l.get());
        return out;
    }
    std::size_t size() const { return layers_.size(); }

private:
    std::vector<std::unique_ptr<Layer<S>>> layers_;
};

}  // namespace adex::nn
