#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "adex/flow/made.hpp"
#include "adex/nn/checkpoint.hpp"

namespace adex::flow {

using adex::nn::Checkpoint;

struct MafConfig {
    int dim = 4;
    int context_dim = 32;
    int n_transforms = 5;
    int hidden = 50;
    int hidden_layers = 2;
    double alpha_clamp = 7.0;
};

struct AutoregressionViolation {
    int transform, output_dim, input_dim;  // output i depends on input j >= i
};

// Conditional masked autoregressive flow: per transform
// z_i = (x_i - mu_i(x_<i, c)) * exp(-alpha_i(x_<i, c)), standard-normal base,
// reverse permutation between consecutive transforms, optional input
// standardization in front.
template <class S>
class Maf {
public:
    Maf() = default;
    explicit Maf(const MafConfig& cfg, std::uint64_t init_seed = 0) : cfg_(cfg) {
        std_mean_.assign(cfg.dim, S(0));
        std_scale_.assign(cfg.dim, S(1));
        for (int t = 0; t < cfg.n_transforms; ++t) {
            blocks_.emplace_back("flow.t" + std::to_string(t), cfg.dim, cfg.context_dim, cfg.hidden,
                                 cfg.hidden_layers, Rng::split(init_seed, static_cast<std::uint64_t>(t)));
            std::vector<int> perm(cfg.dim);
            std::iota(perm.begin(), perm.end(), 0);
            if (t > 0) std::reverse(perm.begin(), perm.end());
            perms_.push_back(std::move(perm));
        }
    }

    const MafConfig& config() const { return cfg_; }

    // Frozen input standardization (set from the first round's parameters).
    void set_standardization(const std::vector<S>& mean, const std::vector<S>& scale) {
        if (static_cast<int>(mean.size()) != cfg_.dim || static_cast<int>(scale.size()) != cfg_.dim)
            throw ShapeError("standardization size mismatch");
        for (S s : scale)
            if (!(s > S(0))) throw RangeError("standardization scale must be positive");
        std_mean_ = mean;
        std_scale_ = scale;
    }
    const std::vector<S>& standardization_mean() const { return std_mean_; }
    const std::vector<S>& standardization_scale() const { return std_scale_; }

    // Conditional log density, batched: theta [R,D], context [R,ctx] -> [R].
    // Caches everything needed for exactly one backward() call.
    std::vector<double> log_prob(const Tensor<S>& theta, const Tensor<S>& context) {
        const long R = theta.dim(0);
        const int D = cfg_.dim;
        if (theta.dim(1) != D) throw ShapeError("log_prob: theta must be [R,dim]");
        if (context.dim(0) != R || context.dim(1) != cfg_.context_dim)
            throw ShapeError("log_prob: context must be [R,context_dim]");

        cache_.assign(static_cast<std::size_t>(cfg_.n_transforms), TransformCache{});

        double logdet_std = 0;
        for (int j = 0; j < D; ++j) logdet_std -= std::log(static_cast<double>(std_scale_[j]));

        Tensor<S> x({R, D});
        for (long r = 0; r < R; ++r)
            for (int j = 0; j < D; ++j)
                x.ptr()[r * D + j] =
                    (theta.ptr()[r * D + j] - std_mean_[j]) / std_scale_[j];

        std::vector<double> logdet(R, logdet_std);
        for (int t = 0; t < cfg_.n_transforms; ++t) {
            TransformCache& tc = cache_[t];
            tc.xp = Tensor<S>({R, D});
            const auto& perm = perms_[t];
            for (long r = 0; r < R; ++r)
                for (int j = 0; j < D; ++j) tc.xp.ptr()[r * D + j] = x.ptr()[r * D + perm[j]];

            blocks_[t].forward(tc.xp, context, tc.mu, tc.alpha);
            tc.clamp_pass.assign(static_cast<std::size_t>(R) * D, 1);
            tc.z = Tensor<S>({R, D});
            for (long r = 0; r < R; ++r) {
                for (int j = 0; j < D; ++j) {
                    const long i = r * D + j;
                    double a = tc.alpha.ptr()[i];
                    if (a > cfg_.alpha_clamp) {
                        a = cfg_.alpha_clamp;
                        tc.clamp_pass[i] = 0;
                    } else if (a < -cfg_.alpha_clamp) {
                        a = -cfg_.alpha_clamp;
                        tc.clamp_pass[i] = 0;
                    }
                    tc.alpha.ptr()[i] = static_cast<S>(a);
                    tc.z.ptr()[i] = static_cast<S>((tc.xp.ptr()[i] - tc.mu.ptr()[i]) * std::exp(-a));
                    logdet[r] -= a;
                }
            }
            for (long i = 0; i < R * D; ++i)
                if (!std::isfinite(static_cast<double>(tc.z.ptr()[i])))
                    throw NumericError("non-finite value in flow transform " + std::to_string(t));
            x = tc.z;
        }

        constexpr double kLog2Pi = 1.8378770664093454835606594728112;
        std::vector<double> out(R);
        for (long r = 0; r < R; ++r) {
            double q = 0;
            for (int j = 0; j < D; ++j) {
                const double z = x.ptr()[r * D + j];
                q += z * z;
            }
            out[r] = -0.5 * q - 0.5 * D * kLog2Pi + logdet[r];
        }
        return out;
    }

    // dlogp: per-row upstream gradient. Accumulates parameter gradients and
    // returns the gradient wrt the context. Valid once per log_prob call.
    Tensor<S> backward(const std::vector<double>& dlogp) {
        const int D = cfg_.dim;
        const long R = static_cast<long>(dlogp.size());
        if (cache_.empty()) throw ShapeError("flow backward without a preceding log_prob");

        Tensor<S> dctx({R, cfg_.context_dim});
        // d/dz of the base term
        Tensor<S> dz({R, D});
        const Tensor<S>& z_last = cache_.back().z;
        for (long r = 0; r < R; ++r)
            for (int j = 0; j < D; ++j)
                dz.ptr()[r * D + j] = static_cast<S>(-dlogp[r] * z_last.ptr()[r * D + j]);

        for (int t = cfg_.n_transforms - 1; t >= 0; --t) {
            TransformCache& tc = cache_[t];
            Tensor<S> dmu({R, D}), dalpha({R, D}), dxp({R, D});
            for (long r = 0; r < R; ++r) {
                for (int j = 0; j < D; ++j) {
                    const long i = r * D + j;
                    const S e = static_cast<S>(std::exp(-static_cast<double>(tc.alpha.ptr()[i])));
                    const S d = dz.ptr()[i];
                    dmu.ptr()[i] = -d * e;
                    dxp.ptr()[i] = d * e;
                    S da = -d * tc.z.ptr()[i] - static_cast<S>(dlogp[r]);  // z and logdet paths
                    dalpha.ptr()[i] = tc.clamp_pass[i] ? da : S(0);
                }
            }
            Tensor<S> dxp_made, dctx_t;
            blocks_[t].backward(dmu, dalpha, dxp_made, dctx_t);
            for (long i = 0; i < R * cfg_.context_dim; ++i) dctx.ptr()[i] += dctx_t.ptr()[i];

            Tensor<S> dx({R, D});
            const auto& perm = perms_[t];
            for (long r = 0; r < R; ++r)
                for (int j = 0; j < D; ++j)
                    dx.ptr()[r * D + perm[j]] = dxp.ptr()[r * D + j] + dxp_made.ptr()[r * D + j];
            dz = std::move(dx);
        }
        return dctx;
    }

    // Inverse sampling: base draws -> theta, sequential per dimension.
    // context may have 1 row (broadcast) or n rows.
    Tensor<S> sample(long n, const Tensor<S>& context, Rng& rng) {
        const int D = cfg_.dim;
        Tensor<S> ctx = broadcast_context(context, n);
        Tensor<S> z({n, D});
        for (long i = 0; i < n * D; ++i) z.ptr()[i] = static_cast<S>(rng.gaussian());
        return transform_from_base(z, ctx);
    }

    // Deterministic inverse pass used by both sampling and round-trip tests.
    Tensor<S> transform_from_base(const Tensor<S>& z_base, const Tensor<S>& context) {
        const int D = cfg_.dim;
        const long n = z_base.dim(0);
        Tensor<S> ctx = broadcast_context(context, n);
        Tensor<S> z = z_base;
        for (int t = cfg_.n_transforms - 1; t >= 0; --t) {
            Tensor<S> xp({n, D});
            Tensor<S> mu, alpha;
            for (int d = 0; d < D; ++d) {
                blocks_[t].forward(xp, ctx, mu, alpha);
                for (long r = 0; r < n; ++r) {
                    const long i = r * D + d;
                    double a = mu.ptr()[i];
                    double al = alpha.ptr()[i];
                    if (al > cfg_.alpha_clamp) al = cfg_.alpha_clamp;
                    if (al < -cfg_.alpha_clamp) al = -cfg_.alpha_clamp;
                    xp.ptr()[i] = static_cast<S>(a + std::exp(al) * z.ptr()[i]);
                }
            }
            Tensor<S> x({n, D});
            const auto& perm = perms_[t];
            for (long r = 0; r < n; ++r)
                for (int j = 0; j < D; ++j) x.ptr()[r * D + perm[j]] = xp.ptr()[r * D + j];
            z = std::move(x);
        }
        for (long r = 0; r < n; ++r)
            for (int j = 0; j < D; ++j)
                z.ptr()[r * D + j] = static_cast<S>(z.ptr()[r * D + j] * std_scale_[j] + std_mean_[j]);
        return z;
    }

    // Forward map theta -> base coordinates (no caching side effects kept).
    Tensor<S> transform_to_base(const Tensor<S>& theta, const Tensor<S>& context) {
        log_prob(theta, broadcast_context(context, theta.dim(0)));
        Tensor<S> z = cache_.back().z;
        cache_.clear();
        return z;
    }

    // Verifies the autoregressive property numerically: perturbing input j
    // of a transform must leave outputs (mu_i, alpha_i), i <= j, unchanged
    // to machine precision.
    std::vector<AutoregressionViolation> check_autoregressive(std::uint64_t seed = 7) {
        const int D = cfg_.dim;
        std::vector<AutoregressionViolation> violations;
        Rng rng(seed);
        for (int t = 0; t < cfg_.n_transforms; ++t) {
            Tensor<S> x({1, D}), ctx({1, cfg_.context_dim});
            for (int j = 0; j < D; ++j) x.ptr()[j] = static_cast<S>(rng.uniform(-1, 1));
            for (int j = 0; j < cfg_.context_dim; ++j) ctx.ptr()[j] = static_cast<S>(rng.uniform(-1, 1));
            Tensor<S> mu0, al0;
            blocks_[t].forward(x, ctx, mu0, al0);
            for (int j = 0; j < D; ++j) {
                Tensor<S> xj = x;
                xj.ptr()[j] += S(0.5);
                Tensor<S> mu1, al1;
                blocks_[t].forward(xj, ctx, mu1, al1);
                for (int i = 0; i <= j; ++i) {
                    if (mu1.ptr()[i] != mu0.ptr()[i] || al1.ptr()[i] != al0.ptr()[i])
                        violations.push_back({t, i, j});
                }
            }
        }
        return violations;
    }

    std::vector<Param<S>*> params() {
        std::vector<Param<S>*> out;
        for (auto& b : blocks_)
            for (auto* p : b.params()) out.push_back(p);
        return out;
    }

    void zero_grad() {
        for (auto* p : params()) p->zero_grad();
    }

    std::vector<MadeBlock<S>>& blocks() { return blocks_; }
    const std::vector<std::vector<int>>& permutations() const { return perms_; }

    void save_state(Checkpoint& ck, const std::string& prefix = "", bool with_adam = true) {
        for (auto* p : params()) {
            Param<S> tagged = *p;
            tagged.name = prefix + p->name;
            nn::put_param(ck, tagged, with_adam);
        }
        for (int t = 0; t < cfg_.n_transforms; ++t) {
            std::vector<std::int64_t> perm64(perms_[t].begin(), perms_[t].end());
            ck.put_raw(prefix + "flow.perm" + std::to_string(t), nn::Dtype::i64,
                       {static_cast<long>(perm64.size())}, perm64.data());
            auto& layers = blocks_[t].layers();
            for (std::size_t l = 0; l < layers.size(); ++l) {
                std::vector<std::uint16_t> m(layers[l].mask().begin(), layers[l].mask().end());
                ck.put_raw(prefix + "flow.t" + std::to_string(t) + ".l" + std::to_string(l) + ".mask",
                           nn::Dtype::u16, {static_cast<long>(m.size())}, m.data());
            }
        }
        ck.put_array(prefix + "flow.std_mean", {cfg_.dim}, std_mean_);
        ck.put_array(prefix + "flow.std_scale", {cfg_.dim}, std_scale_);
    }

    void load_state(const Checkpoint& ck, const std::string& prefix = "") {
        for (auto* p : params()) {
            Param<S> tagged = *p;
            tagged.name = prefix + p->name;
            nn::get_param(ck, tagged);
            p->value = std::move(tagged.value);
            p->adam_m = std::move(tagged.adam_m);
            p->adam_v = std::move(tagged.adam_v);
        }
        for (int t = 0; t < cfg_.n_transforms; ++t) {
            const auto& e = ck.at(prefix + "flow.perm" + std::to_string(t));
            std::vector<std::int64_t> perm64(static_cast<std::size_t>(e.numel()));
            std::memcpy(perm64.data(), e.bytes.data(), e.bytes.size());
            perms_[t].assign(perm64.begin(), perm64.end());
        }
        std_mean_ = ck.get_array<S>(prefix + "flow.std_mean");
        std_scale_ = ck.get_array<S>(prefix + "flow.std_scale");
        for (auto& b : blocks_)
            for (auto& l : b.layers()) l.apply_mask();
    }

private:
    struct TransformCache {
        Tensor<S> xp, mu, alpha, z;
        std::vector<std::uint8_t> clamp_pass;
    };

    Tensor<S> broadcast_context(const Tensor<S>& context, long n) {
        if (context.dim(0) == n) return context;
        if (context.dim(0) != 1) throw ShapeError("context rows must be 1 or n");
        Tensor<S> out({n, cfg_.context_dim});
        for (long r = 0; r < n; ++r)
            std::copy_n(context.ptr(), cfg_.context_dim, out.ptr() + r * cfg_.context_dim);
        return out;
    }

    MafConfig cfg_;
    std::vector<MadeBlock<S>> blocks_;
    std::vector<std::vector<int>> perms_;
    std::vector<S> std_mean_, std_scale_;
    std::vector<TransformCache> cache_;
};

}  // namespace adex::flow
