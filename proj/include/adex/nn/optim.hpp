#pragma once

#include <cmath>
#include <vector>

#include "adex/nn/tensor.hpp"

namespace adex::nn {

// Adam with bias correction. One instance owns the step counter for a
// parameter group; moment accumulators live in the Param structs.
template <class S>
class Adam {
public:
    explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    long t() const { return t_; }

    void step(const std::vector<Param<S>*>& params, double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (Param<S>* p : params) {
            const long n = p->numel();
            S* w = p->value.data();
            const S* g = p->grad.data();
            S* m = p->adam_m.data();
            S* v = p->adam_v.data();
            for (long i = 0; i < n; ++i) {
                const double gi = g[i];
                const double mi = beta1_ * m[i] + (1.0 - beta1_) * gi;
                const double vi = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
                m[i] = static_cast<S>(mi);
                v[i] = static_cast<S>(vi);
                w[i] -= static_cast<S>(lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps_));
            }
        }
    }

    void reset() { t_ = 0; }
    void set_t(long t) { t_ = t; }

private:
    double beta1_, beta2_, eps_;
    long t_ = 0;
};

// Warmup followed by exponential decay. Batches count globally from 0;
// epochs are 1-indexed and the decay is first applied in epoch
// decay_start_epoch + 1.
struct LrSchedule {
    double base_lr = 1e-4;
    double warmup_start = 1e-8;
    long warmup_batches = 2000;
    int decay_start_epoch = 70;
    double decay_factor = 0.94;

    double lr_at(long global_batch, int epoch) const {
        if (global_batch < warmup_batches) {
            const double f = static_cast<double>(global_batch) / static_cast<double>(warmup_batches);
            return warmup_start + (base_lr - warmup_start) * f;
        }
        const int past = epoch > decay_start_epoch ? epoch - decay_start_epoch : 0;
        return base_lr * std::pow(decay_factor, past);
    }
};

}  // namespace adex::nn
