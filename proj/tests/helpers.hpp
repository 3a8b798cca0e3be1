#pragma once

#include <cmath>
#include <cstdio>
#include <vector>

#include "adex/device.hpp"
#include "adex/nn/tensor.hpp"
#include "adex/rng.hpp"

namespace adex::test {

inline DeviceConfig quiet_config() {
    DeviceConfig c;
    c.noise.current_sigma_pA = 0.0;
    c.noise.param_jitter_rel = 0.0;
    return c;
}

template <class S>
void fill_uniform(nn::Tensor<S>& t, Rng& rng, double lo, double hi) {
    for (auto& v : t.data) v = static_cast<S>(rng.uniform(lo, hi));
}

// Central-difference gradient comparison bookkeeping. A coordinate passes if
// the relative error is under tol or both values are tiny.
struct FdStats {
    double tol = 1e-4;
    double abs_floor = 1e-7;
    long checked = 0;
    long failed = 0;
    double max_rel = 0;

    void compare(double analytic, double numeric) {
        ++checked;
        const double diff = std::fabs(analytic - numeric);
        if (diff < abs_floor) return;
        const double rel = diff / std::max({1e-12, std::fabs(analytic), std::fabs(numeric)});
        max_rel = std::max(max_rel, rel);
        if (rel > tol) {
            ++failed;
            if (failed <= 5)
                std::fprintf(stderr, "  fd mismatch: analytic %.8e numeric %.8e rel %.2e\n",
                             analytic, numeric, rel);
        }
    }
};

// Checks d(loss)/d(values[i]) for up to max_coords coordinates (all when
// max_coords < 0) against grads[i]; loss() must re-run the forward pass.
template <class LossFn>
void check_coords(std::vector<double>& values, const std::vector<double>& grads, LossFn&& loss,
                  FdStats& fd, Rng& rng, long max_coords = -1, double h = 1e-5) {
    const long n = static_cast<long>(values.size());
    std::vector<long> coords;
    if (max_coords < 0 || max_coords >= n) {
        coords.resize(n);
        for (long i = 0; i < n; ++i) coords[i] = i;
    } else {
        for (long c = 0; c < max_coords; ++c) coords.push_back(static_cast<long>(rng.uniform_int(n)));
    }
    for (long i : coords) {
        const double orig = values[i];
        values[i] = orig + h;
        const double up = loss();
        values[i] = orig - h;
        const double down = loss();
        values[i] = orig;
        fd.compare(grads[i], (up - down) / (2 * h));
    }
}

}  // namespace adex::test
