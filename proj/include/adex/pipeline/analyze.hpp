#pragma once

#include <array>
#include <string>
#include <vector>

#include "adex/pipeline/config.hpp"
#include "adex/pipeline/metrics.hpp"
#include "adex/snpe/snpe.hpp"

namespace adex::pipe {

// Posterior-predictive summary for one target observation.
struct PredictiveReport {
    long n_samples = 0;
    std::array<double, kParamCount> sample_median{};
    std::array<double, kParamCount> ci_lo{}, ci_hi{};  // central 95% interval
    std::array<std::array<double, kParamCount>, kParamCount> correlation{};

    std::vector<double> predictive_mse;  // per simulated posterior draw, vs target
    std::vector<int> predictive_spike_count_delta;
    std::vector<std::vector<double>> predictive_spike_time_deltas_ms;
    std::vector<double> baseline_mse;  // repeated trials at the target codes
    double predictive_mse_median = 0;
    double baseline_mse_median = 0;

    bool corr_b_gtauw_negative = false;  // report flag, not a hard criterion
};

// Draws posterior samples, writes plot-ready CSV/SVG artifacts into out_dir
// and computes the predictive report (also written as JSON).
PredictiveReport analyze_posterior(snpe::Posterior& posterior, const RunConfig& cfg,
                                   const NormalizedTrace& x_star, const std::string& out_dir);

std::array<const char*, kParamCount> param_names();

}  // namespace adex::pipe
