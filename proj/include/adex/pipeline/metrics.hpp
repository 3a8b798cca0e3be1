#pragma once

#include <vector>

#include "adex/neuron.hpp"

namespace adex::pipe {

// Upward crossings of a normalized threshold with a 1-sample refractory.
// Returns sample indices of the crossings.
std::vector<int> detect_spikes(const NormalizedTrace& trace, double threshold);

struct TraceMetrics {
    double mse = 0;
    int spike_count_delta = 0;                 // |count_a - count_b|
    std::vector<double> spike_time_deltas_ms;  // first min(count) spikes
};

// Similarity metrics between two normalized traces recorded over
// duration_ms of biological time.
TraceMetrics trace_metrics(const NormalizedTrace& a, const NormalizedTrace& b, double threshold,
                           double duration_ms);

// Time of normalized-trace sample q in ms (the resampling grid spans the
// raw recording).
double sample_time_ms(int q, double duration_ms);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace adex::pipe
