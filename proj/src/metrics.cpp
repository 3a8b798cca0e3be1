#include "adex/pipeline/metrics.hpp"

#include <cmath>
#include <cstdlib>

#include "adex/errors.hpp"

namespace adex::pipe {

std::vector<int> detect_spikes(const NormalizedTrace& trace, double threshold) {
    std::vector<int> out;
    int last = -10;
    for (int i = 1; i < static_cast<int>(trace.size()); ++i) {
        if (trace[i - 1] < threshold && trace[i] >= threshold && i - last > 1) {
            out.push_back(i);
            last = i;
        }
    }
    return out;
}

double sample_time_ms(int q, double duration_ms) {
    // query q sits at raw position q*(kRawSamples-1)/(kTraceLen-1)
    const double raw_pos = static_cast<double>(q) * (kRawSamples - 1) / (kTraceLen - 1);
    return raw_pos * duration_ms / kRawSamples;
}

TraceMetrics trace_metrics(const NormalizedTrace& a, const NormalizedTrace& b, double threshold,
                           double duration_ms) {
    if (a.size() != b.size()) throw ShapeError("trace_metrics: length mismatch");
    TraceMetrics m;
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        acc += d * d;
    }
    m.mse = acc / static_cast<double>(a.size());

    const std::vector<int> sa = detect_spikes(a, threshold);
    const std::vector<int> sb = detect_spikes(b, threshold);
    m.spike_count_delta = std::abs(static_cast<int>(sa.size()) - static_cast<int>(sb.size()));
    const std::size_t k = std::min(sa.size(), sb.size());
    for (std::size_t i = 0; i < k; ++i)
        m.spike_time_deltas_ms.push_back(sample_time_ms(sa[i], duration_ms) -
                                         sample_time_ms(sb[i], duration_ms));
    return m;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ShapeError("pearson: need equal sizes >= 2");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0 || syy <= 0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace adex::pipe
