#pragma once

#include <cstdint>
#include <vector>

#include "adex/device.hpp"

namespace adex {

struct RawTrace {
    std::vector<double> v_mV;  // kRawSamples membrane samples
    double sample_period_ms = 0.1;
};

struct DigitizedTrace {
    std::vector<std::uint16_t> codes;  // kRawSamples values in [0, 1023]
};

using NormalizedTrace = std::vector<float>;  // kTraceLen values in [0, 1]

// Optional per-step state capture for tests and debugging.
struct StateTrace {
    std::vector<double> t_ms, V_mV, w_pA;
};

struct IntegrationResult {
    RawTrace trace;
    std::vector<double> spike_times_ms;
};

// Forward Euler integration of the AdEx equations (synaptic input held at
// zero) under a step current. Threshold handling per step: once V_m >= V_th
// the spike is recorded, V_m is reset and held at V_r for tau_ref while w
// keeps relaxing; w jumps by b at the spike. The exponential argument is
// clamped at 20 so a single step cannot overflow before the threshold test.
//
// Records kRawSamples membrane samples with period duration/kRawSamples
// starting at record_start_ms. Integration runs over
// [0, record_start_ms + duration_ms]; dt must divide the sample period.
IntegrationResult integrate(const AdExPhysical& phys, const StepStimulus& stim,
                            double duration_ms, double dt_ms, const NoiseModel& noise,
                            double record_start_ms = 0.0, StateTrace* state_out = nullptr);

// 10-bit quantization of the membrane trace over [adc_min, adc_max];
// round-half-to-even, clamped to [0, 1023].
DigitizedTrace adc_quantize(const RawTrace& raw, double adc_min_mV, double adc_max_mV);

// Linear-interpolation resampling at out_len equally spaced query points
// spanning the input (endpoints included). Exact on affine inputs.
std::vector<double> resample_linear(const std::vector<double>& in, int out_len);

// 10000-point digitized trace -> 1024 floats in [0, 1]: resample, then
// divide by 1023.
NormalizedTrace preprocess(const DigitizedTrace& dig);

struct ExperimentResult {
    NormalizedTrace normalized;
    DigitizedTrace digitized;
    RawTrace raw;
    std::vector<double> spike_times_ms;
    AdExPhysical physical;  // post-jitter values actually integrated
};

// Full virtual-device experiment: map codes, apply per-trial parameter
// jitter, integrate with current noise, quantize, preprocess. Deterministic
// in (codes, config, seed); independent trials use split seeds.
ExperimentResult run_experiment_full(const DigitalParams& codes, const DeviceConfig& config,
                                     std::uint64_t seed);
NormalizedTrace run_experiment(const DigitalParams& codes, const DeviceConfig& config,
                               std::uint64_t seed);

}  // namespace adex
