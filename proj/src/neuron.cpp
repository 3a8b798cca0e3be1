#include "adex/neuron.hpp"

#include <cmath>

#include "adex/errors.hpp"
#include "adex/rng.hpp"

namespace adex {

IntegrationResult integrate(const AdExPhysical& phys, const StepStimulus& stim,
                            double duration_ms, double dt_ms, const NoiseModel& noise,
                            double record_start_ms, StateTrace* state_out) {
    phys.validate();
    stim.validate();
    noise.validate();
    if (!(duration_ms > 0) || !(dt_ms > 0)) throw RangeError("duration and dt must be positive");

    const double sample_period = duration_ms / kRawSamples;
    const double stride_f = sample_period / dt_ms;
    const long stride = std::lround(stride_f);
    if (std::abs(stride_f - stride) > 1e-9 || stride < 1)
        throw RangeError("dt must divide the sample period duration/10000");

    const long start_step = std::lround(record_start_ms / dt_ms);
    if (std::abs(record_start_ms / dt_ms - start_step) > 1e-6)
        throw RangeError("record start must lie on the dt grid");
    const long n_steps = start_step + stride * kRawSamples;

    Rng rng(noise.seed);
    // white-noise scaling: per-step std grows as 1/sqrt(dt) so the injected
    // variance per unit time does not depend on the grid
    const double step_sigma = noise.current_sigma_pA / std::sqrt(dt_ms);

    IntegrationResult out;
    out.trace.sample_period_ms = sample_period;
    out.trace.v_mV.resize(kRawSamples);

    NeuronState s{phys.V_L_mV, 0.0, 0.0};
    const double inv_C = dt_ms / phys.C_m_pF;
    const double inv_tau_w = dt_ms / phys.tau_w_ms;

    long next_sample_step = start_step;
    int sample_idx = 0;

    auto record = [&](long step, double t) {
        if (state_out) {
            state_out->t_ms.push_back(t);
            state_out->V_mV.push_back(s.V_m_mV);
            state_out->w_pA.push_back(s.w_pA);
        }
        if (sample_idx < kRawSamples && step == next_sample_step) {
            out.trace.v_mV[sample_idx++] = s.V_m_mV;
            next_sample_step += stride;
        }
    };

    record(0, 0.0);
    for (long step = 0; step < n_steps; ++step) {
        const double t = step * dt_ms;
        if (s.refractory_remaining_ms > 0.0) {
            // membrane clamped at the reset potential; adaptation keeps relaxing
            s.V_m_mV = phys.V_r_mV;
            s.w_pA += inv_tau_w * (phys.a_nS * (s.V_m_mV - phys.V_L_mV) - s.w_pA);
            s.refractory_remaining_ms -= dt_ms;
            if (s.refractory_remaining_ms < 1e-12) s.refractory_remaining_ms = 0.0;
        } else {
            double I = stim.current_at(t);
            if (step_sigma > 0.0) I += step_sigma * rng.gaussian();
            double exp_arg = (s.V_m_mV - phys.V_T_mV) / phys.Delta_T_mV;
            if (exp_arg > 20.0) exp_arg = 20.0;
            const double dV = inv_C * (phys.g_L_nS * (phys.V_L_mV - s.V_m_mV) +
                                       phys.g_L_nS * phys.Delta_T_mV * std::exp(exp_arg) +
                                       I - s.w_pA);
            const double dw = inv_tau_w * (phys.a_nS * (s.V_m_mV - phys.V_L_mV) - s.w_pA);
            s.V_m_mV += dV;
            s.w_pA += dw;
            if (s.V_m_mV >= phys.V_th_mV) {
                out.spike_times_ms.push_back((step + 1) * dt_ms);
                s.V_m_mV = phys.V_r_mV;
                s.w_pA += phys.b_pA;
                s.refractory_remaining_ms = phys.tau_ref_ms;
            }
        }
        if (!std::isfinite(s.V_m_mV) || !std::isfinite(s.w_pA))
            throw IntegrationError("non-finite state", step);
        record(step + 1, (step + 1) * dt_ms);
    }
    if (sample_idx != kRawSamples)
        throw IntegrationError("recording window not filled", n_steps);
    return out;
}

DigitizedTrace adc_quantize(const RawTrace& raw, double adc_min_mV, double adc_max_mV) {
    if (!(adc_min_mV < adc_max_mV)) throw RangeError("adc_min must lie below adc_max");
    DigitizedTrace out;
    out.codes.resize(raw.v_mV.size());
    const double scale = (kAdcLevels - 1) / (adc_max_mV - adc_min_mV);
    for (std::size_t i = 0; i < raw.v_mV.size(); ++i) {
        // nearbyint under the default FP environment rounds half to even
        double code = std::nearbyint((raw.v_mV[i] - adc_min_mV) * scale);
        if (code < 0) code = 0;
        if (code > kAdcLevels - 1) code = kAdcLevels - 1;
        out.codes[i] = static_cast<std::uint16_t>(code);
    }
    return out;
}

std::vector<double> resample_linear(const std::vector<double>& in, int out_len) {
    if (in.size() < 2) throw ShapeError("resample needs at least 2 input samples");
    if (out_len < 2) throw ShapeError("resample needs at least 2 output samples");
    std::vector<double> out(out_len);
    const double step = static_cast<double>(in.size() - 1) / (out_len - 1);
    for (int q = 0; q < out_len; ++q) {
        double pos = q * step;
        auto i0 = static_cast<std::size_t>(pos);
        if (i0 >= in.size() - 1) i0 = in.size() - 2;
        const double frac = pos - static_cast<double>(i0);
        out[q] = in[i0] * (1.0 - frac) + in[i0 + 1] * frac;
    }
    return out;
}

NormalizedTrace preprocess(const DigitizedTrace& dig) {
    if (dig.codes.size() != static_cast<std::size_t>(kRawSamples))
        throw ShapeError("digitized trace must have " + std::to_string(kRawSamples) + " samples");
    std::vector<double> as_double(dig.codes.begin(), dig.codes.end());
    std::vector<double> res = resample_linear(as_double, kTraceLen);
    NormalizedTrace out(kTraceLen);
    for (int i = 0; i < kTraceLen; ++i)
        out[i] = static_cast<float>(res[i] / (kAdcLevels - 1));
    return out;
}

ExperimentResult run_experiment_full(const DigitalParams& codes, const DeviceConfig& config,
                                     std::uint64_t seed) {
    config.validate();
    AdExPhysical phys = map_digital_to_physical(codes, config);

    // per-trial multiplicative jitter on the analog quantities
    if (config.noise.param_jitter_rel > 0.0) {
        Rng jitter_rng(Rng::split(seed, 1));
        auto jittered = [&](double value) {
            double m = 1.0 + config.noise.param_jitter_rel * jitter_rng.gaussian();
            return value * (m < 0.01 ? 0.01 : m);
        };
        phys.g_L_nS = jittered(phys.g_L_nS);
        phys.a_nS = jittered(phys.a_nS);
        phys.b_pA = jittered(phys.b_pA);
        phys.g_tauw_nS = jittered(phys.g_tauw_nS);
        phys.tau_w_ms = phys.C_w_pF / phys.g_tauw_nS;
    }

    NoiseModel trial_noise = config.noise;
    trial_noise.seed = Rng::split(seed, 2);

    ExperimentResult out;
    out.physical = phys;
    IntegrationResult ir = integrate(phys, config.stimulus, config.duration_ms, config.dt_ms,
                                     trial_noise, config.stimulus.onset_ms);
    out.raw = std::move(ir.trace);
    out.spike_times_ms = std::move(ir.spike_times_ms);
    out.digitized = adc_quantize(out.raw, config.adc_min_mV, config.adc_max_mV);
    out.normalized = preprocess(out.digitized);
    return out;
}

NormalizedTrace run_experiment(const DigitalParams& codes, const DeviceConfig& config,
                               std::uint64_t seed) {
    return run_experiment_full(codes, config, seed).normalized;
}

}  // namespace adex
