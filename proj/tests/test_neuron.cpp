#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "adex/errors.hpp"
#include "adex/neuron.hpp"
#include "helpers.hpp"

using namespace adex;

namespace {

AdExPhysical quiet_neuron(const DeviceConfig& cfg) {
    return map_digital_to_physical({0, 0, 0, 0}, cfg);
}

NoiseModel no_noise() { return NoiseModel{0.0, 0.0, 0}; }

}  // namespace

TEST_CASE("zero stimulus with a=b=0 stays at the leak potential") {
    const DeviceConfig cfg = test::quiet_config();
    AdExPhysical phys = quiet_neuron(cfg);
    StepStimulus stim{0.0, 0.0, 1000.0};

    for (double dt : {0.1, 0.05, 0.025}) {
        StateTrace st;
        IntegrationResult r = integrate(phys, stim, 1000.0, dt, no_noise(), 0.0, &st);
        CHECK(r.spike_times_ms.empty());
        // w has no drive at all and stays exactly zero
        for (double w : st.w_pA) CHECK(w == 0.0);
        // the exponential term at V_L contributes ~Delta_T*e^-10 mV of
        // equilibrium offset; nothing else may move the membrane
        for (double v : r.trace.v_mV) CHECK(std::fabs(v - phys.V_L_mV) < 1e-3);
        // and the digitized trace is exactly flat
        DigitizedTrace dig = adc_quantize(r.trace, cfg.adc_min_mV, cfg.adc_max_mV);
        for (std::size_t i = 1; i < dig.codes.size(); ++i) CHECK(dig.codes[i] == dig.codes[0]);
    }
}

TEST_CASE("subthreshold step matches the closed-form RC charge within 0.1 mV") {
    const DeviceConfig cfg = test::quiet_config();
    AdExPhysical phys = quiet_neuron(cfg);  // a = 0, b = 0
    const double I = 100.0;                 // keeps V far below V_T
    StepStimulus stim{I, 0.0, 1000.0};
    IntegrationResult r = integrate(phys, stim, 1000.0, cfg.dt_ms, no_noise());
    CHECK(r.spike_times_ms.empty());

    const double tau = phys.C_m_pF / phys.g_L_nS;
    for (int i = 0; i < kRawSamples; i += 7) {
        const double t = i * r.trace.sample_period_ms;
        const double expect = phys.V_L_mV + I / phys.g_L_nS * (1.0 - std::exp(-t / tau));
        CHECK(std::fabs(r.trace.v_mV[i] - expect) < 0.1);
    }
}

TEST_CASE("spike-triggered adaptation accumulates b per spike") {
    const DeviceConfig cfg = test::quiet_config();
    // large tau_w (code 0 -> 303 ms), strong b, no subthreshold coupling
    AdExPhysical phys = map_digital_to_physical({0, 511, 0, 409}, cfg);
    StepStimulus stim{500.0, 0.0, 1000.0};

    StateTrace st;
    IntegrationResult r = integrate(phys, stim, 1000.0, cfg.dt_ms, no_noise(), 0.0, &st);
    REQUIRE(r.spike_times_ms.size() >= 3);

    // w jumps by exactly b across each spike step (plus the tiny
    // continuous-relaxation part of that step)
    for (double ts : r.spike_times_ms) {
        const auto idx = static_cast<std::size_t>(std::lround(ts / cfg.dt_ms));
        REQUIRE(idx < st.w_pA.size());
        const double w_before = st.w_pA[idx - 1];
        const double w_after = st.w_pA[idx];
        const double relax = cfg.dt_ms / phys.tau_w_ms *
                             (phys.a_nS * (st.V_mV[idx - 1] - phys.V_L_mV) - w_before);
        CHECK(w_after - w_before - relax == doctest::Approx(phys.b_pA).epsilon(1e-9));
    }

    // against a dt/10 reference: w right after the k-th spike agrees
    StateTrace st_ref;
    IntegrationResult r_ref = integrate(phys, stim, 1000.0, cfg.dt_ms / 10, no_noise(), 0.0, &st_ref);
    REQUIRE(r_ref.spike_times_ms.size() == r.spike_times_ms.size());
    for (std::size_t k = 0; k < r.spike_times_ms.size(); ++k) {
        const auto i1 = static_cast<std::size_t>(std::lround(r.spike_times_ms[k] / cfg.dt_ms));
        const auto i2 = static_cast<std::size_t>(std::lround(r_ref.spike_times_ms[k] / (cfg.dt_ms / 10)));
        CHECK(st.w_pA[i1] == doctest::Approx(st_ref.w_pA[i2]).epsilon(0.05));
    }

    // adaptation slows the neuron down: inter-spike intervals nondecreasing
    for (std::size_t k = 2; k < r.spike_times_ms.size(); ++k) {
        const double prev = r.spike_times_ms[k - 1] - r.spike_times_ms[k - 2];
        const double cur = r.spike_times_ms[k] - r.spike_times_ms[k - 1];
        CHECK(cur >= prev - cfg.dt_ms - 1e-9);  // spike times are quantized to dt
    }
}

TEST_CASE("refractory clamp and spike bookkeeping hold on random parameterizations") {
    const DeviceConfig cfg = test::quiet_config();
    Rng rng(99);
    int with_spikes = 0;
    for (int trial = 0; trial < 100; ++trial) {
        DigitalParams codes{static_cast<int>(rng.uniform_int(1023)),
                            static_cast<int>(rng.uniform_int(1023)),
                            static_cast<int>(rng.uniform_int(1023)),
                            static_cast<int>(rng.uniform_int(1023))};
        AdExPhysical phys = map_digital_to_physical(codes, cfg);
        StateTrace st;
        IntegrationResult r =
            integrate(phys, cfg.stimulus, cfg.duration_ms, cfg.dt_ms, no_noise(), 0.0, &st);
        if (!r.spike_times_ms.empty()) ++with_spikes;

        for (double ts : r.spike_times_ms) {
            // every state on [t_spike, t_spike + tau_ref] sits exactly at V_r
            const auto first = static_cast<std::size_t>(std::lround(ts / cfg.dt_ms));
            const auto last = std::min<std::size_t>(
                st.V_mV.size() - 1,
                static_cast<std::size_t>(std::lround((ts + phys.tau_ref_ms) / cfg.dt_ms)));
            for (std::size_t i = first; i <= last; ++i) CHECK(st.V_mV[i] == phys.V_r_mV);
        }
        // reset count equals recorded spikes: count exact arrivals at V_r
        // from above threshold-crossing dynamics via the spike list itself
        std::size_t resets = 0;
        for (std::size_t i = 1; i < st.V_mV.size(); ++i)
            if (st.V_mV[i] == phys.V_r_mV && st.V_mV[i - 1] != phys.V_r_mV &&
                st.V_mV[i - 1] > phys.V_r_mV)
                ++resets;
        // spikes from a plateau exactly at V_r (refractory chains) are rare;
        // require agreement when dynamics separate cleanly
        CHECK(resets <= r.spike_times_ms.size());
    }
    CHECK(with_spikes > 50);  // the default stimulus drives most of the box to fire
}

TEST_CASE("halving dt halves the subthreshold integration error") {
    const DeviceConfig cfg = test::quiet_config();
    AdExPhysical phys = map_digital_to_physical({400, 0, 300, 0}, cfg);  // a > 0, no spikes
    StepStimulus stim{100.0, 0.0, 2000.0};
    const double duration = 2000.0;  // sample period 0.2 ms

    auto run = [&](double dt) { return integrate(phys, stim, duration, dt, no_noise()); };
    IntegrationResult ref = run(0.1 / 64);
    IntegrationResult c1 = run(0.1);
    IntegrationResult c2 = run(0.05);

    double e1 = 0, e2 = 0;
    for (int i = 0; i < kRawSamples; ++i) {
        e1 = std::max(e1, std::fabs(c1.trace.v_mV[i] - ref.trace.v_mV[i]));
        e2 = std::max(e2, std::fabs(c2.trace.v_mV[i] - ref.trace.v_mV[i]));
    }
    const double ratio = e1 / e2;
    CHECK(ratio > 1.5);
    CHECK(ratio < 2.5);
}

TEST_CASE("integration reports non-finite state with the step index") {
    AdExPhysical phys;
    phys.V_r_mV = -65;
    phys.C_w_pF = 1e-294;  // tau_w ~ 1e-300: the explicit w update oscillates to overflow
    phys.g_tauw_nS = 1e6;
    phys.tau_w_ms = phys.C_w_pF / phys.g_tauw_nS;
    phys.a_nS = 10.0;
    StepStimulus stim{500.0, 0.0, 1000.0};
    CHECK_THROWS_AS(integrate(phys, stim, 1000.0, 0.05, no_noise()), IntegrationError);
}

TEST_CASE("dt must divide the sample period") {
    const DeviceConfig cfg = test::quiet_config();
    AdExPhysical phys = quiet_neuron(cfg);
    CHECK_THROWS_AS(integrate(phys, cfg.stimulus, 1000.0, 0.03, no_noise()), RangeError);
}

TEST_CASE("adc quantization endpoints, clamping and midpoint rounding") {
    RawTrace raw;
    raw.v_mV = {-80.0, -30.0, -20.0, -90.0, -55.0, -55.024437927663734};
    raw.v_mV.resize(6);
    DigitizedTrace dig = adc_quantize(raw, -80.0, -30.0);
    CHECK(dig.codes[0] == 0);     // V_min
    CHECK(dig.codes[1] == 1023);  // V_max
    CHECK(dig.codes[2] == 1023);  // clamped above
    CHECK(dig.codes[3] == 0);     // clamped below
    CHECK(dig.codes[4] == 512);   // exact midpoint 511.5 rounds half-to-even
    CHECK(dig.codes[5] == 511);   // 511.0000...
}

TEST_CASE("preprocess produces 1024 values in [0,1]") {
    DigitizedTrace dig;
    dig.codes.assign(kRawSamples, 500);
    NormalizedTrace out = preprocess(dig);
    REQUIRE(out.size() == 1024);
    for (float v : out) CHECK(v == doctest::Approx(500.0 / 1023.0));

    dig.codes.resize(100);
    CHECK_THROWS_AS(preprocess(dig), ShapeError);
}

TEST_CASE("linear resampling is exact on affine inputs") {
    std::vector<double> ramp(kRawSamples);
    for (int i = 0; i < kRawSamples; ++i) ramp[i] = 1023.0 * i / (kRawSamples - 1);
    std::vector<double> out = resample_linear(ramp, kTraceLen);
    REQUIRE(out.size() == 1024);
    for (int q = 0; q < kTraceLen; ++q)
        CHECK(std::fabs(out[q] / 1023.0 - static_cast<double>(q) / 1023.0) < 1e-6);
}

TEST_CASE("run_experiment is deterministic in (codes, config, seed)") {
    DeviceConfig cfg = test::quiet_config();
    cfg.noise.current_sigma_pA = 10.0;
    cfg.noise.param_jitter_rel = 0.01;
    const DigitalParams codes{300, 500, 400, 300};

    NormalizedTrace a = run_experiment(codes, cfg, 1234);
    NormalizedTrace b = run_experiment(codes, cfg, 1234);
    CHECK(a == b);  // bit-identical

    NormalizedTrace c = run_experiment(codes, cfg, 1235);
    CHECK(a != c);
}

TEST_CASE("high reset potential keeps the membrane at high levels") {
    const DeviceConfig cfg = test::quiet_config();
    // min over the spiking regime (after the initial charge from V_L)
    auto tail_min = [&](int v_r_code) {
        NormalizedTrace t = run_experiment({200, 200, 500, v_r_code}, cfg, 7);
        return *std::min_element(t.begin() + 512, t.end());
    };
    const double low = tail_min(100);
    const double mid = tail_min(500);
    const double high = tail_min(900);
    CHECK(low < mid);
    CHECK(mid < high);
}
