#pragma once

#include <cstdint>
#include <string>

#include "adex/kvfile.hpp"

namespace adex {

// Fixed sizes of the virtual device's readout path.
inline constexpr int kRawSamples = 10000;   // ADC samples per recording
inline constexpr int kTraceLen = 1024;      // network input length
inline constexpr int kAdcLevels = 1024;     // 10-bit ADC, codes 0..1023
inline constexpr int kCodeMax = 1022;       // last parameter value is reserved
inline constexpr int kParamCount = 4;

// The four inferable 10-bit parameter codes. Each must lie in [0, 1022].
struct DigitalParams {
    int a_code = 0;
    int b_code = 0;
    int g_tauw_code = 0;
    int v_r_code = 0;

    int operator[](int i) const;
    void validate() const;  // throws RangeError
};

// Physical-unit AdEx constants. Units: mV, ms, pA, nS, pF throughout
// (consistent: nS*mV = pA, pF*mV/ms = pA).
struct AdExPhysical {
    double C_m_pF = 200.0;
    double g_L_nS = 10.0;
    double V_L_mV = -70.0;
    double Delta_T_mV = 2.0;
    double V_T_mV = -50.0;
    double V_th_mV = -40.0;
    double V_r_mV = -65.0;
    double tau_ref_ms = 2.0;
    double a_nS = 0.0;
    double b_pA = 0.0;
    double tau_w_ms = 100.0;
    double C_w_pF = 2000.0;
    double g_tauw_nS = 20.0;

    void validate() const;  // throws RangeError on broken invariants
};

struct StepStimulus {
    double amplitude_pA = 500.0;
    double onset_ms = 0.0;
    double duration_ms = 1000.0;

    double current_at(double t_ms) const {
        return (t_ms >= onset_ms && t_ms < onset_ms + duration_ms) ? amplitude_pA : 0.0;
    }
    void validate() const;
};

struct NeuronState {
    double V_m_mV;
    double w_pA;
    double refractory_remaining_ms = 0.0;
};

// Two-component emulation of analog temporal noise: white current noise on
// the membrane equation plus per-trial multiplicative jitter on the analog
// conductances/currents. current_sigma is the noise amplitude at 1 ms
// integration steps; per-step std scales as sigma*sqrt(1ms/dt).
struct NoiseModel {
    double current_sigma_pA = 10.0;
    double param_jitter_rel = 0.01;
    std::uint64_t seed = 0;

    void validate() const;
};

// Linear code->value range for one parameter.
struct CodeRange {
    double min = 0.0;
    double max = 1.0;
    double at_code(int code) const { return min + (max - min) * (static_cast<double>(code) / kCodeMax); }
};

// Full configuration of the virtual device: physical constants, the digital
// range table, ADC range, noise model, integration grid and stimulus.
struct DeviceConfig {
    // fixed physical constants (not inferred)
    double C_m_pF = 200.0;
    double g_L_nS = 10.0;
    double V_L_mV = -70.0;
    double Delta_T_mV = 2.0;
    double V_T_mV = -50.0;
    double V_th_mV = -40.0;
    double tau_ref_ms = 2.0;
    double C_w_pF = 2000.0;

    // digital range table for the four inferable parameters
    CodeRange a_nS{0.0, 10.0};
    CodeRange b_pA{0.0, 200.0};
    CodeRange g_tauw_nS{6.6, 200.0};
    CodeRange v_r_mV{-70.0, -45.0};

    // ADC readout range
    double adc_min_mV = -80.0;
    double adc_max_mV = -30.0;

    NoiseModel noise;

    double dt_ms = 0.05;
    double duration_ms = 1000.0;  // biological time; 1 ms wall clock at 1000x speed-up
    StepStimulus stimulus{500.0, 0.0, 1000.0};

    void validate() const;

    static DeviceConfig from_kv(const KvFile& kv);  // rejects unknown device.* keys
    KvFile to_kv() const;
    std::uint64_t hash() const { return to_kv().hash(); }
};

// Linear map from digital codes to physical parameters. tau_w is derived as
// C_w / g_tauw, so a larger g_tauw code means a smaller time constant.
AdExPhysical map_digital_to_physical(const DigitalParams& codes, const DeviceConfig& config);

}  // namespace adex
