#include "adex/device.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "adex/errors.hpp"

namespace adex {

int DigitalParams::operator[](int i) const {
    switch (i) {
        case 0: return a_code;
        case 1: return b_code;
        case 2: return g_tauw_code;
        case 3: return v_r_code;
    }
    throw RangeError("parameter index out of range");
}

void DigitalParams::validate() const {
    const char* names[] = {"a_code", "b_code", "g_tauw_code", "v_r_code"};
    const int vals[] = {a_code, b_code, g_tauw_code, v_r_code};
    for (int i = 0; i < kParamCount; ++i)
        if (vals[i] < 0 || vals[i] > kCodeMax)
            throw RangeError(std::string(names[i]) + "=" + std::to_string(vals[i]) +
                             " outside [0, " + std::to_string(kCodeMax) + "]");
}

void AdExPhysical::validate() const {
    if (!(C_m_pF > 0)) throw RangeError("C_m must be positive");
    if (!(g_L_nS > 0)) throw RangeError("g_L must be positive");
    if (!(Delta_T_mV > 0)) throw RangeError("Delta_T must be positive");
    if (!(tau_ref_ms >= 0)) throw RangeError("tau_ref must be nonnegative");
    if (!(tau_w_ms > 0)) throw RangeError("tau_w must be positive");
    if (std::abs(tau_w_ms - C_w_pF / g_tauw_nS) > 1e-9 * tau_w_ms)
        throw RangeError("tau_w != C_w / g_tauw");
    if (!(V_r_mV < V_th_mV)) throw RangeError("V_r must lie below V_th");
}

void StepStimulus::validate() const {
    if (!std::isfinite(amplitude_pA)) throw RangeError("stimulus amplitude must be finite");
    if (!(onset_ms >= 0)) throw RangeError("stimulus onset must be nonnegative");
    if (!(duration_ms > 0)) throw RangeError("stimulus duration must be positive");
}

void NoiseModel::validate() const {
    if (!(current_sigma_pA >= 0)) throw RangeError("current_sigma must be nonnegative");
    if (!(param_jitter_rel >= 0)) throw RangeError("param_jitter_rel must be nonnegative");
}

void DeviceConfig::validate() const {
    if (!(C_m_pF > 0) || !(g_L_nS > 0) || !(Delta_T_mV > 0) || !(C_w_pF > 0))
        throw RangeError("physical constants must be positive");
    if (!(tau_ref_ms >= 0)) throw RangeError("tau_ref must be nonnegative");
    if (!(adc_min_mV < adc_max_mV)) throw RangeError("adc_min must lie below adc_max");
    if (!(g_tauw_nS.min > 0)) throw RangeError("g_tauw range must be positive");
    if (!(v_r_mV.max < V_th_mV)) throw RangeError("v_r range must stay below V_th");
    if (!(dt_ms > 0) || !(duration_ms > 0)) throw RangeError("dt and duration must be positive");
    double sample_period = duration_ms / kRawSamples;
    double ratio = sample_period / dt_ms;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1)
        throw RangeError("dt must divide the sample period duration/10000");
    noise.validate();
    stimulus.validate();
}

namespace {

const std::set<std::string>& device_keys() {
    static const std::set<std::string> keys = {
        "device.C_m_pF",        "device.g_L_nS",        "device.V_L_mV",
        "device.Delta_T_mV",    "device.V_T_mV",        "device.V_th_mV",
        "device.tau_ref_ms",    "device.C_w_pF",        "device.a_min_nS",
        "device.a_max_nS",      "device.b_min_pA",      "device.b_max_pA",
        "device.g_tauw_min_nS", "device.g_tauw_max_nS", "device.v_r_min_mV",
        "device.v_r_max_mV",    "device.adc_min_mV",    "device.adc_max_mV",
        "device.noise_current_sigma_pA", "device.noise_param_jitter_rel",
        "device.dt_ms",         "device.duration_ms",   "device.stim_amplitude_pA",
        "device.stim_onset_ms", "device.stim_duration_ms",
    };
    return keys;
}

std::string fmt(double x) {
    std::ostringstream ss;
    ss.precision(17);
    ss << x;
    return ss.str();
}

}  // namespace

DeviceConfig DeviceConfig::from_kv(const KvFile& kv) {
    for (const auto& key : kv.keys_with_prefix("device."))
        if (!device_keys().count(key)) throw ConfigError("unknown device key '" + key + "'");

    DeviceConfig c;
    c.C_m_pF = kv.get_double("device.C_m_pF", c.C_m_pF);
    c.g_L_nS = kv.get_double("device.g_L_nS", c.g_L_nS);
    c.V_L_mV = kv.get_double("device.V_L_mV", c.V_L_mV);
    c.Delta_T_mV = kv.get_double("device.Delta_T_mV", c.Delta_T_mV);
    c.V_T_mV = kv.get_double("device.V_T_mV", c.V_T_mV);
    c.V_th_mV = kv.get_double("device.V_th_mV", c.V_th_mV);
    c.tau_ref_ms = kv.get_double("device.tau_ref_ms", c.tau_ref_ms);
    c.C_w_pF = kv.get_double("device.C_w_pF", c.C_w_pF);
    c.a_nS.min = kv.get_double("device.a_min_nS", c.a_nS.min);
    c.a_nS.max = kv.get_double("device.a_max_nS", c.a_nS.max);
    c.b_pA.min = kv.get_double("device.b_min_pA", c.b_pA.min);
    c.b_pA.max = kv.get_double("device.b_max_pA", c.b_pA.max);
    c.g_tauw_nS.min = kv.get_double("device.g_tauw_min_nS", c.g_tauw_nS.min);
    c.g_tauw_nS.max = kv.get_double("device.g_tauw_max_nS", c.g_tauw_nS.max);
    c.v_r_mV.min = kv.get_double("device.v_r_min_mV", c.v_r_mV.min);
    c.v_r_mV.max = kv.get_double("device.v_r_max_mV", c.v_r_mV.max);
    c.adc_min_mV = kv.get_double("device.adc_min_mV", c.adc_min_mV);
    c.adc_max_mV = kv.get_double("device.adc_max_mV", c.adc_max_mV);
    c.noise.current_sigma_pA = kv.get_double("device.noise_current_sigma_pA", c.noise.current_sigma_pA);
    c.noise.param_jitter_rel = kv.get_double("device.noise_param_jitter_rel", c.noise.param_jitter_rel);
    c.dt_ms = kv.get_double("device.dt_ms", c.dt_ms);
    c.duration_ms = kv.get_double("device.duration_ms", c.duration_ms);
    c.stimulus.amplitude_pA = kv.get_double("device.stim_amplitude_pA", c.stimulus.amplitude_pA);
    c.stimulus.onset_ms = kv.get_double("device.stim_onset_ms", c.stimulus.onset_ms);
    c.stimulus.duration_ms = kv.get_double("device.stim_duration_ms", c.stimulus.duration_ms);
    c.validate();
    return c;
}

KvFile DeviceConfig::to_kv() const {
    KvFile kv;
    kv.set("device.C_m_pF", fmt(C_m_pF));
    kv.set("device.g_L_nS", fmt(g_L_nS));
    kv.set("device.V_L_mV", fmt(V_L_mV));
    kv.set("device.Delta_T_mV", fmt(Delta_T_mV));
    kv.set("device.V_T_mV", fmt(V_T_mV));
    kv.set("device.V_th_mV", fmt(V_th_mV));
    kv.set("device.tau_ref_ms", fmt(tau_ref_ms));
    kv.set("device.C_w_pF", fmt(C_w_pF));
    kv.set("device.a_min_nS", fmt(a_nS.min));
    kv.set("device.a_max_nS", fmt(a_nS.max));
    kv.set("device.b_min_pA", fmt(b_pA.min));
    kv.set("device.b_max_pA", fmt(b_pA.max));
    kv.set("device.g_tauw_min_nS", fmt(g_tauw_nS.min));
    kv.set("device.g_tauw_max_nS", fmt(g_tauw_nS.max));
    kv.set("device.v_r_min_mV", fmt(v_r_mV.min));
    kv.set("device.v_r_max_mV", fmt(v_r_mV.max));
    kv.set("device.adc_min_mV", fmt(adc_min_mV));
    kv.set("device.adc_max_mV", fmt(adc_max_mV));
    kv.set("device.noise_current_sigma_pA", fmt(noise.current_sigma_pA));
    kv.set("device.noise_param_jitter_rel", fmt(noise.param_jitter_rel));
    kv.set("device.dt_ms", fmt(dt_ms));
    kv.set("device.duration_ms", fmt(duration_ms));
    kv.set("device.stim_amplitude_pA", fmt(stimulus.amplitude_pA));
    kv.set("device.stim_onset_ms", fmt(stimulus.onset_ms));
    kv.set("device.stim_duration_ms", fmt(stimulus.duration_ms));
    return kv;
}

AdExPhysical map_digital_to_physical(const DigitalParams& codes, const DeviceConfig& config) {
    codes.validate();
    AdExPhysical p;
    p.C_m_pF = config.C_m_pF;
    p.g_L_nS = config.g_L_nS;
    p.V_L_mV = config.V_L_mV;
    p.Delta_T_mV = config.Delta_T_mV;
    p.V_T_mV = config.V_T_mV;
    p.V_th_mV = config.V_th_mV;
    p.tau_ref_ms = config.tau_ref_ms;
    p.C_w_pF = config.C_w_pF;
    p.a_nS = config.a_nS.at_code(codes.a_code);
    p.b_pA = config.b_pA.at_code(codes.b_code);
    p.g_tauw_nS = config.g_tauw_nS.at_code(codes.g_tauw_code);
    p.V_r_mV = config.v_r_mV.at_code(codes.v_r_code);
    p.tau_w_ms = p.C_w_pF / p.g_tauw_nS;
    p.validate();
    return p;
}

}  // namespace adex
