#include <doctest.h>

#include <cmath>

#include "adex/device.hpp"
#include "adex/errors.hpp"
#include "helpers.hpp"

using namespace adex;

TEST_CASE("digital-to-physical map hits the range endpoints") {
    const DeviceConfig cfg = test::quiet_config();

    AdExPhysical lo = map_digital_to_physical({0, 0, 0, 0}, cfg);
    CHECK(lo.a_nS == doctest::Approx(cfg.a_nS.min));
    CHECK(lo.b_pA == doctest::Approx(cfg.b_pA.min));
    CHECK(lo.g_tauw_nS == doctest::Approx(cfg.g_tauw_nS.min));
    CHECK(lo.V_r_mV == doctest::Approx(cfg.v_r_mV.min));

    AdExPhysical hi = map_digital_to_physical({1022, 1022, 1022, 1022}, cfg);
    CHECK(hi.a_nS == doctest::Approx(cfg.a_nS.max));
    CHECK(hi.b_pA == doctest::Approx(cfg.b_pA.max));
    CHECK(hi.g_tauw_nS == doctest::Approx(cfg.g_tauw_nS.max));
    CHECK(hi.V_r_mV == doctest::Approx(cfg.v_r_mV.max));

    // midpoint code lands within one LSB of the range midpoint
    AdExPhysical mid = map_digital_to_physical({511, 511, 511, 511}, cfg);
    const double lsb = (cfg.b_pA.max - cfg.b_pA.min) / 1022.0;
    CHECK(std::fabs(mid.b_pA - 0.5 * (cfg.b_pA.min + cfg.b_pA.max)) <= lsb);

    // tau_w is derived, so a larger code means a smaller time constant
    CHECK(hi.tau_w_ms < lo.tau_w_ms);
    CHECK(hi.tau_w_ms == doctest::Approx(cfg.C_w_pF / cfg.g_tauw_nS.max));
}

TEST_CASE("out-of-range codes are rejected") {
    const DeviceConfig cfg = test::quiet_config();
    CHECK_THROWS_AS(map_digital_to_physical({-1, 0, 0, 0}, cfg), RangeError);
    CHECK_THROWS_AS(map_digital_to_physical({0, 1023, 0, 0}, cfg), RangeError);
}

TEST_CASE("each physical parameter is monotone in its code") {
    const DeviceConfig cfg = test::quiet_config();
    AdExPhysical prev = map_digital_to_physical({0, 0, 0, 0}, cfg);
    for (int code = 93; code <= 1022; code += 93) {
        AdExPhysical cur = map_digital_to_physical({code, code, code, code}, cfg);
        CHECK(cur.a_nS >= prev.a_nS);
        CHECK(cur.b_pA >= prev.b_pA);
        CHECK(cur.g_tauw_nS >= prev.g_tauw_nS);
        CHECK(cur.V_r_mV >= prev.V_r_mV);
        CHECK(cur.tau_w_ms <= prev.tau_w_ms);  // conductance up, time constant down
        prev = cur;
    }
}

TEST_CASE("device config round-trips through the key=value form") {
    DeviceConfig cfg = test::quiet_config();
    cfg.stimulus.amplitude_pA = 432.5;
    cfg.noise.current_sigma_pA = 3.25;
    DeviceConfig back = DeviceConfig::from_kv(cfg.to_kv());
    CHECK(back.stimulus.amplitude_pA == doctest::Approx(432.5));
    CHECK(back.noise.current_sigma_pA == doctest::Approx(3.25));
    CHECK(back.hash() == cfg.hash());

    KvFile kv = cfg.to_kv();
    kv.set("device.bogus_key", "1");
    CHECK_THROWS_AS(DeviceConfig::from_kv(kv), ConfigError);
}

TEST_CASE("config hash changes iff a field changes") {
    DeviceConfig a = test::quiet_config();
    DeviceConfig b = a;
    CHECK(a.hash() == b.hash());
    b.adc_min_mV = -81.0;
    CHECK(a.hash() != b.hash());
}
