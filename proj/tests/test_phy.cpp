#include <cmath>

#include "doctest.h"
#include "semran/phy/channel.hpp"

using namespace semran;
using namespace semran::phy;

TEST_CASE("noise variance after rescale") {
    CHECK(noise_variance(0.0) == 1.0);
    CHECK(noise_variance(10.0) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("analog: noiseless identity and empirical noise variance") {
    ChannelConfig cfg;
    ChannelState ch(0.0, 0.0, 10, 1, 0);
    codec::Embedding z{{0.5, -1.0, 2.0, 0.25}, true, false};
    const auto clean = analog_transmit(z, ch, 0.1, 2, cfg, true);
    CHECK(clean.z_received.z == z.z);
    CHECK(clean.report.delivered);
    CHECK(clean.report.airtime_slots == doctest::Approx(4.0 / (2 * cfg.symbols_per_unit_slot())).epsilon(1e-15));

    codec::Embedding zero{std::vector<double>(64, 0.0), true, false};
    double s2 = 0.0;
    long n = 0;
    for (int i = 0; i < 500; ++i) {
        const auto r = analog_transmit(zero, ch, 0.1, 2, cfg);
        for (double v : r.z_received.z) {
            s2 += v * v;
            ++n;
        }
    }
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));

    ChannelState ch10(10.0, 0.0, 10, 1, 0);
    s2 = 0.0;
    n = 0;
    for (int i = 0; i < 500; ++i) {
        const auto r = analog_transmit(zero, ch10, 0.1, 2, cfg);
        for (double v : r.z_received.z) {
            s2 += v * v;
            ++n;
        }
    }
    CHECK(s2 / n == doctest::Approx(0.1).epsilon(0.02));
}

TEST_CASE("digital: Shannon rate and single-attempt delivery") {
    ChannelConfig cfg;
    cfg.unit_bw_hz = 1e6;
    CHECK(bits_per_slot(10, 0.0, cfg) == doctest::Approx(10000.0).epsilon(1e-12));
    ChannelState ch(0.0, 0.0, 10, 1, 0);
    ch.set_slot(0);
    const auto r = digital_transmit(5000.0, ch, 0.1, 10, 8, cfg);
    CHECK(r.delivered);
    CHECK(r.attempts == 1);
    CHECK(r.airtime_slots == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.energy_joules == doctest::Approx(0.1 * 0.5 * cfg.slot_seconds).epsilon(1e-12));
}

TEST_CASE("digital: failed attempts wait for the next block") {
    ChannelConfig cfg;
    cfg.unit_bw_hz = 1e6;
    ChannelState ch(0.0, 0.0, 10, 1, 0);
    ch.set_slot(8);  // 2 slots left in the block, 20000 bits deliverable
    const auto r = digital_transmit(30000.0, ch, 0.1, 10, 3, cfg);
    CHECK(r.delivered);
    CHECK(r.attempts == 2);
    CHECK(r.latency_slots == doctest::Approx(2.0 + 3.0).epsilon(1e-12));
    const auto f = digital_transmit(1e9, ch, 0.1, 10, 2, cfg);
    CHECK_FALSE(f.delivered);
    CHECK(f.attempts == 2);
}

TEST_CASE("digital: delivery rate over fading matches the closed-form probability") {
    // One attempt succeeds when the block's capacity covers the payload:
    // fade >= f* where bits_per_slot(snr0 + f*) * L = payload. Attempts see
    // independent blocks, so P(delivered) = 1 - (1 - q)^attempts.
    ChannelConfig cfg;
    const double snr0 = 5.0, sd = 4.0, payload = 7400.0;
    const int L = 10, bw = 2, attempts = 2;
    const double need = payload / (L * bw * cfg.unit_bw_hz * cfg.slot_seconds);
    const double f_star = 10.0 * std::log10(std::pow(2.0, need) - 1.0) - snr0;
    const double q = 0.5 * std::erfc(f_star / (sd * std::sqrt(2.0)));
    const double expect = 1.0 - std::pow(1.0 - q, attempts);
    REQUIRE(q > 0.2);
    REQUIRE(q < 0.8);
    int ok = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        ChannelState ch(snr0, sd, L, 77, static_cast<std::uint64_t>(i));
        ch.set_slot(0);
        ok += digital_transmit(payload, ch, 0.1, bw, attempts, cfg).delivered;
    }
    CHECK(std::abs(static_cast<double>(ok) / n - expect) <= 0.01);
}

TEST_CASE("fading: per-block draws with the configured spread") {
    ChannelState ch(10.0, 4.0, 10, 3, 0);
    CHECK(ch.realized_snr_db(0) == ch.realized_snr_db(9));
    CHECK(ch.realized_snr_db(9) != ch.realized_snr_db(10));
    double s = 0.0, s2 = 0.0;
    const int n = 20000;
    for (int b = 0; b < n; ++b) {
        const double f = ch.fade_db(b);
        s += f;
        s2 += f * f;
    }
    CHECK(std::abs(s / n) < 0.1);
    CHECK(std::sqrt(s2 / n) == doctest::Approx(4.0).epsilon(0.02));
    // Consumption order does not change the draws.
    ChannelState other(10.0, 4.0, 10, 3, 0);
    CHECK(other.fade_db(123) == ch.fade_db(123));
}

TEST_CASE("energy accounting and the power cap") {
    ChannelConfig cfg;
    CHECK(energy_of(0.1, 0.0, 0.0, cfg) == 0.0);
    CHECK(energy_of(0.2, 2.0, 0.0, cfg) == doctest::Approx(4e-4).epsilon(1e-15));
    bool clamped = false;
    CHECK(clamp_power(0.3, cfg, &clamped) == cfg.power_cap_w);
    CHECK(clamped);
    CHECK(energy_of(0.3, 2.0, 0.0, cfg, &clamped) == doctest::Approx(4e-4).epsilon(1e-15));
    CHECK(clamped);
    CHECK(cfg.power_cap_w == doctest::Approx(std::pow(10.0, 2.3) * 1e-3).epsilon(0.01));
    CHECK(energy_of(0.0, 0.0, 3.0, cfg) == doctest::Approx(3.0 * cfg.joules_per_op).epsilon(1e-15));
}

TEST_CASE("quantizer: error within half a step inside the range, clipped outside") {
    const double range = 4.0;
    const int bits = 8;
    const double step = 2.0 * range / 256.0;
    Rng rng(5, stream_id("test.quant"));
    for (int i = 0; i < 2000; ++i) {
        const double x = rng.uniform(-range, range);
        double y = 0.0;
        quantize_dequantize(&x, 1, bits, range, &y);
        CHECK(std::abs(x - y) <= step / 2.0 + 1e-12);
    }
    const double big[2] = {100.0, -100.0};
    double out[2];
    quantize_dequantize(big, 2, bits, range, out);
    CHECK(out[0] == doctest::Approx(range - step / 2.0).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(-range + step / 2.0).epsilon(1e-15));
}
