#include "semran/phy/channel.hpp"

#include <algorithm>
#include <cmath>

namespace semran::phy {

ChannelState::ChannelState(double snr_db_nominal, double fading_std_db, int block_length_slots, std::uint64_t seed,
                           std::uint64_t index)
    : nominal_(snr_db_nominal),
      std_(fading_std_db),
      block_(std::max(1, block_length_slots)),
      fading_(seed, stream_id("channel.fading", index)),
      noise_(seed, stream_id("channel.noise", index)) {}

double ChannelState::fade_db(long block) {
    while (static_cast<long>(fades_.size()) <= block) fades_.push_back(std_ * fading_.normal());
    return fades_[static_cast<std::size_t>(block)];
}

double clamp_power(double power_w, const ChannelConfig& cfg, bool* clamped) {
    const bool over = power_w > cfg.power_cap_w;
    if (clamped) *clamped = over;
    return over ? cfg.power_cap_w : power_w;
}

double energy_of(double power_w, double airtime_slots, double compute_ops, const ChannelConfig& cfg, bool* clamped) {
    const double p = clamp_power(power_w, cfg, clamped);
    return p * airtime_slots * cfg.slot_seconds + compute_ops * cfg.joules_per_op;
}

AnalogResult analog_transmit(const codec::Embedding& z, ChannelState& ch, double power_w, int bw_units,
                             const ChannelConfig& cfg, bool noiseless) {
    AnalogResult r;
    r.z_received = z;
    const double snr_db = ch.realized_snr_db(ch.slot());
    if (!noiseless) {
        const double sd = std::sqrt(noise_variance(snr_db));
        for (auto& v : r.z_received.z) v += sd * ch.noise_rng().normal();
    }
    r.z_received.normalized = false;
    const double symbols = static_cast<double>(z.z.size());
    r.report.payload = symbols;
    r.report.airtime_slots = symbols / (std::max(1, bw_units) * cfg.symbols_per_unit_slot());
    r.report.energy_joules = energy_of(power_w, r.report.airtime_slots, 2.0, cfg, &r.report.power_clamped);
    r.report.delivered = true;
    r.report.attempts = 1;
    r.report.latency_slots = r.report.airtime_slots;
    return r;
}

double bits_per_slot(int bw_units, double snr_db, const ChannelConfig& cfg) {
    const double lin = std::pow(10.0, snr_db / 10.0);
    return bw_units * cfg.unit_bw_hz * std::log2(1.0 + lin) * cfg.slot_seconds;
}

TransmissionReport digital_transmit(double payload_bits, ChannelState& ch, double power_w, int bw_units,
                                    int max_attempts, const ChannelConfig& cfg) {
    TransmissionReport r;
    r.payload = payload_bits;
    r.attempts = 0;
    long slot = ch.slot();
    double elapsed = 0.0;
    double airtime = 0.0;
    for (int a = 0; a < std::max(1, max_attempts); ++a) {
        ++r.attempts;
        const long block = ch.block_of(slot);
        const long block_end = (block + 1) * ch.block_length_slots();
        const double slots_left = static_cast<double>(block_end - slot);
        const double per_slot = bits_per_slot(bw_units, ch.realized_snr_db(slot), cfg);
        if (per_slot * slots_left >= payload_bits) {
            const double t = payload_bits / per_slot;
            airtime += t;
            elapsed += t;
            r.delivered = true;
            break;
        }
        airtime += slots_left;
        elapsed += slots_left;
        slot = block_end;
    }
    r.airtime_slots = airtime;
    r.latency_slots = elapsed;
    r.energy_joules = energy_of(power_w, airtime, 0.0, cfg, &r.power_clamped);
    return r;
}

void quantize_dequantize(const double* x, int n, int bits, double range, double* out) {
    const double levels = std::ldexp(1.0, bits);
    const double step = 2.0 * range / levels;
    for (int i = 0; i < n; ++i) {
        double idx = std::floor((x[i] + range) / step);
        idx = std::clamp(idx, 0.0, levels - 1.0);
        out[i] = -range + (idx + 0.5) * step;
    }
}

}  // namespace semran::phy
