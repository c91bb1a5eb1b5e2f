#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "semran/codec/codec.hpp"
#include "semran/sim/config.hpp"
#include "semran/sim/rng.hpp"

namespace semran::phy {

// Log-normal block fading: realized SNR (dB) = nominal + N(0, fading_std_db),
// one draw per block of block_length_slots. Block fades come from their own
// stream and depend only on the block index, not on who consumes them.
class ChannelState {
public:
    ChannelState(double snr_db_nominal, double fading_std_db, int block_length_slots, std::uint64_t seed,
                 std::uint64_t index);

    double snr_db_nominal() const { return nominal_; }
    double fading_std_db() const { return std_; }
    int block_length_slots() const { return block_; }

    long block_of(long slot) const { return slot / block_; }
    double fade_db(long block);
    double realized_snr_db(long slot) { return nominal_ + fade_db(block_of(slot)); }

    void set_slot(long slot) { slot_ = slot; }
    long slot() const { return slot_; }
    Rng& noise_rng() { return noise_; }

private:
    double nominal_;
    double std_;
    int block_;
    long slot_ = 0;
    Rng fading_;
    Rng noise_;
    std::vector<double> fades_;
};

struct TransmissionReport {
    double payload = 0.0;  // symbols (analog) or bits (digital)
    double airtime_slots = 0.0;
    double energy_joules = 0.0;
    bool delivered = false;
    int attempts = 1;
    double latency_slots = 0.0;
    bool power_clamped = false;
};

struct AnalogResult {
    codec::Embedding z_received;
    TransmissionReport report;
};

double clamp_power(double power_w, const ChannelConfig& cfg, bool* clamped = nullptr);

// power_w * airtime_slots * slot_seconds + compute_ops * joules_per_op, power clamped to the cap.
double energy_of(double power_w, double airtime_slots, double compute_ops, const ChannelConfig& cfg,
                 bool* clamped = nullptr);

// Per-component noise variance after receiver rescaling: 1 / linear SNR.
inline double noise_variance(double snr_db) { return 1.0 / std::pow(10.0, snr_db / 10.0); }

// Adds iid N(0, 1/snr) to every component. Equivalent to sending sqrt(P) z with
// noise variance P/snr and rescaling by 1/sqrt(P), without the rounding of the
// scale round-trip. noiseless=true returns z unchanged.
AnalogResult analog_transmit(const codec::Embedding& z, ChannelState& ch, double power_w, int bw_units,
                             const ChannelConfig& cfg, bool noiseless = false);

double bits_per_slot(int bw_units, double snr_db, const ChannelConfig& cfg);

// Starts at the beginning of ch.slot(). Each attempt has the remainder of its
// block; on failure the next attempt starts at the next block boundary.
TransmissionReport digital_transmit(double payload_bits, ChannelState& ch, double power_w, int bw_units,
                                    int max_attempts, const ChannelConfig& cfg);

// 8-bit style uniform mid-rise quantizer over [-range, range]; values clipped.
void quantize_dequantize(const double* x, int n, int bits, double range, double* out);
inline double payload_bits(int dims, int bits_per_dim) { return static_cast<double>(dims) * bits_per_dim; }

}  // namespace semran::phy
