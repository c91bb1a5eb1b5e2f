#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "semran/codec/codec.hpp"
#include "semran/sim/config.hpp"

namespace semran::codec {

// Everything that is fixed for one experiment seed and shared read-only by all
// paradigm arms: the Gaussian class task, a finite sample bank with cached
// reference embeddings and bit-centric outcomes, the validation and probe sets,
// and the codec obtained by offline pretraining.
struct TaskWorld {
    int C = 0;
    int D = 0;
    int dE = 0;
    double sigma = 0.0;
    std::vector<double> class_means;  // C x D
    ReferenceEmbedder ref;

    std::vector<double> bank_x;       // N x D
    std::vector<int> bank_label;
    std::vector<double> bank_e;       // N x dE, reference embedding of each bank input
    std::vector<std::uint8_t> bank_digital_success;
    std::vector<double> bank_digital_dsem;

    std::vector<double> val_x;        // V x D
    std::vector<int> val_label;
    std::vector<double> probe_x;      // P x D

    std::vector<double> null_direction;  // unit vector with E(v) = 0 (task-irrelevant direction)
    CodecParams pretrained;
    double pretrain_final_loss = 0.0;

    std::size_t bank_size() const { return bank_label.size(); }
    const double* x(std::size_t i) const { return bank_x.data() + i * static_cast<std::size_t>(D); }
    const double* e(std::size_t i) const { return bank_e.data() + i * static_cast<std::size_t>(dE); }
    SemanticSample sample(std::size_t i) const;
    std::size_t validation_size() const { return val_label.size(); }
    std::size_t probe_size() const { return probe_x.size() / static_cast<std::size_t>(D); }

    // Shift vector of RMS magnitude * sigma per coordinate along the null direction.
    std::vector<double> shift_vector(double magnitude) const;
};

std::shared_ptr<const TaskWorld> build_world(const CodecConfig& cc, const ChannelConfig& ch, std::uint64_t seed);

// Class means with pairwise distance >= 2 sigma, drawn from N(0, scale^2) per coordinate.
std::vector<double> draw_class_means(int C, int D, double sigma, double scale, Rng& rng);

// Offline SGD on the surrogate loss with channel-noise augmentation covering
// all three token modes (truncated, full, repeated).
double pretrain_codec(CodecParams& p, const TaskWorld& w, const CodecConfig& cc, Rng& rng);

// Fraction of validation samples classified correctly. With noise_sd > 0 every
// sample sees a fixed Gaussian draw (same draws for every codec scored on this world).
double validation_tsr(const CodecParams& p, const TaskWorld& w, double noise_sd = 0.0);

}  // namespace semran::codec
