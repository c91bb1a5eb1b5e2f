#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semran/sim/rng.hpp"

namespace semran::codec {

struct SemanticSample {
    std::vector<double> x;
    int label = 0;
    long task_id = 0;
};

struct Embedding {
    std::vector<double> z;
    bool normalized = false;
    bool degenerate = false;  // zero pre-normalization vector, normalization skipped
};

// Encoder z = normalize(tanh(W x + b)); decoder x_hat = Phi z + c. Row-major storage.
struct CodecParams {
    int d = 0;  // embedding dim
    int D = 0;  // input dim
    std::vector<double> W;    // d x D
    std::vector<double> b;    // d
    std::vector<double> Phi;  // D x d
    std::vector<double> c;    // D
    std::uint64_t version = 1;
    std::uint64_t parent_version = 0;

    static CodecParams zeros(int d, int D);
    static CodecParams random_init(int d, int D, Rng& rng);
    std::size_t n_params() const { return W.size() + b.size() + Phi.size() + c.size(); }
    // Flat views in (W, b, Phi, c) order, used by gradient checks and drift tests.
    std::vector<double> flatten() const;
    void unflatten(std::span<const double> v);
    bool all_finite() const;
};

bool same_values(const CodecParams& a, const CodecParams& b);

// Frozen yardstick: a d_E x D projection with orthonormal rows plus the
// projected class means used by the nearest-mean task oracle.
class ReferenceEmbedder {
public:
    ReferenceEmbedder() = default;
    ReferenceEmbedder(int d_E, int D, std::vector<double> projection, std::vector<double> class_means_embedded);

    // Random orthonormal rows (Gram-Schmidt on Gaussian rows) and the embedded means.
    static ReferenceEmbedder make(int d_E, const std::vector<double>& class_means, int n_classes, int D, Rng& rng);

    int dim() const { return dE_; }
    int input_dim() const { return D_; }
    int n_classes() const { return static_cast<int>(means_.size()) / (dE_ > 0 ? dE_ : 1); }
    const std::vector<double>& projection() const { return P_; }
    const std::vector<double>& class_means_embedded() const { return means_; }
    const double* class_mean(int k) const { return means_.data() + static_cast<std::size_t>(k) * dE_; }

    void embed(const double* x, double* out) const;
    std::vector<double> embed(std::span<const double> x) const;
    std::uint64_t hash() const;

private:
    int dE_ = 0;
    int D_ = 0;
    std::vector<double> P_;
    std::vector<double> means_;
};

struct Distortion {
    double value = 0.0;
    bool degenerate = false;
};

struct Outcome {
    int predicted = 0;
    bool success = false;
};

Embedding encode(const SemanticSample& x, const CodecParams& p);
// Raw-pointer form used in hot loops; returns false when the embedding is degenerate.
bool encode_into(const double* x, const CodecParams& p, double* z);

std::vector<double> decode(const Embedding& z_received, const CodecParams& p);
void decode_into(const double* z, const CodecParams& p, double* x_hat);

Distortion semantic_distortion(const SemanticSample& x, std::span<const double> x_hat, const ReferenceEmbedder& ref);
// Same metric on already-projected vectors.
Distortion distortion_from_embedded(const double* ex, const double* ex_hat, int dE);

Outcome task_outcome(std::span<const double> x_hat, int true_label, const ReferenceEmbedder& ref);
int nearest_class_embedded(const double* e, const ReferenceEmbedder& ref);

double semantic_confidence(std::span<const double> x_hat, const ReferenceEmbedder& ref);
double confidence_from_distances(std::span<const double> distances);

// Composite of projection and decoder: E(x_hat) = M z + m0. Recomputed per codec version.
struct ProjectedDecoder {
    int dE = 0;
    int d = 0;
    std::vector<double> M;   // dE x d
    std::vector<double> m0;  // dE
    void apply(const double* z, double* out) const;
};
ProjectedDecoder project_decoder(const CodecParams& p, const ReferenceEmbedder& ref);

// Slow-loop training batch. Each sample stores the raw input, the per-dimension
// channel gain (1 transmitted, 0 truncated) and the additive noise, so the loss
// can be re-evaluated at any parameter value: z_r = gain * z + noise.
struct SlowBatch {
    int D = 0;
    int d = 0;
    std::vector<double> x;
    std::vector<double> gain;
    std::vector<double> noise;
    std::vector<double> z_received;
    std::vector<double> x_hat;

    SlowBatch() = default;
    SlowBatch(int D_, int d_) : D(D_), d(d_) {}
    std::size_t size() const { return D > 0 ? x.size() / static_cast<std::size_t>(D) : 0; }
    bool empty() const { return size() == 0; }
    void clear();
    void push(const double* x_, const double* gain_, const double* noise_, const double* z_rx, const double* x_hat_);
    // Keeps only the most recent n samples.
    void keep_last(std::size_t n);
};

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;  // flattened like CodecParams::flatten
    std::size_t used = 0;      // samples that contributed (non-degenerate)
};

// Mean of 0.5 * || E(x)/|E(x)| - E(x_hat)/|E(x_hat)| ||^2 over the batch.
double surrogate_loss(const CodecParams& p, const SlowBatch& batch, const ReferenceEmbedder& ref);
LossGrad surrogate_loss_grad(const CodecParams& p, const SlowBatch& batch, const ReferenceEmbedder& ref);

struct TrainResult {
    CodecParams params;
    bool accepted = false;
    std::string reason;  // empty when accepted
    double loss = 0.0;
    double grad_norm = 0.0;
};

// One SGD step of size gamma. A zero step, an empty batch or a non-finite
// gradient returns the input parameters unchanged (no version bump).
TrainResult slow_train_step(const CodecParams& p, const SlowBatch& batch, double gamma, const ReferenceEmbedder& ref);

}  // namespace semran::codec
