#include "semran/codec/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "semran/kernels/kernels.hpp"
#include "semran/sim/errors.hpp"

namespace semran::codec {

namespace k = semran::kernels;

namespace {
constexpr double kNormEps = 1e-12;

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}
}  // namespace

CodecParams CodecParams::zeros(int d, int D) {
    CodecParams p;
    p.d = d;
    p.D = D;
    p.W.assign(static_cast<std::size_t>(d) * D, 0.0);
    p.b.assign(d, 0.0);
    p.Phi.assign(static_cast<std::size_t>(D) * d, 0.0);
    p.c.assign(D, 0.0);
    return p;
}

CodecParams CodecParams::random_init(int d, int D, Rng& rng) {
    CodecParams p = zeros(d, D);
    const double sw = 1.0 / std::sqrt(static_cast<double>(D));
    const double sp = 1.0 / std::sqrt(static_cast<double>(d));
    for (auto& w : p.W) w = sw * rng.normal();
    for (auto& w : p.Phi) w = sp * rng.normal();
    return p;
}

std::vector<double> CodecParams::flatten() const {
    std::vector<double> v;
    v.reserve(n_params());
    v.insert(v.end(), W.begin(), W.end());
    v.insert(v.end(), b.begin(), b.end());
    v.insert(v.end(), Phi.begin(), Phi.end());
    v.insert(v.end(), c.begin(), c.end());
    return v;
}

void CodecParams::unflatten(std::span<const double> v) {
    if (v.size() != n_params()) throw DimensionMismatch("codec parameter vector has wrong length");
    auto it = v.begin();
    for (auto* block : {&W, &b, &Phi, &c}) {
        std::copy(it, it + static_cast<std::ptrdiff_t>(block->size()), block->begin());
        it += static_cast<std::ptrdiff_t>(block->size());
    }
}

bool CodecParams::all_finite() const {
    for (const auto* block : {&W, &b, &Phi, &c})
        for (double x : *block)
            if (!std::isfinite(x)) return false;
    return true;
}

bool same_values(const CodecParams& a, const CodecParams& b) {
    auto eq = [](const std::vector<double>& x, const std::vector<double>& y) {
        return x.size() == y.size() && (x.empty() || std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0);
    };
    return a.d == b.d && a.D == b.D && eq(a.W, b.W) && eq(a.b, b.b) && eq(a.Phi, b.Phi) && eq(a.c, b.c);
}

ReferenceEmbedder::ReferenceEmbedder(int d_E, int D, std::vector<double> projection,
                                     std::vector<double> class_means_embedded)
    : dE_(d_E), D_(D), P_(std::move(projection)), means_(std::move(class_means_embedded)) {
    if (P_.size() != static_cast<std::size_t>(dE_) * D_) throw DimensionMismatch("projection must be d_E x D");
    if (dE_ <= 0 || means_.size() % dE_ != 0) throw DimensionMismatch("embedded class means must be C x d_E");
}

ReferenceEmbedder ReferenceEmbedder::make(int d_E, const std::vector<double>& class_means, int n_classes, int D,
                                          Rng& rng) {
    if (d_E > D) throw DimensionMismatch("reference projection needs d_E <= D");
    if (class_means.size() != static_cast<std::size_t>(n_classes) * D)
        throw DimensionMismatch("class means must be C x D");
    std::vector<double> P(static_cast<std::size_t>(d_E) * D);
    for (int r = 0; r < d_E; ++r) {
        double* row = P.data() + static_cast<std::size_t>(r) * D;
        for (;;) {
            for (int j = 0; j < D; ++j) row[j] = rng.normal();
            // Two Gram-Schmidt passes for numerical orthogonality.
            for (int pass = 0; pass < 2; ++pass)
                for (int q = 0; q < r; ++q) {
                    const double* prev = P.data() + static_cast<std::size_t>(q) * D;
                    k::axpy(-k::dot(row, prev, D), prev, row, D);
                }
            const double n = std::sqrt(k::dot(row, row, D));
            if (n > 1e-6) {
                for (int j = 0; j < D; ++j) row[j] /= n;
                break;
            }
        }
    }
    std::vector<double> means(static_cast<std::size_t>(n_classes) * d_E);
    for (int c = 0; c < n_classes; ++c)
        k::gemv(P.data(), d_E, D, class_means.data() + static_cast<std::size_t>(c) * D,
                means.data() + static_cast<std::size_t>(c) * d_E);
    return ReferenceEmbedder(d_E, D, std::move(P), std::move(means));
}

void ReferenceEmbedder::embed(const double* x, double* out) const { k::gemv(P_.data(), dE_, D_, x, out); }

std::vector<double> ReferenceEmbedder::embed(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != D_) throw DimensionMismatch("input dimension does not match projection");
    std::vector<double> out(dE_);
    embed(x.data(), out.data());
    return out;
}

std::uint64_t ReferenceEmbedder::hash() const {
    std::uint64_t h = fnv1a(&dE_, sizeof dE_);
    h = fnv1a(&D_, sizeof D_, h);
    h = fnv1a(P_.data(), P_.size() * sizeof(double), h);
    return fnv1a(means_.data(), means_.size() * sizeof(double), h);
}

bool encode_into(const double* x, const CodecParams& p, double* z) {
    k::gemv(p.W.data(), p.d, p.D, x, z);
    for (int i = 0; i < p.d; ++i) z[i] = std::tanh(z[i] + p.b[i]);
    const double s2 = k::dot(z, z, p.d);
    if (!(s2 > 0.0) || std::sqrt(s2) < kNormEps) {
        std::fill(z, z + p.d, 0.0);
        return false;
    }
    const double scale = std::sqrt(static_cast<double>(p.d) / s2);
    for (int i = 0; i < p.d; ++i) z[i] *= scale;
    return true;
}

Embedding encode(const SemanticSample& x, const CodecParams& p) {
    if (static_cast<int>(x.x.size()) != p.D) throw DimensionMismatch("sample dimension does not match encoder");
    Embedding e;
    e.z.resize(p.d);
    e.degenerate = !encode_into(x.x.data(), p, e.z.data());
    e.normalized = !e.degenerate;
    return e;
}

void decode_into(const double* z, const CodecParams& p, double* x_hat) {
    k::gemv(p.Phi.data(), p.D, p.d, z, x_hat);
    for (int i = 0; i < p.D; ++i) x_hat[i] += p.c[i];
}

std::vector<double> decode(const Embedding& z_received, const CodecParams& p) {
    if (static_cast<int>(z_received.z.size()) != p.d) throw DimensionMismatch("embedding dimension does not match decoder");
    std::vector<double> out(p.D);
    decode_into(z_received.z.data(), p, out.data());
    return out;
}

Distortion distortion_from_embedded(const double* ex, const double* ex_hat, int dE) {
    const double na2 = k::dot(ex, ex, dE);
    const double nb2 = k::dot(ex_hat, ex_hat, dE);
    if (std::sqrt(na2) < kNormEps || std::sqrt(nb2) < kNormEps) return {2.0, true};
    if (std::memcmp(ex, ex_hat, sizeof(double) * dE) == 0) return {0.0, false};
    // sqrt(a*a) == a exactly in IEEE arithmetic, so antipodal pairs give exactly -1.
    double cosv = k::dot(ex, ex_hat, dE) / std::sqrt(na2 * nb2);
    cosv = std::clamp(cosv, -1.0, 1.0);
    return {1.0 - cosv, false};
}

Distortion semantic_distortion(const SemanticSample& x, std::span<const double> x_hat, const ReferenceEmbedder& ref) {
    if (static_cast<int>(x.x.size()) != ref.input_dim() || static_cast<int>(x_hat.size()) != ref.input_dim())
        throw DimensionMismatch("distortion arguments must have the reference input dimension");
    std::vector<double> a(ref.dim()), b(ref.dim());
    ref.embed(x.x.data(), a.data());
    ref.embed(x_hat.data(), b.data());
    return distortion_from_embedded(a.data(), b.data(), ref.dim());
}

int nearest_class_embedded(const double* e, const ReferenceEmbedder& ref) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < ref.n_classes(); ++c) {
        const double dist = k::sqdist(e, ref.class_mean(c), ref.dim());
        if (dist < best_d) {
            best_d = dist;
            best = c;
        }
    }
    return best;
}

Outcome task_outcome(std::span<const double> x_hat, int true_label, const ReferenceEmbedder& ref) {
    const auto e = ref.embed(x_hat);
    const int pred = nearest_class_embedded(e.data(), ref);
    return {pred, pred == true_label};
}

double confidence_from_distances(std::span<const double> distances) {
    double dmin = std::numeric_limits<double>::infinity();
    for (double d : distances) dmin = std::min(dmin, d);
    double denom = 0.0;
    for (double d : distances) denom += std::exp(-(d - dmin));
    return 1.0 / denom;
}

double semantic_confidence(std::span<const double> x_hat, const ReferenceEmbedder& ref) {
    const auto e = ref.embed(x_hat);
    std::vector<double> dist(ref.n_classes());
    for (int c = 0; c < ref.n_classes(); ++c) dist[c] = std::sqrt(k::sqdist(e.data(), ref.class_mean(c), ref.dim()));
    return confidence_from_distances(dist);
}

void ProjectedDecoder::apply(const double* z, double* out) const {
    k::gemv(M.data(), dE, d, z, out);
    for (int i = 0; i < dE; ++i) out[i] += m0[i];
}

ProjectedDecoder project_decoder(const CodecParams& p, const ReferenceEmbedder& ref) {
    ProjectedDecoder pd;
    pd.dE = ref.dim();
    pd.d = p.d;
    pd.M.assign(static_cast<std::size_t>(pd.dE) * p.d, 0.0);
    pd.m0.assign(pd.dE, 0.0);
    std::vector<double> col(p.D);
    const auto& P = ref.projection();
    for (int r = 0; r < pd.dE; ++r) {
        const double* prow = P.data() + static_cast<std::size_t>(r) * p.D;
        for (int j = 0; j < p.d; ++j) {
            for (int i = 0; i < p.D; ++i) col[i] = p.Phi[static_cast<std::size_t>(i) * p.d + j];
            pd.M[static_cast<std::size_t>(r) * p.d + j] = k::dot(prow, col.data(), p.D);
        }
        pd.m0[r] = k::dot(prow, p.c.data(), p.D);
    }
    return pd;
}

void SlowBatch::clear() {
    x.clear();
    gain.clear();
    noise.clear();
    z_received.clear();
    x_hat.clear();
}

void SlowBatch::push(const double* x_, const double* gain_, const double* noise_, const double* z_rx,
                     const double* x_hat_) {
    x.insert(x.end(), x_, x_ + D);
    gain.insert(gain.end(), gain_, gain_ + d);
    noise.insert(noise.end(), noise_, noise_ + d);
    z_received.insert(z_received.end(), z_rx, z_rx + d);
    x_hat.insert(x_hat.end(), x_hat_, x_hat_ + D);
}

void SlowBatch::keep_last(std::size_t n) {
    const std::size_t m = size();
    if (m <= n) return;
    const std::size_t drop = m - n;
    auto trim = [drop](std::vector<double>& v, int w) {
        v.erase(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(drop * static_cast<std::size_t>(w)));
    };
    trim(x, D);
    trim(gain, d);
    trim(noise, d);
    trim(z_received, d);
    trim(x_hat, D);
}

namespace {

// Forward (and optionally backward) pass for one sample. Returns false if the
// sample is degenerate and must be skipped.
struct Scratch {
    std::vector<double> t, z, zr, xh, u, e, gu, gx, gzr, gt;
    explicit Scratch(int d, int D, int dE)
        : t(d), z(d), zr(d), xh(D), u(dE), e(dE), gu(dE), gx(D), gzr(d), gt(d) {}
};

bool sample_pass(const CodecParams& p, const ReferenceEmbedder& ref, const double* x, const double* gain,
                 const double* noise, Scratch& s, double& loss, std::vector<double>* grad) {
    const int d = p.d, D = p.D, dE = ref.dim();
    k::gemv(p.W.data(), d, D, x, s.t.data());
    for (int i = 0; i < d; ++i) s.t[i] = std::tanh(s.t[i] + p.b[i]);
    const double s2 = k::dot(s.t.data(), s.t.data(), d);
    const double nt = std::sqrt(s2);
    if (!(nt >= kNormEps)) return false;
    const double scale = std::sqrt(static_cast<double>(d)) / nt;
    for (int i = 0; i < d; ++i) {
        s.z[i] = s.t[i] * scale;
        s.zr[i] = gain[i] * s.z[i] + noise[i];
    }
    decode_into(s.zr.data(), p, s.xh.data());
    ref.embed(s.xh.data(), s.u.data());
    ref.embed(x, s.e.data());
    const double nu = std::sqrt(k::dot(s.u.data(), s.u.data(), dE));
    const double ne = std::sqrt(k::dot(s.e.data(), s.e.data(), dE));
    if (!(nu >= kNormEps) || !(ne >= kNormEps)) return false;
    double l = 0.0, hg = 0.0;
    for (int i = 0; i < dE; ++i) {
        const double h = s.u[i] / nu;
        const double a = s.e[i] / ne;
        const double g = h - a;
        l += g * g;
        hg += h * g;
        s.gu[i] = g;
    }
    loss = 0.5 * l;
    if (!grad) return true;

    for (int i = 0; i < dE; ++i) s.gu[i] = (s.gu[i] - (s.u[i] / nu) * hg) / nu;
    std::fill(s.gx.begin(), s.gx.end(), 0.0);
    k::gemv_t_acc(ref.projection().data(), dE, D, s.gu.data(), s.gx.data());

    auto& G = *grad;
    const std::size_t offW = 0, offb = p.W.size(), offPhi = offb + p.b.size(), offc = offPhi + p.Phi.size();
    for (int r = 0; r < D; ++r) {
        k::axpy(s.gx[r], s.zr.data(), G.data() + offPhi + static_cast<std::size_t>(r) * d, d);
        G[offc + r] += s.gx[r];
    }
    std::fill(s.gzr.begin(), s.gzr.end(), 0.0);
    k::gemv_t_acc(p.Phi.data(), D, d, s.gx.data(), s.gzr.data());
    double tg = 0.0;
    for (int i = 0; i < d; ++i) {
        s.gzr[i] *= gain[i];
        tg += (s.t[i] / nt) * s.gzr[i];
    }
    for (int i = 0; i < d; ++i) {
        const double gti = scale * (s.gzr[i] - (s.t[i] / nt) * tg);
        const double gpre = gti * (1.0 - s.t[i] * s.t[i]);
        k::axpy(gpre, x, G.data() + offW + static_cast<std::size_t>(i) * D, D);
        G[offb + i] += gpre;
    }
    return true;
}

void check_batch(const CodecParams& p, const SlowBatch& batch, const ReferenceEmbedder& ref) {
    if (batch.D != p.D || batch.d != p.d) throw DimensionMismatch("slow batch dimensions do not match codec");
    if (ref.input_dim() != p.D) throw DimensionMismatch("reference embedder input dimension does not match codec");
}

}  // namespace

double surrogate_loss(const CodecParams& p, const SlowBatch& batch, const ReferenceEmbedder& ref) {
    check_batch(p, batch, ref);
    Scratch s(p.d, p.D, ref.dim());
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double l = 0.0;
        if (sample_pass(p, ref, batch.x.data() + i * p.D, batch.gain.data() + i * p.d, batch.noise.data() + i * p.d, s,
                        l, nullptr)) {
            total += l;
            ++used;
        }
    }
    return used ? total / static_cast<double>(used) : 0.0;
}

LossGrad surrogate_loss_grad(const CodecParams& p, const SlowBatch& batch, const ReferenceEmbedder& ref) {
    check_batch(p, batch, ref);
    LossGrad out;
    out.grad.assign(p.n_params(), 0.0);
    Scratch s(p.d, p.D, ref.dim());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double l = 0.0;
        if (sample_pass(p, ref, batch.x.data() + i * p.D, batch.gain.data() + i * p.d, batch.noise.data() + i * p.d, s,
                        l, &out.grad)) {
            out.loss += l;
            ++out.used;
        }
    }
    if (out.used) {
        const double inv = 1.0 / static_cast<double>(out.used);
        out.loss *= inv;
        for (auto& g : out.grad) g *= inv;
    }
    return out;
}

TrainResult slow_train_step(const CodecParams& p, const SlowBatch& batch, double gamma, const ReferenceEmbedder& ref) {
    TrainResult r;
    r.params = p;
    if (batch.empty()) {
        r.reason = "empty batch";
        return r;
    }
    if (!(gamma > 0.0)) {
        r.reason = "zero step";
        return r;
    }
    auto lg = surrogate_loss_grad(p, batch, ref);
    r.loss = lg.loss;
    if (lg.used == 0) {
        r.reason = "all samples degenerate";
        return r;
    }
    double n2 = 0.0;
    for (double g : lg.grad) n2 += g * g;
    r.grad_norm = std::sqrt(n2);
    if (!std::isfinite(n2)) {
        r.reason = "non-finite gradient";
        return r;
    }
    auto flat = p.flatten();
    k::axpy(-gamma, lg.grad.data(), flat.data(), flat.size());
    CodecParams next = p;
    next.unflatten(flat);
    if (!next.all_finite()) {
        r.reason = "non-finite parameters";
        return r;
    }
    next.parent_version = p.version;
    next.version = p.version + 1;
    r.params = std::move(next);
    r.accepted = true;
    return r;
}

}  // namespace semran::codec
