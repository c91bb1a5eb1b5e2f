#include "semran/codec/task_source.hpp"

#include <cmath>

#include "semran/kernels/kernels.hpp"
#include "semran/phy/channel.hpp"
#include "semran/sim/errors.hpp"

namespace semran::codec {

namespace k = semran::kernels;

SemanticSample TaskWorld::sample(std::size_t i) const {
    SemanticSample s;
    s.x.assign(x(i), x(i) + D);
    s.label = bank_label[i];
    s.task_id = static_cast<long>(i);
    return s;
}

std::vector<double> TaskWorld::shift_vector(double magnitude) const {
    std::vector<double> v(null_direction);
    const double s = magnitude * sigma * std::sqrt(static_cast<double>(D));
    for (auto& x : v) x *= s;
    return v;
}

std::vector<double> draw_class_means(int C, int D, double sigma, double scale, Rng& rng) {
    std::vector<double> m(static_cast<std::size_t>(C) * D);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        for (auto& v : m) v = scale * rng.normal();
        bool ok = true;
        for (int a = 0; a < C && ok; ++a)
            for (int b = a + 1; b < C && ok; ++b)
                ok = std::sqrt(k::sqdist(m.data() + static_cast<std::size_t>(a) * D,
                                         m.data() + static_cast<std::size_t>(b) * D, D)) >= 2.0 * sigma;
        if (ok) return m;
    }
    throw ValidationError("could not draw class means with pairwise distance >= 2 sigma");
}

namespace {

void draw_samples(const std::vector<double>& means, int C, int D, double sigma, std::size_t n, Rng& rng,
                  std::vector<double>& xs, std::vector<int>& labels) {
    xs.resize(n * static_cast<std::size_t>(D));
    labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(C)));
        labels[i] = c;
        for (int j = 0; j < D; ++j)
            xs[i * D + j] = means[static_cast<std::size_t>(c) * D + j] + sigma * rng.normal();
    }
}

}  // namespace

double validation_tsr(const CodecParams& p, const TaskWorld& w, double noise_sd) {
    std::vector<double> z(p.d), e(w.dE);
    const auto pd = project_decoder(p, w.ref);
    Rng noise(w.ref.hash(), stream_id("world.validation_noise"));
    std::size_t ok = 0;
    for (std::size_t i = 0; i < w.validation_size(); ++i) {
        encode_into(w.val_x.data() + i * w.D, p, z.data());
        if (noise_sd > 0.0)
            for (auto& v : z) v += noise_sd * noise.normal();
        pd.apply(z.data(), e.data());
        if (nearest_class_embedded(e.data(), w.ref) == w.val_label[i]) ++ok;
    }
    return w.validation_size() ? static_cast<double>(ok) / static_cast<double>(w.validation_size()) : 0.0;
}

double pretrain_codec(CodecParams& p, const TaskWorld& w, const CodecConfig& cc, Rng& rng) {
    if (cc.pretrain_steps <= 0 || cc.pretrain_lr <= 0) return 0.0;
    const double noise_sd = std::sqrt(std::pow(10.0, -cc.pretrain_snr_db / 10.0));
    SlowBatch batch(p.D, p.d);
    std::vector<double> gain(p.d), noise(p.d), zr(p.d), xh(p.D);
    double last = 0.0;
    for (int step = 0; step < cc.pretrain_steps; ++step) {
        batch.clear();
        for (int i = 0; i < cc.pretrain_batch; ++i) {
            const std::size_t idx = rng.below(w.bank_size());
            const int mode = static_cast<int>(rng.below(4));  // 0 truncated, 1-2 full, 3 repeated
            const int keep = mode == 0 ? std::max(1, p.d / 2) : p.d;
            const double sd = mode == 3 ? noise_sd / std::sqrt(2.0) : noise_sd;
            for (int j = 0; j < p.d; ++j) {
                gain[j] = j < keep ? 1.0 : 0.0;
                noise[j] = j < keep ? sd * rng.normal() : 0.0;
            }
            batch.push(w.x(idx), gain.data(), noise.data(), zr.data(), xh.data());
        }
        auto r = slow_train_step(p, batch, cc.pretrain_lr, w.ref);
        if (r.accepted) {
            p = std::move(r.params);
            last = r.loss;
        }
    }
    p.version = 1;
    p.parent_version = 0;
    return last;
}

std::shared_ptr<const TaskWorld> build_world(const CodecConfig& cc, const ChannelConfig& ch, std::uint64_t seed) {
    auto w = std::make_shared<TaskWorld>();
    w->C = cc.n_classes;
    w->D = cc.input_dim;
    w->dE = 8;
    w->sigma = cc.class_sigma;

    Rng means_rng(seed, stream_id("world.class_means"));
    w->class_means = draw_class_means(w->C, w->D, w->sigma, cc.class_mean_scale, means_rng);
    Rng ref_rng(seed, stream_id("world.reference"));
    w->ref = ReferenceEmbedder::make(w->dE, w->class_means, w->C, w->D, ref_rng);

    Rng bank_rng(seed, stream_id("world.bank"));
    draw_samples(w->class_means, w->C, w->D, w->sigma, static_cast<std::size_t>(cc.task_bank_size), bank_rng,
                 w->bank_x, w->bank_label);
    Rng val_rng(seed, stream_id("world.validation"));
    draw_samples(w->class_means, w->C, w->D, w->sigma, static_cast<std::size_t>(cc.validation_size), val_rng,
                 w->val_x, w->val_label);
    Rng probe_rng(seed, stream_id("world.probe"));
    std::vector<int> probe_labels;
    draw_samples(w->class_means, w->C, w->D, w->sigma, static_cast<std::size_t>(cc.probe_size), probe_rng,
                 w->probe_x, probe_labels);

    const std::size_t n = w->bank_size();
    w->bank_e.resize(n * w->dE);
    w->bank_digital_success.resize(n);
    w->bank_digital_dsem.resize(n);
    std::vector<double> q(w->D), eq(w->dE);
    for (std::size_t i = 0; i < n; ++i) {
        w->ref.embed(w->x(i), w->bank_e.data() + i * w->dE);
        phy::quantize_dequantize(w->x(i), w->D, ch.bits_per_dim, ch.quant_range, q.data());
        w->ref.embed(q.data(), eq.data());
        w->bank_digital_success[i] = nearest_class_embedded(eq.data(), w->ref) == w->bank_label[i] ? 1 : 0;
        w->bank_digital_dsem[i] = distortion_from_embedded(w->e(i), eq.data(), w->dE).value;
    }

    Rng null_rng(seed, stream_id("world.null_direction"));
    std::vector<double> v(w->D), pv(w->dE);
    for (;;) {
        for (auto& x : v) x = null_rng.normal();
        for (int pass = 0; pass < 2; ++pass) {
            w->ref.embed(v.data(), pv.data());
            for (int r = 0; r < w->dE; ++r)
                k::axpy(-pv[r], w->ref.projection().data() + static_cast<std::size_t>(r) * w->D, v.data(), w->D);
        }
        const double nv = std::sqrt(k::dot(v.data(), v.data(), w->D));
        if (nv > 1e-6) {
            for (auto& x : v) x /= nv;
            break;
        }
    }
    w->null_direction = v;

    Rng init_rng(seed, stream_id("world.codec_init"));
    w->pretrained = CodecParams::random_init(cc.embed_dim, w->D, init_rng);
    Rng pre_rng(seed, stream_id("world.pretrain"));
    w->pretrain_final_loss = pretrain_codec(w->pretrained, *w, cc, pre_rng);
    return w;
}

}  // namespace semran::codec
