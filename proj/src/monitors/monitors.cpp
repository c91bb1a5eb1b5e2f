#include "semran/monitors/monitors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "semran/kernels/kernels.hpp"

namespace semran::monitors {

namespace k = semran::kernels;

Value drift(const std::vector<double>& z_now, const std::vector<double>& z_then, int d) {
    if (d <= 0 || z_now.size() != z_then.size() || z_now.empty() || z_now.size() % d != 0) return {};
    const std::size_t rows = z_now.size() / static_cast<std::size_t>(d);
    double total = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const double* a = z_now.data() + i * d;
        const double* b = z_then.data() + i * d;
        if (std::memcmp(a, b, sizeof(double) * d) == 0) continue;
        const double na2 = k::dot(a, a, d), nb2 = k::dot(b, b, d);
        if (na2 <= 0.0 || nb2 <= 0.0) {
            total += 2.0;
            continue;
        }
        const double c = std::clamp(k::dot(a, b, d) / std::sqrt(na2 * nb2), -1.0, 1.0);
        total += 1.0 - c;
    }
    return {total / static_cast<double>(rows), true};
}

std::vector<double> smoothed_histogram(const std::vector<double>& samples, int bins, double alpha, double lo,
                                       double hi) {
    std::vector<double> h(bins, 0.0);
    for (double r : samples) {
        int b = static_cast<int>(std::floor((r - lo) / (hi - lo) * bins));
        b = std::clamp(b, 0, bins - 1);
        h[b] += 1.0;
    }
    const double denom = static_cast<double>(samples.size()) + alpha * bins;
    for (auto& v : h) v = (v + alpha) / denom;
    return h;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(0.0, kl);
}

Value ns(const std::vector<double>& recent, const std::vector<double>& older, int bins, double alpha) {
    if (recent.size() < 30 || older.size() < 30) return {};
    return {kl_divergence(smoothed_histogram(recent, bins, alpha), smoothed_histogram(older, bins, alpha)), true};
}

Value osc(const std::vector<double>& current, const std::vector<double>& snapshot) {
    if (current.size() != snapshot.size() || snapshot.empty()) return {};
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < snapshot.size(); ++i) {
        const double diff = current[i] - snapshot[i];
        num += diff * diff;
        den += snapshot[i] * snapshot[i];
    }
    if (den <= 0.0) return {};
    return {std::sqrt(num) / std::sqrt(den), true};
}

std::string to_string(Action a) {
    switch (a) {
        case Action::None: return "none";
        case Action::ThrottleK: return "throttle_k";
        case Action::ReduceC: return "reduce_c";
        case Action::Rollback: return "rollback";
    }
    return "?";
}

Monitor::Monitor(const MonitorConfig& cfg) : cfg_(cfg) {}

void Monitor::record_rewards(long t, const std::vector<double>& rewards) {
    for (double r : rewards) rewards_.emplace_back(t, r);
    const long keep_from = t - 2L * cfg_.window_delta;
    while (!rewards_.empty() && rewards_.front().first < keep_from) rewards_.pop_front();
}

const Monitor::Snapshot* Monitor::snapshot_at(long t) const {
    const Snapshot* best = nullptr;
    for (const auto& s : snaps_)
        if (s.t <= t) best = &s;
    return best;
}

void Monitor::reset_after_rollback(long t) {
    snaps_.clear();
    rewards_.clear();
    drift_streak_ = 0;
    osc_streak_ = 0;
    history_start_ = t;
}

CheckResult Monitor::check(long t, const std::vector<double>& probe_embeddings, int d,
                           const std::vector<double>& policy_flat) {
    CheckResult res;
    res.t = t;
    const long delta = cfg_.window_delta;

    snaps_.push_back({t, probe_embeddings, policy_flat});
    while (!snaps_.empty() && snaps_.front().t < t - 2 * delta) snaps_.pop_front();

    Values v;
    if (t - delta >= history_start_) {
        if (const Snapshot* old = snapshot_at(t - delta); old && old->t >= history_start_) {
            v.drift = drift(probe_embeddings, old->probe, d);
            v.osc = osc(policy_flat, old->policy);
        }
    }
    std::vector<double> recent, older;
    for (const auto& [s, r] : rewards_) {
        if (s >= t - delta && s < t)
            recent.push_back(r);
        else if (s >= t - 2 * delta && s < t - delta)
            older.push_back(r);
    }
    if (t - 2 * delta >= history_start_) v.ns = ns(recent, older, cfg_.histogram_bins, cfg_.laplace_alpha);
    last_ = v;
    res.values = v;

    res.drift_breach = v.drift.available && v.drift.value > cfg_.eps1;
    res.ns_breach = v.ns.available && v.ns.value > cfg_.eps2;
    res.osc_breach = v.osc.available && v.osc.value > cfg_.eps3;
    drift_streak_ = res.drift_breach ? drift_streak_ + 1 : 0;
    osc_streak_ = res.osc_breach ? osc_streak_ + 1 : 0;

    if (t < cfg_.warmup_slots) return res;

    const auto level = cfg_.action;
    const int persist = cfg_.persistence_checks;
    auto log = [&](const std::string& metric, double value, Action a) {
        log_.push_back({t, metric, value, a});
        res.action = a;
        res.cause = metric;
    };

    if (level == MonitorAction::LogOnly) {
        if (res.drift_breach) log_.push_back({t, "drift", v.drift.value, Action::None});
        if (res.ns_breach) log_.push_back({t, "ns", v.ns.value, Action::None});
        if (res.osc_breach) log_.push_back({t, "osc", v.osc.value, Action::None});
        return res;
    }
    if (level == MonitorAction::Rollback && osc_streak_ >= persist) {
        log("osc", v.osc.value, Action::Rollback);
    } else if (level == MonitorAction::Rollback && drift_streak_ >= persist) {
        log("drift", v.drift.value, Action::Rollback);
    } else if (level >= MonitorAction::ReduceC && res.ns_breach && t - last_reduce_ >= delta) {
        last_reduce_ = t;
        log("ns", v.ns.value, Action::ReduceC);
    } else if (res.drift_breach && t - last_throttle_ >= delta) {
        last_throttle_ = t;
        log("drift", v.drift.value, Action::ThrottleK);
    }
    return res;
}

}  // namespace semran::monitors
