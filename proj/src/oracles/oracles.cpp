#include "semran/oracles/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "json.hpp"
#include "semran/codec/codec.hpp"
#include "semran/control/agent.hpp"
#include "semran/sim/errors.hpp"

namespace semran::oracles {

std::vector<bool> brute_force_frontier(const std::vector<kpi::Point>& pts) {
    std::vector<bool> keep(pts.size(), true);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = 0; j < pts.size(); ++j) {
            const auto& p = pts[j];
            const auto& q = pts[i];
            const bool le = p.latency <= q.latency && p.energy <= q.energy;
            const bool lt = p.latency < q.latency || p.energy < q.energy;
            if (le && lt) {
                keep[i] = false;
                break;
            }
        }
    }
    return keep;
}

namespace {

double rel_err(const std::vector<double>& a, const std::vector<double>& n) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - n[i]) * (a[i] - n[i]);
        den += n[i] * n[i];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

}  // namespace

GradCheck gradcheck_codec(int instances, std::uint64_t seed, double h) {
    const int d = 4, D = 8, dE = 4, C = 3, batch = 5;
    GradCheck out;
    for (int k = 0; k < instances; ++k) {
        Rng rng(seed, stream_id("oracle.gradcheck.codec", static_cast<std::uint64_t>(k)));
        std::vector<double> means(static_cast<std::size_t>(C) * D);
        for (auto& m : means) m = rng.normal();
        const auto ref = codec::ReferenceEmbedder::make(dE, means, C, D, rng);
        auto p = codec::CodecParams::random_init(d, D, rng);
        codec::SlowBatch b(D, d);
        std::vector<double> x(D), gain(d), noise(d), zr(d, 0.0), xh(D, 0.0);
        for (int i = 0; i < batch; ++i) {
            for (auto& v : x) v = rng.normal();
            for (int j = 0; j < d; ++j) {
                gain[j] = (i == 0 && j >= d / 2) ? 0.0 : 1.0;  // one truncated sample
                noise[j] = gain[j] * 0.3 * rng.normal();
            }
            b.push(x.data(), gain.data(), noise.data(), zr.data(), xh.data());
        }
        const auto analytic = codec::surrogate_loss_grad(p, b, ref).grad;
        auto theta = p.flatten();
        std::vector<double> numeric(theta.size());
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double keep = theta[i];
            theta[i] = keep + h;
            p.unflatten(theta);
            const double lp = codec::surrogate_loss(p, b, ref);
            theta[i] = keep - h;
            p.unflatten(theta);
            const double lm = codec::surrogate_loss(p, b, ref);
            theta[i] = keep;
            numeric[i] = (lp - lm) / (2.0 * h);
        }
        p.unflatten(theta);
        out.max_rel_err = std::max(out.max_rel_err, rel_err(analytic, numeric));
        ++out.instances;
    }
    return out;
}

GradCheck gradcheck_actor(int instances, std::uint64_t seed, double h) {
    const int A = 3, F = 4, agents = 2, steps = 6;
    GradCheck out;
    for (int k = 0; k < instances; ++k) {
        Rng rng(seed, stream_id("oracle.gradcheck.actor", static_cast<std::uint64_t>(k)));
        auto p = control::PolicyParams::zeros(agents, A, F, F, true);
        for (auto& a : p.actor)
            for (auto& v : a) v = 0.5 * rng.normal();
        auto old = p;
        // Small offset keeps every ratio away from the clip corners.
        for (auto& a : old.actor)
            for (auto& v : a) v += 0.01 * rng.normal();
        std::vector<control::Step> traj;
        for (int i = 0; i < steps; ++i) {
            control::Step s;
            s.agent = i % agents;
            s.features.resize(F);
            for (auto& f : s.features) f = rng.normal();
            s.action = static_cast<int>(rng.below(A));
            traj.push_back(s);
        }
        std::vector<double> adv(steps);
        for (auto& a : adv) a = rng.normal();
        control::UpdateConfig u;
        u.entropy_weight = 0.05;

        const auto analytic = control::actor_gradient(p, old, traj, adv, u);
        std::vector<double> numeric(analytic.size());
        std::size_t idx = 0;
        for (int ag = 0; ag < agents; ++ag) {
            for (std::size_t i = 0; i < p.actor[ag].size(); ++i, ++idx) {
                const double keep = p.actor[ag][i];
                p.actor[ag][i] = keep + h;
                const double fp = control::actor_objective(p, old, traj, adv, u);
                p.actor[ag][i] = keep - h;
                const double fm = control::actor_objective(p, old, traj, adv, u);
                p.actor[ag][i] = keep;
                numeric[idx] = (fp - fm) / (2.0 * h);
            }
        }
        out.max_rel_err = std::max(out.max_rel_err, rel_err(analytic, numeric));
        ++out.instances;
    }
    return out;
}

std::vector<std::pair<int, int>> pure_nash(const engine::MatrixGame& g) {
    std::vector<std::pair<int, int>> out;
    for (int a0 = 0; a0 < 3; ++a0) {
        for (int a1 = 0; a1 < 3; ++a1) {
            bool ok = true;
            for (int x = 0; x < 3 && ok; ++x) ok = g.payoff[0][x][a1] <= g.payoff[0][a0][a1];
            for (int y = 0; y < 3 && ok; ++y) ok = g.payoff[1][a0][y] <= g.payoff[1][a0][a1];
            if (ok) out.emplace_back(a0, a1);
        }
    }
    return out;
}

KpiCheck kpi_from_jsonl(const std::string& text) {
    KpiCheck k;
    std::istringstream in(text);
    std::string line;
    double energy = 0.0, lat = 0.0, bw = 0.0;
    std::map<int, long> hist;
    std::vector<std::pair<long, double>> rewards;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        if (j.contains("schema") || j.contains("type")) continue;
        ++k.rows;
        k.tasks += j.at("n").get<long>();
        k.successes += j.at("s").get<long>();
        energy += j.at("e").get<double>();
        lat += j.at("lat").get<double>();
        bw += j.at("bw").get<double>();
        for (const auto& p : j.at("lh")) hist[p.at(0).get<int>()] += p.at(1).get<long>();
        rewards.emplace_back(j.at("t").get<long>(), j.at("rm").get<double>());
    }
    if (k.rows == 0) throw EmptyTrace("trace has no slot rows");
    k.tsr = k.tasks ? static_cast<double>(k.successes) / static_cast<double>(k.tasks) : 0.0;
    const double mean_bw = bw / static_cast<double>(k.rows);
    k.sbe = mean_bw > 0 ? k.tsr / mean_bw : 0.0;
    k.mean_latency_slots = k.tasks ? lat / static_cast<double>(k.tasks) : 0.0;
    // 95th percentile: upper edge of the first bin whose cumulative count reaches 95%.
    long cum = 0;
    for (const auto& [bin, c] : hist) {
        cum += c;
        if (static_cast<double>(cum) >= 0.95 * static_cast<double>(k.tasks)) {
            k.p95_latency_slots = (bin + 1) * 0.05;
            break;
        }
    }
    k.energy_available = k.successes > 0;
    k.energy_per_success_j = k.energy_available ? energy / static_cast<double>(k.successes) : 0.0;

    std::sort(rewards.begin(), rewards.end());
    const long n = static_cast<long>(rewards.size());
    double s = 0.0;
    for (const auto& r : rewards) s += r.second;
    k.reward_mean = s / static_cast<double>(n);
    const long start = n - n / 3;
    double m = 0.0, m2 = 0.0;
    for (long i = start; i < n; ++i) m += rewards[i].second;
    m /= static_cast<double>(n - start);
    for (long i = start; i < n; ++i) m2 += (rewards[i].second - m) * (rewards[i].second - m);
    k.reward_var_final_third = m2 / static_cast<double>(n - start);
    // Slope against the sample index 0..n-1 by the normal equations.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (long i = 0; i < n; ++i) {
        const double x = static_cast<double>(i), y = rewards[i].second;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double den = static_cast<double>(n) * sxx - sx * sx;
    k.reward_slope = den != 0.0 ? (static_cast<double>(n) * sxy - sx * sy) / den : 0.0;
    return k;
}

double kpi_max_abs_diff(const KpiCheck& o, const kpi::KpiRecord& k) {
    double d = 0.0;
    auto upd = [&](double a, double b) { d = std::max(d, std::abs(a - b)); };
    upd(o.tsr, k.tsr);
    upd(o.sbe, k.sbe);
    upd(o.mean_latency_slots, k.mean_latency_slots);
    upd(o.p95_latency_slots, k.p95_latency_slots);
    upd(static_cast<double>(o.tasks), static_cast<double>(k.tasks));
    upd(static_cast<double>(o.successes), static_cast<double>(k.successes));
    if (o.energy_available != k.energy_available) return INFINITY;
    if (o.energy_available) upd(o.energy_per_success_j, k.energy_per_success_j);
    upd(o.reward_mean, k.reward_mean);
    upd(o.reward_var_final_third, k.reward_var_final_third);
    upd(o.reward_slope, k.reward_slope);
    return d;
}

}  // namespace semran::oracles
