#include "semran/kpi/kpi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semran/sim/errors.hpp"

namespace semran::kpi {

using nlohmann::json;

int latency_bin(double latency_slots) {
    return static_cast<int>(std::floor(std::max(0.0, latency_slots) / kLatencyBinSlots));
}

double j_of(const std::vector<AgentSlot>& agents, const std::array<double, 4>& w) {
    double J = 0.0;
    for (const auto& a : agents) J += w[0] * a.u - w[1] * a.dist - w[2] * a.pe - w[3] * a.pl;
    return J;
}

json to_json(const TraceRow& r) {
    json j;
    j["t"] = r.t;
    json ag = json::array();
    for (const auto& a : r.agents)
        ag.push_back({a.a, a.bw, a.r, a.u, a.dist, a.pe, a.pl, a.n, a.s});
    j["ag"] = std::move(ag);
    j["w"] = r.w;
    j["J"] = r.J;
    j["n"] = r.n;
    j["s"] = r.s;
    j["e"] = r.e;
    j["lat"] = r.lat;
    j["bw"] = r.bw_alloc;
    j["dsem"] = r.dsem;
    j["rm"] = r.rm;
    j["tsr"] = r.tsr;
    j["gn"] = r.gradnorm ? json(*r.gradnorm) : json(nullptr);
    j["cv"] = r.cv;
    j["mon"] = r.mon;
    if (!r.act.empty()) j["act"] = r.act;
    json lh = json::array();
    for (const auto& [b, c] : r.lh) lh.push_back({b, c});
    j["lh"] = std::move(lh);
    return j;
}

TraceRow row_from_json(const json& j) {
    try {
        TraceRow r;
        r.t = j.at("t").get<long>();
        for (const auto& a : j.at("ag")) {
            AgentSlot s;
            s.a = a.at(0).get<int>();
            s.bw = a.at(1).get<int>();
            s.r = a.at(2).get<double>();
            s.u = a.at(3).get<double>();
            s.dist = a.at(4).get<double>();
            s.pe = a.at(5).get<double>();
            s.pl = a.at(6).get<double>();
            s.n = a.at(7).get<int>();
            s.s = a.at(8).get<int>();
            r.agents.push_back(s);
        }
        r.w = j.at("w").get<std::array<double, 4>>();
        r.J = j.at("J").get<double>();
        r.n = j.at("n").get<int>();
        r.s = j.at("s").get<int>();
        r.e = j.at("e").get<double>();
        r.lat = j.at("lat").get<double>();
        r.bw_alloc = j.at("bw").get<int>();
        r.dsem = j.at("dsem").get<double>();
        r.rm = j.at("rm").get<double>();
        r.tsr = j.at("tsr").get<double>();
        if (!j.at("gn").is_null()) r.gradnorm = j.at("gn").get<double>();
        r.cv = j.at("cv").get<std::uint64_t>();
        r.mon = j.at("mon").get<int>();
        if (j.contains("act")) r.act = j.at("act").get<std::string>();
        for (const auto& p : j.at("lh")) r.lh[p.at(0).get<int>()] = p.at(1).get<int>();
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("trace row: ") + e.what());
    }
}

std::string to_line(const TraceRow& r) { return to_json(r).dump(); }

double p95_from_histogram(const std::map<int, int>& hist, long total) {
    if (total <= 0) return 0.0;
    const double need = 0.95 * static_cast<double>(total);
    long cum = 0;
    for (const auto& [b, c] : hist) {
        cum += c;
        if (static_cast<double>(cum) >= need) return (b + 1) * kLatencyBinSlots;
    }
    return hist.empty() ? 0.0 : (hist.rbegin()->first + 1) * kLatencyBinSlots;
}

std::vector<double> moving_average(const std::vector<double>& v, int window) {
    std::vector<double> out(v.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        acc += v[i];
        if (i >= static_cast<std::size_t>(window)) acc -= v[i - window];
        const std::size_t n = std::min<std::size_t>(i + 1, window);
        out[i] = acc / static_cast<double>(n);
    }
    return out;
}

std::vector<double> reward_curve(const std::vector<double>& per_slot, int window) {
    return moving_average(per_slot, window);
}

StabilityStats stability_stats(const std::vector<double>& r) {
    StabilityStats s;
    const std::size_t n = r.size();
    if (n < 2) return s;
    const std::size_t start = n - n / 3;
    double mean = 0.0;
    for (std::size_t i = start; i < n; ++i) mean += r[i];
    mean /= static_cast<double>(n - start);
    double var = 0.0;
    for (std::size_t i = start; i < n; ++i) var += (r[i] - mean) * (r[i] - mean);
    s.variance_final_third = var / static_cast<double>(n - start);

    const double xm = (static_cast<double>(n) - 1.0) / 2.0;
    double ym = 0.0;
    for (double v : r) ym += v;
    ym /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = static_cast<double>(i) - xm;
        sxy += dx * (r[i] - ym);
        sxx += dx * dx;
    }
    s.lsq_slope = sxx > 0.0 ? sxy / sxx : 0.0;

    // Sign changes of the derivative of the 100-sample smoothed series; the
    // first window is skipped so the warm-up of the average does not count.
    const auto sm = moving_average(r, kRewardCurveWindow);
    int last = 0;
    for (std::size_t i = kRewardCurveWindow; i < n; ++i) {
        const double d = sm[i] - sm[i - 1];
        const double tol = 1e-12 * std::max(1.0, std::abs(sm[i]));
        const int sign = d > tol ? 1 : (d < -tol ? -1 : 0);
        if (sign == 0) continue;
        if (last != 0 && sign != last) ++s.oscillation_count;
        last = sign;
    }
    return s;
}

std::optional<long> slots_to_stabilize(const std::vector<double>& series, int window, double band) {
    if (series.size() < static_cast<std::size_t>(window)) return std::nullopt;
    const auto ma = moving_average(series, window);
    const double fin = ma.back();
    const double tol = band * std::abs(fin);
    long first = static_cast<long>(ma.size()) - 1;
    for (long i = static_cast<long>(ma.size()) - 1; i >= window - 1; --i) {
        if (std::abs(ma[i] - fin) > tol) break;
        first = i;
    }
    return first;
}

KpiRecord compute_kpis(const std::vector<TraceRow>& trace) {
    if (trace.empty()) throw EmptyTrace("compute_kpis on an empty trace");
    KpiRecord k;
    double energy = 0.0, lat = 0.0, bw = 0.0;
    std::map<int, int> hist;
    std::vector<const TraceRow*> sorted;
    sorted.reserve(trace.size());
    for (const auto& r : trace) {
        k.tasks += r.n;
        k.successes += r.s;
        energy += r.e;
        lat += r.lat;
        bw += r.bw_alloc;
        for (const auto& [b, c] : r.lh) hist[b] += c;
        sorted.push_back(&r);
    }
    std::stable_sort(sorted.begin(), sorted.end(), [](const TraceRow* a, const TraceRow* b) { return a->t < b->t; });
    std::vector<double> rm;
    rm.reserve(sorted.size());
    for (const auto* r : sorted) rm.push_back(r->rm);

    k.tsr = k.tasks > 0 ? static_cast<double>(k.successes) / static_cast<double>(k.tasks) : 0.0;
    k.mean_bw_alloc = bw / static_cast<double>(trace.size());
    k.sbe = k.mean_bw_alloc > 0.0 ? k.tsr / k.mean_bw_alloc : 0.0;
    k.mean_latency_slots = k.tasks > 0 ? lat / static_cast<double>(k.tasks) : 0.0;
    k.p95_latency_slots = p95_from_histogram(hist, k.tasks);
    k.energy_available = k.successes > 0;
    k.energy_per_success_j =
        k.energy_available ? energy / static_cast<double>(k.successes) : std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (double v : rm) sum += v;
    k.reward_mean = sum / static_cast<double>(rm.size());
    const auto st = stability_stats(rm);
    k.reward_var_final_third = st.variance_final_third;
    k.reward_var_final_third_smoothed = stability_stats(reward_curve(rm)).variance_final_third;
    k.reward_slope = st.lsq_slope;
    k.oscillation_count = st.oscillation_count;
    k.slots_to_stabilize = slots_to_stabilize(rm);
    if (k.slots_to_stabilize) k.slots_to_stabilize = sorted[static_cast<std::size_t>(*k.slots_to_stabilize)]->t;
    return k;
}

bool dominates(const Point& p, const Point& q) {
    return p.latency <= q.latency && p.energy <= q.energy && (p.latency < q.latency || p.energy < q.energy);
}

std::vector<bool> frontier_mask(const std::vector<Point>& pts) {
    // Sort by (latency, energy); a point survives when its energy is strictly
    // below the best energy seen among points with strictly smaller latency
    // and not beaten within its own latency group.
    const std::size_t n = pts.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (pts[a].latency != pts[b].latency) return pts[a].latency < pts[b].latency;
        return pts[a].energy < pts[b].energy;
    });
    std::vector<bool> keep(n, false);
    double best = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && pts[idx[j]].latency == pts[idx[i]].latency) ++j;
        const double group_min = pts[idx[i]].energy;
        for (std::size_t q = i; q < j; ++q) {
            const double e = pts[idx[q]].energy;
            keep[idx[q]] = e == group_min && e < best;
        }
        best = std::min(best, group_min);
        i = j;
    }
    return keep;
}

std::vector<Point> pareto_frontier(const std::vector<Point>& pts) {
    const auto keep = frontier_mask(pts);
    std::vector<Point> out;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (keep[i]) out.push_back(pts[i]);
    return out;
}

}  // namespace semran::kpi
