#include <cmath>
#include <stdexcept>

#include "semran/engine/engine.hpp"

namespace semran::engine {

SmoothProblem SmoothProblem::make(int n, double noise, Rng& rng) {
    SmoothProblem p;
    p.n = n;
    p.noise = noise;
    p.a.resize(n);
    p.b.resize(n);
    for (int i = 0; i < n; ++i) p.a[i] = rng.normal();
    for (int i = 0; i < n; ++i) p.b[i] = rng.normal();
    return p;
}

void SmoothProblem::optimum(std::vector<double>& theta, std::vector<double>& phi) const {
    theta.resize(n);
    phi.resize(n);
    for (int i = 0; i < n; ++i) {
        phi[i] = b[i];
        theta[i] = a[i] + b[i];
    }
}

void SmoothProblem::sample_grad(const std::vector<double>& theta, const std::vector<double>& phi, Rng& rng,
                                std::vector<double>& g_theta, std::vector<double>& g_phi) const {
    for (int i = 0; i < n; ++i) {
        const double r1 = theta[i] - phi[i] - a[i] + noise * rng.normal();
        const double r2 = phi[i] - b[i] + noise * rng.normal();
        g_theta[i] += r1;
        g_phi[i] += r2 - r1;
    }
}

double SmoothProblem::exact_gradnorm2(const std::vector<double>& theta, const std::vector<double>& phi) const {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r1 = theta[i] - phi[i] - a[i];
        const double r2 = phi[i] - b[i];
        s += r1 * r1 + (r2 - r1) * (r2 - r1);
    }
    return s;
}

double estimate_gradnorm(const SmoothProblem& prob, const std::vector<double>& theta, const std::vector<double>& phi,
                         int m, Rng& rng) {
    if (m < 1) throw std::invalid_argument("estimate_gradnorm needs m >= 1");
    std::vector<double> gt(prob.n, 0.0), gp(prob.n, 0.0);
    for (int j = 0; j < m; ++j) prob.sample_grad(theta, phi, rng, gt, gp);
    double s = 0.0;
    for (int i = 0; i < prob.n; ++i) {
        const double x = gt[i] / m, y = gp[i] / m;
        s += x * x + y * y;
    }
    return s;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

SmoothRun run_smooth(const SmoothProblem& prob, const ScheduleConfig& s, long t_max, int m, int probes_per_decade,
                     std::uint64_t seed) {
    Rng step_rng(seed, stream_id("smooth.steps", 0));
    Rng probe_rng(seed, stream_id("smooth.probe", 0));
    std::vector<double> theta(prob.n, 0.0), phi(prob.n, 0.0);
    std::vector<double> gt(prob.n), gp(prob.n);

    // Log-spaced probe slots from 10 up to t_max.
    std::vector<long> probes;
    const double lo = 1.0, hi = std::log10(static_cast<double>(t_max));
    const int count = static_cast<int>(std::round((hi - lo) * probes_per_decade));
    for (int i = 0; i <= count; ++i) {
        const long p = std::lround(std::pow(10.0, lo + (hi - lo) * i / std::max(1, count)));
        if (probes.empty() || p > probes.back()) probes.push_back(p);
    }

    SmoothRun out;
    double best = INFINITY;
    std::size_t next = 0;
    for (long t = 0; t <= t_max && next < probes.size(); ++t) {
        if (t == probes[next]) {
            best = std::min(best, estimate_gradnorm(prob, theta, phi, m, probe_rng));
            if (t >= 1000) {
                out.T.push_back(t);
                out.min_estimate.push_back(best);
            }
            ++next;
        }
        const auto st = step_sizes(s, t);
        std::fill(gt.begin(), gt.end(), 0.0);
        std::fill(gp.begin(), gp.end(), 0.0);
        prob.sample_grad(theta, phi, step_rng, gt, gp);
        for (int i = 0; i < prob.n; ++i) {
            theta[i] -= st.eta * gt[i];
            phi[i] -= st.gamma * gp[i];
        }
    }
    std::vector<double> tx(out.T.begin(), out.T.end());
    out.slope = loglog_slope(tx, out.min_estimate);
    return out;
}

}  // namespace semran::engine
