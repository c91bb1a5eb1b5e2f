#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semran/kpi/trace.hpp"

namespace semran::kpi {

inline constexpr int kRewardCurveWindow = 100;
inline constexpr int kStabilizeWindow = 500;
inline constexpr double kStabilizeBand = 0.02;

struct KpiRecord {
    double tsr = 0.0;
    double sbe = 0.0;
    double mean_latency_slots = 0.0;
    double p95_latency_slots = 0.0;
    double energy_per_success_j = 0.0;
    bool energy_available = false;
    double reward_mean = 0.0;
    double reward_var_final_third = 0.0;           // per-slot mean reward, final third
    double reward_var_final_third_smoothed = 0.0;  // same on the 100-slot moving average
    double reward_slope = 0.0;
    int oscillation_count = 0;
    std::optional<long> slots_to_stabilize;
    long tasks = 0;
    long successes = 0;
    double mean_bw_alloc = 0.0;
};

KpiRecord compute_kpis(const std::vector<TraceRow>& trace);

// Trailing moving average of per-slot mean reward (window kRewardCurveWindow).
std::vector<double> reward_curve(const std::vector<double>& per_slot, int window = kRewardCurveWindow);
std::vector<double> moving_average(const std::vector<double>& v, int window);

struct StabilityStats {
    double variance_final_third = 0.0;
    double lsq_slope = 0.0;
    int oscillation_count = 0;
};

StabilityStats stability_stats(const std::vector<double>& rewards);

// First index from which the 500-sample moving average stays within +-2% of its
// final value; nullopt when the series is shorter than the window.
std::optional<long> slots_to_stabilize(const std::vector<double>& series, int window = kStabilizeWindow,
                                       double band = kStabilizeBand);

struct Point {
    double latency = 0.0;
    double energy = 0.0;
    bool operator==(const Point&) const = default;
};

bool dominates(const Point& p, const Point& q);
// Non-dominated subset, input order preserved.
std::vector<Point> pareto_frontier(const std::vector<Point>& points);
std::vector<bool> frontier_mask(const std::vector<Point>& points);

double p95_from_histogram(const std::map<int, int>& hist, long total);

}  // namespace semran::kpi
