#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "semran/engine/engine.hpp"
#include "semran/kpi/kpi.hpp"

// Brute-force and finite-difference references. Each one recomputes its
// answer from first principles and shares no code path with the routine it checks.
namespace semran::oracles {

// O(n^2) dominance filter (lower is better in both coordinates).
std::vector<bool> brute_force_frontier(const std::vector<kpi::Point>& pts);

struct GradCheck {
    int instances = 0;
    double max_rel_err = 0.0;  // || analytic - numeric || / max(|| numeric ||, 1e-12)
};

// Codec surrogate gradient (d=4, D=8, 5-sample batches) and actor gradient
// (3 actions, 4 features) against central differences of the loss/objective.
GradCheck gradcheck_codec(int instances, std::uint64_t seed, double h = 1e-5);
GradCheck gradcheck_actor(int instances, std::uint64_t seed, double h = 1e-5);

// Every pure equilibrium of the two-player game by enumeration of the 9 joint actions.
std::vector<std::pair<int, int>> pure_nash(const engine::MatrixGame& g);

// KPIs recomputed in one pass over a JSON-lines trace (header and monitor rows skipped).
struct KpiCheck {
    long rows = 0;
    long tasks = 0;
    long successes = 0;
    double tsr = 0.0;
    double sbe = 0.0;
    double mean_latency_slots = 0.0;
    double p95_latency_slots = 0.0;
    bool energy_available = false;
    double energy_per_success_j = 0.0;
    double reward_mean = 0.0;
    double reward_var_final_third = 0.0;
    double reward_slope = 0.0;
};
KpiCheck kpi_from_jsonl(const std::string& text);

// Largest absolute difference between the oracle and a KpiRecord over the shared fields.
double kpi_max_abs_diff(const KpiCheck& o, const kpi::KpiRecord& k);

}  // namespace semran::oracles
