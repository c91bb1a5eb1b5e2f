#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "semran/codec/codec.hpp"
#include "semran/codec/task_source.hpp"
#include "semran/control/agent.hpp"
#include "semran/kpi/trace.hpp"
#include "semran/monitors/monitors.hpp"
#include "semran/oran/telemetry.hpp"
#include "semran/sim/config.hpp"

namespace semran::engine {

struct EngineEvent {
    long t = 0;
    std::string kind;    // slow_reject, fast_reject, throttle_k, reduce_c, rollback, rapp_accept, rapp_reject
    std::string detail;
};

struct Hooks {
    // Near-RT xApp side: receives every telemetry record at P1 cadence.
    std::function<void(const oran::TelemetryRecord&)> xapp;
    std::function<void(const kpi::TraceRow&)> on_row;
};

struct RunSummary {
    long slots_run = 0;
    bool stopped_early = false;
    std::optional<long> stop_slot;  // first slot where the stopping predicate held
    double final_tsr = 0.0;
    double final_gradnorm = 0.0;
    std::vector<kpi::TraceRow> trace;
    std::vector<monitors::CheckResult> checks;
    std::vector<monitors::TriggerEntry> triggers;
    std::vector<EngineEvent> events;
    std::vector<oran::TelemetryRecord> telemetry;
    std::string registry_audit;
    std::vector<std::pair<long, double>> codec_loss;  // (slot, surrogate loss) per slow update
    // Validation TSR of the codec in service on the live inputs, taken at the
    // slot before a configured shift and K slots after each rollback.
    std::vector<std::pair<long, double>> val_probes;
    long slow_updates = 0;
    long slow_rejected = 0;
    long fast_rejected = 0;
    long bw_overflow_slots = 0;  // slots whose summed requests exceeded the budget
    int final_K = 0;
    double final_c = 0.0;
    codec::CodecParams final_codec;
    control::PolicyParams final_policy;
};

// Runs one scenario to its horizon (or to the stopping criterion when
// early_stop is set). A null world is built from cfg.seed.
RunSummary run(const ScenarioConfig& cfg, std::shared_ptr<const codec::TaskWorld> world = nullptr,
               const Hooks& hooks = {});

// Monte-Carlo estimate of ||grad J||^2: squared norm of the mean policy
// gradient over m steps drawn from `pool`, plus the squared norm of the slow
// surrogate gradient over m samples drawn from `pool_batch` (skipped when empty).
double estimate_gradnorm(const control::PolicyParams& p, const std::vector<control::Step>& pool,
                         const codec::CodecParams* codec, const codec::SlowBatch& pool_batch,
                         const codec::ReferenceEmbedder& ref, int m, const control::UpdateConfig& u, Rng& rng);

// True iff the TSR window holds >= W values spanning at most 0.01 and the mean
// of the gradient-norm window is <= grad_tol.
bool stopping_check(const std::deque<double>& tsr_window, const std::deque<double>& grad_window, std::size_t W,
                    double grad_tol);

// Smooth two-timescale test objective with a known optimum:
//   J(theta, phi) = 0.5 E||theta - phi - a + xi||^2 + 0.5 E||phi - b + zeta||^2,
// xi, zeta ~ N(0, noise^2 I). Stochastic gradients use one noise draw each.
struct SmoothProblem {
    int n = 4;
    double noise = 0.5;
    std::vector<double> a;
    std::vector<double> b;

    static SmoothProblem make(int n, double noise, Rng& rng);
    void optimum(std::vector<double>& theta, std::vector<double>& phi) const;
    // One stochastic gradient sample, appended to g_theta/g_phi (accumulating).
    void sample_grad(const std::vector<double>& theta, const std::vector<double>& phi, Rng& rng,
                     std::vector<double>& g_theta, std::vector<double>& g_phi) const;
    double exact_gradnorm2(const std::vector<double>& theta, const std::vector<double>& phi) const;
};

// ||mean of m sampled gradients||^2 at (theta, phi).
double estimate_gradnorm(const SmoothProblem& prob, const std::vector<double>& theta, const std::vector<double>& phi,
                         int m, Rng& rng);

struct SmoothRun {
    std::vector<long> T;
    std::vector<double> min_estimate;  // min over probes at t <= T
    double slope = 0.0;                // log-log least squares of min_estimate vs T
};

// Two-timescale SGD (eta_t, gamma_t = c eta_t) from a fixed start; probes at
// log-spaced slots up to t_max with m-sample estimates.
SmoothRun run_smooth(const SmoothProblem& prob, const ScheduleConfig& s, long t_max, int m, int probes_per_decade,
                     std::uint64_t seed);

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Two-player 3x3 game played by the fast loop with bias-only features and a frozen codec.
struct MatrixGame {
    double payoff[2][3][3]{};  // payoff[player][a0][a1]
};
MatrixGame reference_game();

struct GameResult {
    int greedy0 = 0;
    int greedy1 = 0;
    double expected_payoff0 = 0.0;  // under the final softmax policies
    double expected_payoff1 = 0.0;
    std::vector<double> probs0;
    std::vector<double> probs1;
};

GameResult run_matrix_game(const MatrixGame& g, const ScheduleConfig& s, const AgentConfig& ac, long slots,
                           std::uint64_t seed);

}  // namespace semran::engine
