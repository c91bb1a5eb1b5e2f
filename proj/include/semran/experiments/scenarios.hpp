#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semran/engine/engine.hpp"
#include "semran/kpi/kpi.hpp"
#include "semran/sim/config.hpp"

namespace semran::experiments {

enum class Scenario { TsrVsSnr, Bandwidth, Learning, Pareto, CSweep, Drift };

std::string to_string(Scenario s);
Scenario parse_scenario(std::string_view s);  // ValidationError on unknown names
const std::vector<Scenario>& all_scenarios();

enum class TraceMode { None, First, All };
TraceMode parse_trace_mode(std::string_view s);

// Drift scenario constants shared with the metrics below.
inline constexpr long kPreShiftWindow = 1000;

// One (arm, sweep point, seed) run. `cfg` is fully resolved.
struct Cell {
    Scenario scenario = Scenario::TsrVsSnr;
    std::string arm;  // paradigm name unless the scenario defines its own arms
    int arm_rank = 0;
    std::string sweep_key;   // empty when the scenario has no sweep
    double sweep_value = 0.0;
    std::string sweep_key2;
    double sweep_value2 = 0.0;
    std::uint64_t seed = 1;
    ScenarioConfig cfg;
};

// Sort key: (scenario, arm, sweep values, seed).
bool cell_less(const Cell& a, const Cell& b);

struct CellMetrics {
    std::optional<double> osc_median;
    long osc_trips = 0;
    long triggers = 0;  // monitor actions taken (LogOnly never acts)
    std::optional<long> detect_slot;
    std::optional<long> rollback_slot;
    std::optional<double> pre_shift_tsr;
    std::optional<double> post_rollback_tsr;
    // Held-out validation TSR of the serving codec (fixed noise draw, nominal SNR):
    // just before the shift, and K slots after the first rollback.
    std::optional<double> pre_shift_val_tsr;
    std::optional<double> post_rollback_val_tsr;
    std::optional<long> codec_loss_stabilize_slot;
};

struct CellResult {
    Cell cell;
    kpi::KpiRecord kpi;
    std::optional<long> stop_slot;
    double final_tsr = 0.0;
    long slow_updates = 0;
    std::uint64_t codec_version = 0;
    CellMetrics metrics;
};

// Scenario presets on top of defaults_for(paradigm); `overrides` (config-file
// keys) are applied after the preset and before the sweep keys.
std::vector<Cell> make_cells(Scenario s, int seeds, std::uint64_t first_seed,
                             const std::vector<std::pair<std::string, std::string>>& overrides = {});

// Scenario-specific statistics from one finished run.
CellMetrics cell_metrics(const Cell& c, const engine::RunSummary& r);
CellResult summarize(const Cell& c, const engine::RunSummary& r);

using CellSink = std::function<void(const Cell&, const engine::RunSummary&)>;

// Runs every cell (up to `jobs` concurrently; worlds are shared per seed and
// codec/channel config). Results come back in cell_less order. `sink` runs on
// the worker thread right after each cell finishes.
std::vector<CellResult> run_cells(std::vector<Cell> cells, int jobs, const CellSink& sink = {});

struct RunOptions {
    Scenario scenario = Scenario::TsrVsSnr;
    int seeds = 10;
    std::uint64_t first_seed = 1;
    std::vector<std::pair<std::string, std::string>> overrides;
    int jobs = 1;
    TraceMode traces = TraceMode::First;
    std::filesystem::path out;
};

// Full scenario: cells, CSV, traces, manifest. Returns the sorted results.
std::vector<CellResult> run_scenario(const RunOptions& opt);

}  // namespace semran::experiments
