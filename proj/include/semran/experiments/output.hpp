#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "semran/experiments/scenarios.hpp"

namespace semran::experiments {

inline constexpr const char* kKpiSchema = "semran.kpi/1";
inline constexpr const char* kFrontierSchema = "semran.frontier/1";
inline constexpr const char* kManifestSchema = "semran.manifest/1";

std::string build_tag();

// Shortest round-trip text for a double ("NA" for empty optionals).
std::string fmt(double v);

std::vector<std::string> csv_columns();
// Header block ('#' lines: schema, build, scenario, resolved config per arm), column line, one row per result.
std::string kpi_csv(Scenario s, const std::vector<CellResult>& results);

struct FrontierRow {
    std::string arm;
    double sweep_value = 0.0;   // fixed_power_level
    double sweep_value2 = 0.0;  // latency_budget_slots
    double mean_latency = 0.0;
    double mean_energy = 0.0;
    int seeds = 0;              // seeds with an available energy figure
    bool is_frontier = false;
};

// Seed-mean operating points per arm and their per-arm Pareto flags.
std::vector<FrontierRow> frontier_rows(const std::vector<CellResult>& results);
std::string frontier_csv(const std::vector<FrontierRow>& rows);

// Trace file stem for a cell, e.g. "TwoTimescale_snr_db=10_seed1".
std::string trace_stem(const Cell& c);
// JSON-lines: schema header, one row per slot, monitor checks typed "monitor".
std::string trace_jsonl(const Cell& c, const engine::RunSummary& r);
std::string telemetry_jsonl(const engine::RunSummary& r);

// Writes `text` to `path` (parent directories created).
void write_file(const std::filesystem::path& path, const std::string& text);
// Lists every regular file under `dir` with its size and FNV-1a 64 hash.
std::string manifest_json(const std::filesystem::path& dir, Scenario s, const std::vector<CellResult>& results);

}  // namespace semran::experiments
