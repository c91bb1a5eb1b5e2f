#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace semran::kpi {

inline constexpr const char* kTraceSchema = "semran.trace/1";
inline constexpr double kLatencyBinSlots = 0.05;

// Per-agent slot record. Reward terms are means over the tasks the agent
// resolved (completed or dropped) in the slot; the unclipped reward equals
// w0*u - w1*dist - w2*pe - w3*pl.
struct AgentSlot {
    int a = -1;      // flat action index, -1 for heuristic agents
    int bw = 0;      // granted units
    double r = 0.0;  // clipped reward fed to the learner
    double u = 0.0;
    double dist = 0.0;
    double pe = 0.0;
    double pl = 0.0;
    int n = 0;  // resolved tasks
    int s = 0;  // successes
    bool operator==(const AgentSlot&) const = default;
};

struct TraceRow {
    long t = 0;
    std::vector<AgentSlot> agents;
    std::array<double, 4> w{1.0, 1.0, 0.1, 0.1};  // alpha, beta (effective), lambda_e, lambda_l
    double J = 0.0;
    int n = 0;
    int s = 0;
    double e = 0.0;        // joules spent in the slot (radio + compute)
    double lat = 0.0;      // latency sum over resolved tasks, slots
    int bw_alloc = 0;      // total allocated units
    double dsem = 0.0;     // mean semantic distortion over resolved tasks (0 when none)
    double rm = 0.0;       // mean clipped reward over agents that resolved tasks or spent energy
    double tsr = 0.0;      // sliding-window task success rate
    std::optional<double> gradnorm;
    std::uint64_t cv = 0;  // codec version in use during the slot
    int mon = 0;           // bit 0 drift, 1 ns, 2 osc breach at this slot's check
    std::string act;       // monitor or registry action applied at the end of the slot
    std::map<int, int> lh; // latency histogram: bin index (kLatencyBinSlots wide) -> count
    bool operator==(const TraceRow&) const = default;
};

nlohmann::json to_json(const TraceRow& r);
TraceRow row_from_json(const nlohmann::json& j);
std::string to_line(const TraceRow& r);

// Sum of per-agent w0*u - w1*dist - w2*pe - w3*pl.
double j_of(const std::vector<AgentSlot>& agents, const std::array<double, 4>& w);

int latency_bin(double latency_slots);

}  // namespace semran::kpi
