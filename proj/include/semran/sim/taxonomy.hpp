#pragma once

#include <string>
#include <string_view>

namespace semran {

enum class Paradigm { TrRan, AiORan, SemComOnly, TwoTimescale };

// Semantic abstraction level: bit/symbol, feature/latent, intent/task, knowledge/graph.
enum class SemanticLevel { L0, L1, L2, L3 };

// Control placement: PHY/MAC loop, near-RT controller, non-RT controller.
enum class Placement { P0, P1, P2 };

enum class MonitorAction { LogOnly, ThrottleK, ReduceC, Rollback };

std::string to_string(Paradigm p);
std::string to_string(SemanticLevel l);
std::string to_string(Placement p);
std::string to_string(MonitorAction a);

Paradigm parse_paradigm(std::string_view s);
SemanticLevel parse_semantic_level(std::string_view s);
Placement parse_placement(std::string_view s);
MonitorAction parse_monitor_action(std::string_view s);

inline bool is_semantic(Paradigm p) { return p == Paradigm::SemComOnly || p == Paradigm::TwoTimescale; }
inline bool is_learning(Paradigm p) { return p != Paradigm::TrRan; }

}  // namespace semran
