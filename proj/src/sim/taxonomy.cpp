#include "semran/sim/taxonomy.hpp"

#include "semran/sim/errors.hpp"

namespace semran {

std::string to_string(Paradigm p) {
    switch (p) {
        case Paradigm::TrRan: return "TrRan";
        case Paradigm::AiORan: return "AiORan";
        case Paradigm::SemComOnly: return "SemComOnly";
        case Paradigm::TwoTimescale: return "TwoTimescale";
    }
    return "?";
}

std::string to_string(SemanticLevel l) { return "L" + std::to_string(static_cast<int>(l)); }
std::string to_string(Placement p) { return "P" + std::to_string(static_cast<int>(p)); }

std::string to_string(MonitorAction a) {
    switch (a) {
        case MonitorAction::LogOnly: return "LogOnly";
        case MonitorAction::ThrottleK: return "ThrottleK";
        case MonitorAction::ReduceC: return "ReduceC";
        case MonitorAction::Rollback: return "Rollback";
    }
    return "?";
}

Paradigm parse_paradigm(std::string_view s) {
    if (s == "TrRan") return Paradigm::TrRan;
    if (s == "AiORan") return Paradigm::AiORan;
    if (s == "SemComOnly") return Paradigm::SemComOnly;
    if (s == "TwoTimescale") return Paradigm::TwoTimescale;
    throw ParseError("unknown paradigm '" + std::string(s) + "'");
}

SemanticLevel parse_semantic_level(std::string_view s) {
    if (s == "L0") return SemanticLevel::L0;
    if (s == "L1") return SemanticLevel::L1;
    if (s == "L2") return SemanticLevel::L2;
    if (s == "L3") return SemanticLevel::L3;
    throw ParseError("unknown semantic level '" + std::string(s) + "'");
}

Placement parse_placement(std::string_view s) {
    if (s == "P0") return Placement::P0;
    if (s == "P1") return Placement::P1;
    if (s == "P2") return Placement::P2;
    throw ParseError("unknown placement '" + std::string(s) + "'");
}

MonitorAction parse_monitor_action(std::string_view s) {
    if (s == "LogOnly") return MonitorAction::LogOnly;
    if (s == "ThrottleK") return MonitorAction::ThrottleK;
    if (s == "ReduceC") return MonitorAction::ReduceC;
    if (s == "Rollback") return MonitorAction::Rollback;
    throw ParseError("unknown monitor action '" + std::string(s) + "'");
}

}  // namespace semran
