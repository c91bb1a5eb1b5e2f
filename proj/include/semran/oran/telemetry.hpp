#pragma once

#include <deque>
#include <string>

#include "json.hpp"

namespace semran::oran {

inline constexpr const char* kTelemetrySchema = "semran.telemetry/1";

struct RadioKpis {
    double sinr_db = 0.0;
    double delivered_rate = 0.0;
    int queue_len = 0;
    double throughput_proxy = 0.0;
    bool operator==(const RadioKpis&) const = default;
};

// E2-style near-RT report. tsr_available=false is the cold-start sentinel
// (serialized as null).
struct TelemetryRecord {
    long task_id = -1;
    int semantic_token_size = 0;
    double semantic_confidence = 1.0;
    double tsr_proxy = 0.0;
    bool tsr_available = false;
    RadioKpis radio;
    long slot = 0;
    int agent_id = 0;
    bool operator==(const TelemetryRecord&) const = default;
};

// Success rate over the last `capacity` completed tasks.
class TsrWindow {
public:
    explicit TsrWindow(std::size_t capacity = 100) : cap_(capacity) {}
    void push(bool success);
    bool available() const { return !buf_.empty(); }
    double value() const;
    std::size_t size() const { return buf_.size(); }

private:
    std::size_t cap_;
    std::deque<bool> buf_;
    std::size_t hits_ = 0;
};

TelemetryRecord package_telemetry(int agent_id, long slot, long task_id, int token_dim, double confidence,
                                  const TsrWindow& window, const RadioKpis& radio);

nlohmann::json to_json(const TelemetryRecord& r);
TelemetryRecord telemetry_from_json(const nlohmann::json& j);
std::string telemetry_schema_header();
std::string to_line(const TelemetryRecord& r);
TelemetryRecord parse_line(const std::string& line);

}  // namespace semran::oran
