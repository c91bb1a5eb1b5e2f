#include "semran/oran/telemetry.hpp"

#include "semran/sim/errors.hpp"

namespace semran::oran {

using nlohmann::json;

void TsrWindow::push(bool success) {
    buf_.push_back(success);
    hits_ += success ? 1 : 0;
    if (buf_.size() > cap_) {
        hits_ -= buf_.front() ? 1 : 0;
        buf_.pop_front();
    }
}

double TsrWindow::value() const {
    return buf_.empty() ? 0.0 : static_cast<double>(hits_) / static_cast<double>(buf_.size());
}

TelemetryRecord package_telemetry(int agent_id, long slot, long task_id, int token_dim, double confidence,
                                  const TsrWindow& window, const RadioKpis& radio) {
    TelemetryRecord r;
    r.agent_id = agent_id;
    r.slot = slot;
    r.task_id = task_id;
    r.semantic_token_size = token_dim;
    r.semantic_confidence = confidence;
    r.tsr_available = window.available();
    r.tsr_proxy = r.tsr_available ? window.value() : 0.0;
    r.radio = radio;
    return r;
}

json to_json(const TelemetryRecord& r) {
    json j;
    j["slot"] = r.slot;
    j["agent"] = r.agent_id;
    j["task_id"] = r.task_id;
    j["token_size"] = r.semantic_token_size;
    j["confidence"] = r.semantic_confidence;
    j["tsr_proxy"] = r.tsr_available ? json(r.tsr_proxy) : json(nullptr);
    j["radio"] = {{"sinr_db", r.radio.sinr_db},
                  {"delivered_rate", r.radio.delivered_rate},
                  {"queue_len", r.radio.queue_len},
                  {"throughput_proxy", r.radio.throughput_proxy}};
    return j;
}

TelemetryRecord telemetry_from_json(const json& j) {
    try {
        TelemetryRecord r;
        r.slot = j.at("slot").get<long>();
        r.agent_id = j.at("agent").get<int>();
        r.task_id = j.at("task_id").get<long>();
        r.semantic_token_size = j.at("token_size").get<int>();
        r.semantic_confidence = j.at("confidence").get<double>();
        const auto& t = j.at("tsr_proxy");
        r.tsr_available = !t.is_null();
        r.tsr_proxy = r.tsr_available ? t.get<double>() : 0.0;
        const auto& k = j.at("radio");
        r.radio.sinr_db = k.at("sinr_db").get<double>();
        r.radio.delivered_rate = k.at("delivered_rate").get<double>();
        r.radio.queue_len = k.at("queue_len").get<int>();
        r.radio.throughput_proxy = k.at("throughput_proxy").get<double>();
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("telemetry record: ") + e.what());
    }
}

std::string telemetry_schema_header() {
    json h;
    h["schema"] = kTelemetrySchema;
    h["fields"] = {"slot", "agent", "task_id", "token_size", "confidence", "tsr_proxy", "radio"};
    h["tsr_window_tasks"] = 100;
    return h.dump();
}

std::string to_line(const TelemetryRecord& r) { return to_json(r).dump(); }

TelemetryRecord parse_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(std::string("telemetry line: ") + e.what());
    }
    return telemetry_from_json(j);
}

}  // namespace semran::oran
