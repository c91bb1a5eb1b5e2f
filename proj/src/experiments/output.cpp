#include "semran/experiments/output.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "semran/kpi/kpi.hpp"
#include "semran/oran/telemetry.hpp"
#include "semran/sim/errors.hpp"

#ifndef SEMRAN_BUILD_TAG
#define SEMRAN_BUILD_TAG "unknown"
#endif

namespace semran::experiments {

namespace {

using nlohmann::json;

std::string na(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }
std::string na(const std::optional<long>& v) { return v ? std::to_string(*v) : "NA"; }

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

std::string build_tag() { return SEMRAN_BUILD_TAG; }

std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::vector<std::string> csv_columns() {
    return {"scenario",
            "arm",
            "paradigm",
            "sweep_key",
            "sweep_value",
            "sweep_key2",
            "sweep_value2",
            "seed",
            "tsr",
            "sbe",
            "mean_latency_slots",
            "p95_latency_slots",
            "energy_per_success_j",
            "reward_mean",
            "reward_var_final_third",
            "reward_var_final_third_smoothed",
            "reward_slope",
            "oscillation_count",
            "slots_to_stabilize",
            "tasks",
            "successes",
            "mean_bw_alloc",
            "stop_slot",
            "final_tsr",
            "slow_updates",
            "codec_version",
            "osc_median",
            "osc_trips",
            "triggers",
            "detect_slot",
            "rollback_slot",
            "pre_shift_tsr",
            "post_rollback_tsr",
            "pre_shift_val_tsr",
            "post_rollback_val_tsr",
            "codec_loss_stabilize_slot"};
}

std::string kpi_csv(Scenario s, const std::vector<CellResult>& results) {
    std::ostringstream o;
    o << "# schema: " << kKpiSchema << '\n';
    o << "# build: " << build_tag() << '\n';
    o << "# scenario: " << to_string(s) << '\n';

    std::vector<std::uint64_t> seeds;
    std::map<std::string, std::vector<double>> sweeps;
    std::vector<std::string> sweep_order;
    for (const auto& r : results) {
        if (std::find(seeds.begin(), seeds.end(), r.cell.seed) == seeds.end()) seeds.push_back(r.cell.seed);
        for (const auto& [k, v] : {std::pair{r.cell.sweep_key, r.cell.sweep_value},
                                   std::pair{r.cell.sweep_key2, r.cell.sweep_value2}}) {
            if (k.empty()) continue;
            auto& vals = sweeps[k];
            if (vals.empty()) sweep_order.push_back(k);
            if (std::find(vals.begin(), vals.end(), v) == vals.end()) vals.push_back(v);
        }
    }
    std::sort(seeds.begin(), seeds.end());
    o << "# seeds:";
    for (std::size_t i = 0; i < seeds.size(); ++i) o << (i ? "," : " ") << seeds[i];
    o << '\n';
    for (const auto& k : sweep_order) {
        auto vals = sweeps[k];
        std::sort(vals.begin(), vals.end());
        o << "# sweep: " << k << " =";
        for (std::size_t i = 0; i < vals.size(); ++i) o << (i ? "," : " ") << fmt(vals[i]);
        o << '\n';
    }
    // Resolved config of each arm's first cell; seed and swept keys vary per row.
    std::vector<std::string> seen;
    for (const auto& r : results) {
        if (std::find(seen.begin(), seen.end(), r.cell.arm) != seen.end()) continue;
        seen.push_back(r.cell.arm);
        o << "# config " << r.cell.arm << ":";
        for (const auto& [k, v] : config_entries(r.cell.cfg)) o << ' ' << k << '=' << v;
        o << '\n';
    }

    const auto cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) o << (i ? "," : "") << cols[i];
    o << '\n';
    for (const auto& r : results) {
        const auto& c = r.cell;
        const auto& k = r.kpi;
        const auto& m = r.metrics;
        const std::vector<std::string> row = {
            to_string(c.scenario),
            c.arm,
            to_string(c.cfg.paradigm),
            c.sweep_key.empty() ? "NA" : c.sweep_key,
            c.sweep_key.empty() ? "NA" : fmt(c.sweep_value),
            c.sweep_key2.empty() ? "NA" : c.sweep_key2,
            c.sweep_key2.empty() ? "NA" : fmt(c.sweep_value2),
            std::to_string(c.seed),
            fmt(k.tsr),
            fmt(k.sbe),
            fmt(k.mean_latency_slots),
            fmt(k.p95_latency_slots),
            k.energy_available ? fmt(k.energy_per_success_j) : "NA",
            fmt(k.reward_mean),
            fmt(k.reward_var_final_third),
            fmt(k.reward_var_final_third_smoothed),
            fmt(k.reward_slope),
            std::to_string(k.oscillation_count),
            na(k.slots_to_stabilize),
            std::to_string(k.tasks),
            std::to_string(k.successes),
            fmt(k.mean_bw_alloc),
            na(r.stop_slot),
            fmt(r.final_tsr),
            std::to_string(r.slow_updates),
            std::to_string(r.codec_version),
            na(m.osc_median),
            std::to_string(m.osc_trips),
            std::to_string(m.triggers),
            na(m.detect_slot),
            na(m.rollback_slot),
            na(m.pre_shift_tsr),
            na(m.post_rollback_tsr),
            na(m.pre_shift_val_tsr),
            na(m.post_rollback_val_tsr),
            na(m.codec_loss_stabilize_slot)};
        for (std::size_t i = 0; i < row.size(); ++i) o << (i ? "," : "") << row[i];
        o << '\n';
    }
    return o.str();
}

std::vector<FrontierRow> frontier_rows(const std::vector<CellResult>& results) {
    struct Acc {
        double lat = 0.0;
        double en = 0.0;
        int n = 0;
    };
    std::vector<std::pair<std::tuple<int, std::string, double, double>, Acc>> acc;
    for (const auto& r : results) {
        auto key = std::make_tuple(r.cell.arm_rank, r.cell.arm, r.cell.sweep_value, r.cell.sweep_value2);
        auto it = std::find_if(acc.begin(), acc.end(), [&](const auto& p) { return p.first == key; });
        if (it == acc.end()) {
            acc.push_back({key, {}});
            it = acc.end() - 1;
        }
        if (!r.kpi.energy_available) continue;
        it->second.lat += r.kpi.mean_latency_slots;
        it->second.en += r.kpi.energy_per_success_j;
        ++it->second.n;
    }
    std::sort(acc.begin(), acc.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<FrontierRow> rows;
    for (const auto& [key, a] : acc) {
        FrontierRow f;
        f.arm = std::get<1>(key);
        f.sweep_value = std::get<2>(key);
        f.sweep_value2 = std::get<3>(key);
        f.seeds = a.n;
        if (a.n > 0) {
            f.mean_latency = a.lat / a.n;
            f.mean_energy = a.en / a.n;
        }
        rows.push_back(f);
    }
    // Pareto flags within each arm over the points that have data.
    for (std::size_t i = 0; i < rows.size();) {
        std::size_t j = i;
        while (j < rows.size() && rows[j].arm == rows[i].arm) ++j;
        std::vector<kpi::Point> pts;
        std::vector<std::size_t> idx;
        for (std::size_t k = i; k < j; ++k) {
            if (rows[k].seeds == 0) continue;
            pts.push_back({rows[k].mean_latency, rows[k].mean_energy});
            idx.push_back(k);
        }
        const auto mask = kpi::frontier_mask(pts);
        for (std::size_t k = 0; k < idx.size(); ++k) rows[idx[k]].is_frontier = mask[k];
        i = j;
    }
    return rows;
}

std::string frontier_csv(const std::vector<FrontierRow>& rows) {
    std::ostringstream o;
    o << "# schema: " << kFrontierSchema << '\n';
    o << "# build: " << build_tag() << '\n';
    o << "arm,fixed_power_level,latency_budget_slots,mean_latency_slots,energy_per_success_j,seeds,is_frontier\n";
    for (const auto& r : rows) {
        o << r.arm << ',' << fmt(r.sweep_value) << ',' << fmt(r.sweep_value2) << ','
          << (r.seeds ? fmt(r.mean_latency) : "NA") << ',' << (r.seeds ? fmt(r.mean_energy) : "NA") << ','
          << r.seeds << ',' << (r.is_frontier ? 1 : 0) << '\n';
    }
    return o.str();
}

std::string trace_stem(const Cell& c) {
    std::string s = c.arm;
    if (!c.sweep_key.empty()) s += "_" + c.sweep_key + "=" + fmt(c.sweep_value);
    if (!c.sweep_key2.empty()) s += "_" + c.sweep_key2 + "=" + fmt(c.sweep_value2);
    return s + "_seed" + std::to_string(c.seed);
}

std::string trace_jsonl(const Cell& c, const engine::RunSummary& r) {
    std::string out;
    json h;
    h["schema"] = kpi::kTraceSchema;
    h["scenario"] = to_string(c.scenario);
    h["arm"] = c.arm;
    h["paradigm"] = to_string(c.cfg.paradigm);
    h["seed"] = c.seed;
    json sw = json::object();
    if (!c.sweep_key.empty()) sw[c.sweep_key] = c.sweep_value;
    if (!c.sweep_key2.empty()) sw[c.sweep_key2] = c.sweep_value2;
    h["sweep"] = sw;
    h["slots"] = r.slots_run;
    out += h.dump() + '\n';

    std::size_t ci = 0;
    auto monitor_row = [](const monitors::CheckResult& chk) {
        json m;
        m["type"] = "monitor";
        m["t"] = chk.t;
        auto val = [](const monitors::Value& v) { return v.available ? json(v.value) : json(nullptr); };
        m["drift"] = val(chk.values.drift);
        m["ns"] = val(chk.values.ns);
        m["osc"] = val(chk.values.osc);
        m["breach"] = (chk.drift_breach ? 1 : 0) | (chk.ns_breach ? 2 : 0) | (chk.osc_breach ? 4 : 0);
        m["action"] = monitors::to_string(chk.action);
        if (!chk.cause.empty()) m["cause"] = chk.cause;
        return m.dump() + '\n';
    };
    for (const auto& row : r.trace) {
        out += kpi::to_line(row);
        out += '\n';
        while (ci < r.checks.size() && r.checks[ci].t <= row.t) out += monitor_row(r.checks[ci++]);
    }
    while (ci < r.checks.size()) out += monitor_row(r.checks[ci++]);
    return out;
}

std::string telemetry_jsonl(const engine::RunSummary& r) {
    std::string out = oran::telemetry_schema_header();
    if (!out.empty() && out.back() != '\n') out += '\n';
    for (const auto& rec : r.telemetry) {
        out += oran::to_line(rec);
        out += '\n';
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string manifest_json(const std::filesystem::path& dir, Scenario s, const std::vector<CellResult>& results) {
    namespace fs = std::filesystem;
    json m;
    const fs::path mp = dir / "manifest.json";
    if (fs::exists(mp)) {
        try {
            m = json::parse(read_file(mp));
        } catch (const json::exception&) {
            m = json::object();
        }
    }
    if (!m.is_object() || m.value("schema", "") != kManifestSchema) m = json::object();
    m["schema"] = kManifestSchema;
    m["build"] = build_tag();

    const std::string name = to_string(s);
    std::vector<fs::path> files;
    for (const auto& f : {dir / (name + ".csv"), dir / "pareto_frontier.csv"})
        if (fs::exists(f) && (f.filename() != "pareto_frontier.csv" || s == Scenario::Pareto)) files.push_back(f);
    const fs::path tdir = dir / (name + ".traces");
    if (fs::exists(tdir))
        for (const auto& e : fs::recursive_directory_iterator(tdir))
            if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());

    json entry;
    std::vector<std::uint64_t> seeds;
    for (const auto& r : results)
        if (std::find(seeds.begin(), seeds.end(), r.cell.seed) == seeds.end()) seeds.push_back(r.cell.seed);
    std::sort(seeds.begin(), seeds.end());
    entry["seeds"] = seeds;
    entry["cells"] = results.size();
    json fl = json::array();
    for (const auto& f : files) {
        const auto text = read_file(f);
        fl.push_back({{"path", fs::relative(f, dir).generic_string()}, {"bytes", text.size()}, {"fnv1a64", hex(fnv1a(text))}});
    }
    entry["files"] = std::move(fl);
    m["scenarios"][name] = std::move(entry);
    return m.dump(2) + '\n';
}

}  // namespace semran::experiments
