#include "semran/experiments/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <future>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include "semran/codec/task_source.hpp"
#include "semran/experiments/output.hpp"
#include "semran/sim/errors.hpp"

namespace semran::experiments {

namespace {

struct Name {
    Scenario s;
    const char* text;
};
constexpr Name kNames[] = {{Scenario::TsrVsSnr, "tsr-vs-snr"}, {Scenario::Bandwidth, "bandwidth"},
                           {Scenario::Learning, "learning"},   {Scenario::Pareto, "pareto"},
                           {Scenario::CSweep, "c-sweep"},      {Scenario::Drift, "drift"}};

const Paradigm kAll[] = {Paradigm::TrRan, Paradigm::AiORan, Paradigm::SemComOnly, Paradigm::TwoTimescale};

struct Arm {
    std::string name;
    ScenarioConfig cfg;
};

struct Sweep {
    std::string key;
    std::vector<double> values;
};

std::string num(double v) {
    // Integral sweep values go through set_key as integers.
    if (v == static_cast<double>(static_cast<long>(v))) return std::to_string(static_cast<long>(v));
    return fmt(v);
}

void apply(ScenarioConfig& c, const std::vector<std::pair<std::string, std::string>>& kv) {
    for (const auto& [k, v] : kv) set_key(c, k, v);
}

std::vector<Arm> paradigm_arms(const std::vector<std::pair<std::string, std::string>>& preset) {
    std::vector<Arm> arms;
    for (Paradigm p : kAll) {
        Arm a{to_string(p), defaults_for(p)};
        apply(a.cfg, preset);
        arms.push_back(std::move(a));
    }
    return arms;
}

struct Plan {
    std::vector<Arm> arms;
    Sweep s1;
    Sweep s2;
};

Plan plan_for(Scenario s) {
    Plan p;
    switch (s) {
        case Scenario::TsrVsSnr:
            p.arms = paradigm_arms({{"horizon_slots", "20000"}});
            p.s1 = {"snr_db", {-5, 0, 5, 10, 15, 20, 25}};
            break;
        case Scenario::Bandwidth:
            p.arms = paradigm_arms({{"horizon_slots", "20000"}, {"snr_db", "10"}});
            p.s1 = {"bandwidth_units", {5, 10, 15, 20}};
            break;
        case Scenario::Learning:
            // Learning from an untrained codec, so the semantic arms have something to learn.
            p.arms = paradigm_arms({{"horizon_slots", "50000"},
                                    {"pretrain_steps", "0"},
                                    {"codec_lr_gain", "60"}});
            for (auto& a : p.arms) {
                if (a.cfg.paradigm == Paradigm::SemComOnly) {
                    a.cfg.schedule.c_ratio = 1.0;
                    a.cfg.schedule.K = 1;
                } else if (a.cfg.paradigm == Paradigm::TwoTimescale) {
                    a.cfg.schedule.c_ratio = 0.1;
                    a.cfg.schedule.K = 50;
                }
            }
            break;
        case Scenario::Pareto:
            p.arms = paradigm_arms({{"horizon_slots", "5000"}});
            p.s1 = {"fixed_power_level", {0, 1, 2, 3}};
            p.s2 = {"latency_budget_slots", {3, 5, 8, 12}};
            break;
        case Scenario::CSweep: {
            Arm a{to_string(Paradigm::TwoTimescale), defaults_for(Paradigm::TwoTimescale)};
            apply(a.cfg, {{"horizon_slots", "50000"},
                          {"pretrain_steps", "0"},
                          {"codec_lr_gain", "60"},
                          {"enforce_separation", "false"},
                          {"monitors_enabled", "true"},
                          {"monitor_action", "LogOnly"}});
            p.arms.push_back(std::move(a));
            p.s1 = {"c_ratio", {1, 0.3, 0.1, 0.03}};
            break;
        }
        case Scenario::Drift: {
            Arm a{to_string(Paradigm::TwoTimescale), defaults_for(Paradigm::TwoTimescale)};
            apply(a.cfg, {{"horizon_slots", "12000"},
                          {"shift_slot", "10000"},
                          {"codec_lr_gain", "800"},
                          {"monitors_enabled", "true"},
                          {"monitor_action", "Rollback"},
                          {"monitor_warmup_slots", "2000"},
                          {"oran_enabled", "true"}});
            p.arms.push_back(std::move(a));
            p.s1 = {"shift_magnitude", {0, 2}};
            break;
        }
    }
    return p;
}

std::string world_key(const ScenarioConfig& c) {
    static const std::set<std::string> keys = {
        "input_dim",   "embed_dim",      "n_classes",     "class_sigma",    "class_mean_scale",
        "task_bank_size", "validation_size", "probe_size", "pretrain_steps", "pretrain_batch",
        "pretrain_lr", "pretrain_snr_db", "bits_per_dim",  "quant_range"};
    std::string k = std::to_string(c.seed);
    for (const auto& [name, value] : config_entries(c))
        if (keys.count(name)) k += ";" + name + "=" + value;
    return k;
}

std::optional<double> window_tsr(const std::vector<kpi::TraceRow>& trace, long from, long to) {
    long n = 0, s = 0;
    for (const auto& r : trace) {
        if (r.t < from || r.t >= to) continue;
        n += r.n;
        s += r.s;
    }
    if (n == 0) return std::nullopt;
    return static_cast<double>(s) / static_cast<double>(n);
}

}  // namespace

std::string to_string(Scenario s) {
    for (const auto& n : kNames)
        if (n.s == s) return n.text;
    return "?";
}

Scenario parse_scenario(std::string_view s) {
    for (const auto& n : kNames)
        if (s == n.text) return n.s;
    throw ValidationError("unknown scenario '" + std::string(s) + "'");
}

const std::vector<Scenario>& all_scenarios() {
    static const std::vector<Scenario> v = {Scenario::TsrVsSnr, Scenario::Bandwidth, Scenario::Learning,
                                            Scenario::Pareto,   Scenario::CSweep,    Scenario::Drift};
    return v;
}

TraceMode parse_trace_mode(std::string_view s) {
    if (s == "none") return TraceMode::None;
    if (s == "first") return TraceMode::First;
    if (s == "all") return TraceMode::All;
    throw ValidationError("unknown trace mode '" + std::string(s) + "' (none|first|all)");
}

bool cell_less(const Cell& a, const Cell& b) {
    return std::tie(a.scenario, a.arm_rank, a.sweep_value, a.sweep_value2, a.seed) <
           std::tie(b.scenario, b.arm_rank, b.sweep_value, b.sweep_value2, b.seed);
}

std::vector<Cell> make_cells(Scenario s, int seeds, std::uint64_t first_seed,
                             const std::vector<std::pair<std::string, std::string>>& overrides) {
    if (seeds < 1) throw ValidationError("seeds >= 1");
    Plan p = plan_for(s);
    for (auto& a : p.arms) apply(a.cfg, overrides);
    const std::vector<double> none{0.0};
    const auto& v1 = p.s1.key.empty() ? none : p.s1.values;
    const auto& v2 = p.s2.key.empty() ? none : p.s2.values;

    std::vector<Cell> cells;
    for (std::size_t ai = 0; ai < p.arms.size(); ++ai) {
        const Arm& arm = p.arms[ai];
        for (double x1 : v1) {
            for (double x2 : v2) {
                for (int k = 0; k < seeds; ++k) {
                    Cell c;
                    c.scenario = s;
                    c.arm = arm.name;
                    c.arm_rank = static_cast<int>(ai);
                    c.sweep_key = p.s1.key;
                    c.sweep_value = p.s1.key.empty() ? 0.0 : x1;
                    c.sweep_key2 = p.s2.key;
                    c.sweep_value2 = p.s2.key.empty() ? 0.0 : x2;
                    c.seed = first_seed + static_cast<std::uint64_t>(k);
                    c.cfg = arm.cfg;
                    c.cfg.seed = c.seed;
                    if (!c.sweep_key.empty()) set_key(c.cfg, c.sweep_key, num(x1));
                    if (!c.sweep_key2.empty()) set_key(c.cfg, c.sweep_key2, num(x2));
                    validate(c.cfg);
                    cells.push_back(std::move(c));
                }
            }
        }
    }
    std::stable_sort(cells.begin(), cells.end(), cell_less);
    return cells;
}

CellMetrics cell_metrics(const Cell& c, const engine::RunSummary& r) {
    CellMetrics m;
    std::vector<double> osc;
    for (const auto& chk : r.checks) {
        if (chk.values.osc.available) osc.push_back(chk.values.osc.value);
        if (chk.osc_breach) ++m.osc_trips;
        if (chk.action != monitors::Action::None) ++m.triggers;
    }
    if (!osc.empty()) {
        std::sort(osc.begin(), osc.end());
        const std::size_t h = osc.size() / 2;
        m.osc_median = osc.size() % 2 ? osc[h] : 0.5 * (osc[h - 1] + osc[h]);
    }

    const long t0 = c.cfg.shift.shift_slot;
    if (t0 >= 0) {
        for (const auto& chk : r.checks) {
            if (chk.t >= t0 && chk.values.drift.available && chk.values.drift.value > c.cfg.monitor.eps1) {
                m.detect_slot = chk.t;
                break;
            }
        }
        for (const auto& e : r.events) {
            if (e.t >= t0 && e.kind == "rollback") {
                m.rollback_slot = e.t;
                break;
            }
        }
        m.pre_shift_tsr = window_tsr(r.trace, t0 - kPreShiftWindow, t0);
        if (m.rollback_slot)
            m.post_rollback_tsr = window_tsr(r.trace, *m.rollback_slot + 1, *m.rollback_slot + 1 + c.cfg.schedule.K);
        for (const auto& [t, v] : r.val_probes) {
            if (t == t0 - 1) m.pre_shift_val_tsr = v;
            if (m.rollback_slot && t > *m.rollback_slot && !m.post_rollback_val_tsr) m.post_rollback_val_tsr = v;
        }
    }

    if (!r.codec_loss.empty()) {
        std::vector<double> loss;
        for (const auto& [t, l] : r.codec_loss) loss.push_back(l);
        const int window = std::max(1, std::min<int>(20, static_cast<int>(loss.size())));
        if (auto idx = kpi::slots_to_stabilize(loss, window, kpi::kStabilizeBand))
            m.codec_loss_stabilize_slot = r.codec_loss[static_cast<std::size_t>(*idx)].first;
    }
    return m;
}

CellResult summarize(const Cell& c, const engine::RunSummary& r) {
    CellResult out;
    out.cell = c;
    out.kpi = kpi::compute_kpis(r.trace);
    out.stop_slot = r.stop_slot;
    out.final_tsr = r.final_tsr;
    out.slow_updates = r.slow_updates;
    out.codec_version = r.final_codec.version;
    out.metrics = cell_metrics(c, r);
    return out;
}

std::vector<CellResult> run_cells(std::vector<Cell> cells, int jobs, const CellSink& sink) {
    std::stable_sort(cells.begin(), cells.end(), cell_less);
    std::vector<CellResult> results(cells.size());

    std::mutex mu;
    std::map<std::string, std::shared_future<std::shared_ptr<const codec::TaskWorld>>> worlds;
    auto world_for = [&](const ScenarioConfig& cfg) {
        std::promise<std::shared_ptr<const codec::TaskWorld>> prom;
        std::shared_future<std::shared_ptr<const codec::TaskWorld>> fut;
        bool build = false;
        {
            std::lock_guard<std::mutex> lock(mu);
            const auto key = world_key(cfg);
            auto it = worlds.find(key);
            if (it == worlds.end()) {
                fut = prom.get_future().share();
                worlds.emplace(key, fut);
                build = true;
            } else {
                fut = it->second;
            }
        }
        if (build) {
            try {
                prom.set_value(codec::build_world(cfg.codec, cfg.channel, cfg.seed));
            } catch (...) {
                prom.set_exception(std::current_exception());
            }
        }
        return fut.get();
    };

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            try {
                const auto r = engine::run(cells[i].cfg, world_for(cells[i].cfg));
                results[i] = summarize(cells[i], r);
                if (sink) sink(cells[i], r);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
                next = cells.size();
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < n; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

std::vector<CellResult> run_scenario(const RunOptions& opt) {
    namespace fs = std::filesystem;
    auto cells = make_cells(opt.scenario, opt.seeds, opt.first_seed, opt.overrides);
    const std::string name = to_string(opt.scenario);
    const fs::path tdir = opt.out / (name + ".traces");
    fs::create_directories(opt.out);
    if (fs::exists(tdir)) fs::remove_all(tdir);
    if (opt.traces != TraceMode::None) fs::create_directories(tdir);

    CellSink sink;
    if (opt.traces != TraceMode::None) {
        sink = [&](const Cell& c, const engine::RunSummary& r) {
            if (opt.traces == TraceMode::First && c.seed != opt.first_seed) return;
            const auto stem = trace_stem(c);
            write_file(tdir / (stem + ".jsonl"), trace_jsonl(c, r));
            if (!r.telemetry.empty()) write_file(tdir / (stem + ".telemetry.jsonl"), telemetry_jsonl(r));
            if (!r.registry_audit.empty()) write_file(tdir / (stem + ".audit.jsonl"), r.registry_audit);
        };
    }
    auto results = run_cells(std::move(cells), opt.jobs, sink);

    write_file(opt.out / (name + ".csv"), kpi_csv(opt.scenario, results));
    if (opt.scenario == Scenario::Pareto)
        write_file(opt.out / "pareto_frontier.csv", frontier_csv(frontier_rows(results)));
    write_file(opt.out / "manifest.json", manifest_json(opt.out, opt.scenario, results));
    return results;
}

}  // namespace semran::experiments
