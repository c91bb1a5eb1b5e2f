#include "semran/sim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "semran/sim/errors.hpp"

namespace semran {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out))
        throw ParseError("key '" + key + "': expected a real number, got '" + v + "'");
    return out;
}

long long parse_int(const std::string& key, const std::string& v) {
    long long out = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ParseError("key '" + key + "': expected an integer, got '" + v + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ParseError("key '" + key + "': expected an unsigned integer, got '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ParseError("key '" + key + "': expected true/false, got '" + v + "'");
}

struct KeyDef {
    std::string name;
    std::function<std::string(const ScenarioConfig&)> get;
    std::function<void(ScenarioConfig&, const std::string&)> set;
};

template <class M>
KeyDef real_key(std::string name, M member) {
    return {name, [member](const ScenarioConfig& c) { return fmt_double(member(const_cast<ScenarioConfig&>(c))); },
            [member, name](ScenarioConfig& c, const std::string& v) { member(c) = parse_double(name, v); }};
}

template <class M>
KeyDef int_key(std::string name, M member) {
    return {name, [member](const ScenarioConfig& c) { return std::to_string(member(const_cast<ScenarioConfig&>(c))); },
            [member, name](ScenarioConfig& c, const std::string& v) {
                using T = std::remove_reference_t<decltype(member(c))>;
                member(c) = static_cast<T>(parse_int(name, v));
            }};
}

template <class M>
KeyDef bool_key(std::string name, M member) {
    return {name, [member](const ScenarioConfig& c) { return member(const_cast<ScenarioConfig&>(c)) ? "true" : "false"; },
            [member, name](ScenarioConfig& c, const std::string& v) { member(c) = parse_bool(name, v); }};
}

#define FIELD(expr) [](ScenarioConfig & c) -> auto& { return c.expr; }

const std::vector<KeyDef>& key_table() {
    static const std::vector<KeyDef> table = [] {
        std::vector<KeyDef> t;
        t.push_back({"paradigm", [](const ScenarioConfig& c) { return to_string(c.paradigm); },
                     [](ScenarioConfig& c, const std::string& v) { c.paradigm = parse_paradigm(v); }});
        t.push_back({"semantic_level", [](const ScenarioConfig& c) { return to_string(c.semantic_level); },
                     [](ScenarioConfig& c, const std::string& v) { c.semantic_level = parse_semantic_level(v); }});
        t.push_back({"placement", [](const ScenarioConfig& c) { return to_string(c.placement); },
                     [](ScenarioConfig& c, const std::string& v) { c.placement = parse_placement(v); }});
        t.push_back(int_key("p1_period", FIELD(p1_period)));
        t.push_back(int_key("p2_period", FIELD(p2_period)));
        t.push_back(int_key("n_agents", FIELD(n_agents)));
        t.push_back(int_key("n_devices_per_agent", FIELD(n_devices_per_agent)));
        t.push_back(real_key("arrival_prob", FIELD(arrival_prob)));
        t.push_back(real_key("snr_db", FIELD(snr_db)));
        t.push_back(int_key("bandwidth_units", FIELD(bandwidth_units)));
        t.push_back(real_key("energy_budget_j", FIELD(energy_budget_j)));
        t.push_back(int_key("latency_budget_slots", FIELD(latency_budget_slots)));
        t.push_back(real_key("drop_penalty_slots", FIELD(drop_penalty_slots)));
        t.push_back(real_key("alpha", FIELD(alpha)));
        t.push_back(real_key("beta", FIELD(beta)));
        t.push_back(real_key("lambda_e", FIELD(lambda_e)));
        t.push_back(real_key("lambda_l", FIELD(lambda_l)));
        t.push_back(real_key("energy_ref_j", FIELD(energy_ref_j)));
        t.push_back(int_key("horizon_slots", FIELD(horizon_slots)));
        t.push_back({"seed", [](const ScenarioConfig& c) { return std::to_string(c.seed); },
                     [](ScenarioConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); }});

        t.push_back(real_key("eta0", FIELD(schedule.eta0)));
        t.push_back(real_key("decay_p", FIELD(schedule.decay_p)));
        t.push_back(real_key("c_ratio", FIELD(schedule.c_ratio)));
        t.push_back(int_key("K", FIELD(schedule.K)));
        t.push_back(bool_key("enforce_separation", FIELD(schedule.enforce_separation)));

        t.push_back(bool_key("monitors_enabled", FIELD(monitor.enabled)));
        t.push_back(int_key("window_delta", FIELD(monitor.window_delta)));
        t.push_back(real_key("eps1", FIELD(monitor.eps1)));
        t.push_back(real_key("eps2", FIELD(monitor.eps2)));
        t.push_back(real_key("eps3", FIELD(monitor.eps3)));
        t.push_back(int_key("histogram_bins", FIELD(monitor.histogram_bins)));
        t.push_back(real_key("laplace_alpha", FIELD(monitor.laplace_alpha)));
        t.push_back({"monitor_action", [](const ScenarioConfig& c) { return to_string(c.monitor.action); },
                     [](ScenarioConfig& c, const std::string& v) { c.monitor.action = parse_monitor_action(v); }});
        t.push_back(int_key("monitor_warmup_slots", FIELD(monitor.warmup_slots)));
        t.push_back(int_key("persistence_checks", FIELD(monitor.persistence_checks)));

        t.push_back(real_key("slot_seconds", FIELD(channel.slot_seconds)));
        t.push_back(real_key("unit_bw_hz", FIELD(channel.unit_bw_hz)));
        t.push_back(real_key("fading_std_db", FIELD(channel.fading_std_db)));
        t.push_back(int_key("block_length_slots", FIELD(channel.block_length_slots)));
        t.push_back(int_key("max_attempts", FIELD(channel.max_attempts)));
        t.push_back(real_key("joules_per_op", FIELD(channel.joules_per_op)));
        t.push_back(real_key("power_cap_w", FIELD(channel.power_cap_w)));
        t.push_back(real_key("interference_coupling", FIELD(channel.interference_coupling)));
        t.push_back(int_key("bits_per_dim", FIELD(channel.bits_per_dim)));
        t.push_back(real_key("quant_range", FIELD(channel.quant_range)));

        t.push_back(int_key("input_dim", FIELD(codec.input_dim)));
        t.push_back(int_key("embed_dim", FIELD(codec.embed_dim)));
        t.push_back(int_key("n_classes", FIELD(codec.n_classes)));
        t.push_back(real_key("class_sigma", FIELD(codec.class_sigma)));
        t.push_back(real_key("class_mean_scale", FIELD(codec.class_mean_scale)));
        t.push_back(int_key("task_bank_size", FIELD(codec.task_bank_size)));
        t.push_back(int_key("validation_size", FIELD(codec.validation_size)));
        t.push_back(int_key("probe_size", FIELD(codec.probe_size)));
        t.push_back(real_key("codec_lr_gain", FIELD(codec.lr_gain)));
        t.push_back(int_key("pretrain_steps", FIELD(codec.pretrain_steps)));
        t.push_back(int_key("pretrain_batch", FIELD(codec.pretrain_batch)));
        t.push_back(real_key("pretrain_lr", FIELD(codec.pretrain_lr)));
        t.push_back(real_key("pretrain_snr_db", FIELD(codec.pretrain_snr_db)));
        t.push_back(int_key("slow_batch_cap", FIELD(codec.slow_batch_cap)));
        t.push_back(bool_key("encoder_on_device", FIELD(codec.encoder_on_device)));

        t.push_back(real_key("entropy_weight", FIELD(agent.entropy_weight)));
        t.push_back(real_key("discount", FIELD(agent.discount)));
        t.push_back(real_key("ppo_clip", FIELD(agent.ppo_clip)));
        t.push_back(int_key("ppo_epochs", FIELD(agent.ppo_epochs)));
        t.push_back(real_key("explore_floor", FIELD(agent.explore_floor)));
        t.push_back(real_key("critic_step_scale", FIELD(agent.critic_step_scale)));
        t.push_back(bool_key("negotiation", FIELD(agent.negotiation)));
        t.push_back(bool_key("shared_critic", FIELD(agent.shared_critic)));
        t.push_back(int_key("fixed_power_level", FIELD(agent.fixed_power_level)));

        t.push_back(int_key("grad_probe_every", FIELD(engine.grad_probe_every)));
        t.push_back(int_key("grad_probe_m", FIELD(engine.grad_probe_m)));
        t.push_back(real_key("grad_tol", FIELD(engine.grad_tol)));
        t.push_back(int_key("stop_window", FIELD(engine.stop_window)));
        t.push_back(int_key("tsr_window_tasks", FIELD(engine.tsr_window_tasks)));
        t.push_back(bool_key("early_stop", FIELD(engine.early_stop)));
        t.push_back(int_key("trace_every", FIELD(engine.trace_every)));

        t.push_back(bool_key("oran_enabled", FIELD(oran.enabled)));
        t.push_back(int_key("rapp_steps", FIELD(oran.rapp_steps)));
        t.push_back(real_key("sla_margin", FIELD(oran.sla_margin)));
        t.push_back(int_key("telemetry_window", FIELD(oran.telemetry_window)));

        t.push_back(int_key("shift_slot", FIELD(shift.shift_slot)));
        t.push_back(real_key("shift_magnitude", FIELD(shift.shift_magnitude)));
        return t;
    }();
    return table;
}

#undef FIELD

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void require(bool ok, const std::string& invariant) {
    if (!ok) throw ValidationError("invariant violated: " + invariant);
}

}  // namespace

int ScenarioConfig::control_period() const {
    switch (placement) {
        case Placement::P0: return 1;
        case Placement::P1: return p1_period;
        case Placement::P2: return p2_period;
    }
    return 1;
}

double ScenarioConfig::effective_beta() const { return paradigm == Paradigm::AiORan ? 0.0 : beta; }

ScenarioConfig defaults_for(Paradigm p) {
    ScenarioConfig c;
    c.paradigm = p;
    switch (p) {
        case Paradigm::TrRan:
            c.semantic_level = SemanticLevel::L0;
            c.agent.negotiation = false;
            break;
        case Paradigm::AiORan:
            c.semantic_level = SemanticLevel::L0;
            break;
        case Paradigm::SemComOnly:
            c.semantic_level = SemanticLevel::L2;
            c.schedule.c_ratio = 1.0;
            c.schedule.K = 1;
            c.agent.negotiation = false;
            c.agent.shared_critic = false;
            break;
        case Paradigm::TwoTimescale:
            c.semantic_level = SemanticLevel::L2;
            break;
    }
    return c;
}

void validate(const ScenarioConfig& c) {
    require(c.n_agents >= 1, "n_agents >= 1");
    require(c.bandwidth_units >= 1, "bandwidth_units >= 1");
    require(c.horizon_slots >= 1, "horizon_slots >= 1");
    require(c.n_devices_per_agent >= 1, "n_devices_per_agent >= 1");
    require(c.arrival_prob >= 0.0 && c.arrival_prob <= 1.0, "arrival_prob in [0, 1]");
    require(c.latency_budget_slots >= 1, "latency_budget_slots >= 1");
    require(c.drop_penalty_slots >= 0.0, "drop_penalty_slots >= 0");
    require(c.alpha >= 0 && c.beta >= 0 && c.lambda_e >= 0 && c.lambda_l >= 0,
            "alpha, beta, lambda_e, lambda_l are nonnegative");
    require(c.energy_ref_j > 0, "energy_ref_j > 0");
    require(c.energy_budget_j > 0, "energy_budget_j > 0");
    require(1 <= c.p1_period && c.p1_period <= c.p2_period, "placement periods P0=1 <= P1 <= P2");
    if (c.paradigm == Paradigm::TrRan)
        require(c.semantic_level == SemanticLevel::L0, "paradigm=TrRan implies semantic_level=L0");
    if (is_semantic(c.paradigm))
        require(c.semantic_level != SemanticLevel::L0,
                "paradigm in {SemComOnly, TwoTimescale} implies semantic_level >= L1");

    const auto& s = c.schedule;
    require(s.eta0 > 0, "eta0 > 0");
    require(s.decay_p > 0.5 && s.decay_p <= 1.0, "decay_p in (0.5, 1]");
    require(s.c_ratio > 0 && s.c_ratio <= 1.0, "c_ratio in (0, 1]");
    require(s.K >= 1, "K >= 1");
    if (c.paradigm == Paradigm::TwoTimescale && s.enforce_separation)
        require(s.c_ratio <= 0.5, "paradigm=TwoTimescale implies c_ratio <= 0.5");
    if (c.paradigm == Paradigm::SemComOnly)
        require(s.c_ratio == 1.0 && s.K == 1, "paradigm=SemComOnly uses c_ratio = 1, K = 1");

    const auto& m = c.monitor;
    require(m.window_delta >= 1, "window_delta >= 1");
    require(m.eps1 > 0 && m.eps2 > 0 && m.eps3 > 0, "monitor thresholds > 0");
    require(m.histogram_bins >= 2, "histogram_bins >= 2");
    require(m.laplace_alpha >= 0, "laplace_alpha >= 0");
    require(m.warmup_slots >= 0, "monitor_warmup_slots >= 0");
    require(m.persistence_checks >= 1, "persistence_checks >= 1");

    const auto& ch = c.channel;
    require(ch.slot_seconds > 0 && ch.unit_bw_hz > 0, "slot_seconds, unit_bw_hz > 0");
    require(ch.symbols_per_unit_slot() >= 1.0, "unit_bw_hz * slot_seconds >= 1 symbol");
    require(ch.fading_std_db >= 0, "fading_std_db >= 0");
    require(ch.block_length_slots >= 1, "block_length_slots >= 1");
    require(ch.max_attempts >= 1, "max_attempts >= 1");
    require(ch.joules_per_op >= 0, "joules_per_op >= 0");
    require(ch.power_cap_w > 0, "power_cap_w > 0");
    require(ch.interference_coupling >= 0, "interference_coupling >= 0");
    require(ch.bits_per_dim >= 1 && ch.bits_per_dim <= 16, "bits_per_dim in [1, 16]");
    require(ch.quant_range > 0, "quant_range > 0");

    const auto& k = c.codec;
    require(k.embed_dim == 4 || k.embed_dim == 8 || k.embed_dim == 16, "embed_dim in {4, 8, 16}");
    require(k.input_dim >= 8, "input_dim >= 8 (reference projection has 8 rows)");
    require(k.n_classes >= 2, "n_classes >= 2");
    require(k.class_sigma > 0 && k.class_mean_scale > 0, "class_sigma, class_mean_scale > 0");
    require(k.task_bank_size >= 64, "task_bank_size >= 64");
    require(k.validation_size >= 1 && k.probe_size >= 1, "validation_size, probe_size >= 1");
    require(k.lr_gain > 0, "codec_lr_gain > 0");
    require(k.pretrain_steps >= 0 && k.pretrain_batch >= 1 && k.pretrain_lr >= 0, "pretraining settings nonnegative");
    require(k.slow_batch_cap >= 1, "slow_batch_cap >= 1");

    const auto& a = c.agent;
    require(a.entropy_weight >= 0, "entropy_weight >= 0");
    require(a.discount >= 0 && a.discount <= 1, "discount in [0, 1]");
    require(a.ppo_clip > 0, "ppo_clip > 0");
    require(a.ppo_epochs >= 1, "ppo_epochs >= 1");
    require(a.explore_floor >= 0 && a.explore_floor < 1.0 / 48, "explore_floor in [0, 1/|actions|)");
    require(a.critic_step_scale > 0, "critic_step_scale > 0");
    require(a.fixed_power_level >= -1 && a.fixed_power_level <= 3, "fixed_power_level in {-1, 0..3}");

    const auto& e = c.engine;
    require(e.grad_probe_every >= 1 && e.grad_probe_m >= 1, "gradient probe cadence and size >= 1");
    require(e.stop_window >= 1 && e.tsr_window_tasks >= 1, "stopping windows >= 1");
    require(e.trace_every >= 1, "trace_every >= 1");

    require(c.oran.rapp_steps >= 0, "rapp_steps >= 0");
    require(c.oran.sla_margin >= 0, "sla_margin >= 0");
    require(c.oran.telemetry_window >= 1, "telemetry_window >= 1");
    require(c.shift.shift_magnitude >= 0, "shift_magnitude >= 0");
}

void set_key(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& k : key_table()) {
        if (k.name == key) {
            k.set(cfg, value);
            return;
        }
    }
    throw ValidationError("unknown key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> parse_entries(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ParseError("line " + std::to_string(lineno) + ": empty key or value");
        for (const auto& [k, v] : entries)
            if (k == key) throw ParseError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        entries.emplace_back(std::move(key), std::move(value));
    }
    return entries;
}

ScenarioConfig parse_config(const std::string& text) {
    const auto entries = parse_entries(text);
    Paradigm p = Paradigm::TwoTimescale;
    for (const auto& [k, v] : entries)
        if (k == "paradigm") p = parse_paradigm(v);
    ScenarioConfig cfg = defaults_for(p);
    for (const auto& [k, v] : entries) set_key(cfg, k, v);
    validate(cfg);
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open config file '" + path.string() + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::vector<std::pair<std::string, std::string>> config_entries(const ScenarioConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : key_table()) out.emplace_back(k.name, k.get(cfg));
    return out;
}

std::string config_to_text(const ScenarioConfig& cfg, const std::string& line_prefix) {
    std::string s;
    for (const auto& [k, v] : config_entries(cfg)) s += line_prefix + k + " = " + v + "\n";
    return s;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& k : key_table()) out.push_back(k.name);
    return out;
}

StepSizes step_sizes(const ScheduleConfig& s, long t) {
    const double eta = s.eta0 / std::pow(1.0 + static_cast<double>(t), s.decay_p);
    return {eta, s.c_ratio * eta};
}

}  // namespace semran
