// semran command-line entry point: run scenarios, validate configs, run oracles.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "semran/engine/engine.hpp"
#include "semran/experiments/output.hpp"
#include "semran/experiments/scenarios.hpp"
#include "semran/kpi/kpi.hpp"
#include "semran/oracles/oracles.hpp"
#include "semran/sim/errors.hpp"

using namespace semran;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int check_pareto() {
    int bad = 0;
    for (int trial = 0; trial < 50; ++trial) {
        Rng rng(7, stream_id("cli.pareto", static_cast<std::uint64_t>(trial)));
        std::vector<kpi::Point> pts(200);
        for (auto& p : pts) {
            // Coarse grid so ties and duplicates occur.
            p.latency = std::floor(rng.uniform() * 40.0);
            p.energy = std::floor(rng.uniform() * 40.0);
        }
        if (kpi::frontier_mask(pts) != oracles::brute_force_frontier(pts)) ++bad;
    }
    std::printf("pareto: %d/50 random 200-point sets differ from the O(n^2) filter\n", bad);
    return bad == 0 ? kOk : kInvalid;
}

int check_gradcheck() {
    const auto c = oracles::gradcheck_codec(20, 11);
    const auto a = oracles::gradcheck_actor(20, 12);
    std::printf("gradcheck: codec %d instances max rel err %.3g; actor %d instances max rel err %.3g (tol 1e-4)\n",
                c.instances, c.max_rel_err, a.instances, a.max_rel_err);
    return c.max_rel_err <= 1e-4 && a.max_rel_err <= 1e-4 ? kOk : kInvalid;
}

int check_nash() {
    const auto g = engine::reference_game();
    const auto ne = oracles::pure_nash(g);
    if (ne.size() != 1) {
        std::printf("nash: expected a unique pure equilibrium, found %zu\n", ne.size());
        return kInvalid;
    }
    const auto [e0, e1] = ne.front();
    const ScenarioConfig cfg;
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto r = engine::run_matrix_game(g, cfg.schedule, cfg.agent, 50000, seed);
        const bool ok = r.greedy0 == e0 && r.greedy1 == e1 &&
                        std::abs(r.expected_payoff0 - g.payoff[0][e0][e1]) <= 1e-2 &&
                        std::abs(r.expected_payoff1 - g.payoff[1][e0][e1]) <= 1e-2;
        hits += ok ? 1 : 0;
    }
    std::printf("nash: equilibrium (%d,%d); learned it within 1e-2 payoff in %d/10 seeds\n", e0, e1, hits);
    return hits >= 9 ? kOk : kInvalid;
}

int check_kpi() {
    auto cfg = defaults_for(Paradigm::TwoTimescale);
    cfg.horizon_slots = 3000;
    cfg.seed = 3;
    const auto r = engine::run(cfg);
    experiments::Cell c;
    c.arm = "TwoTimescale";
    c.cfg = cfg;
    c.seed = cfg.seed;
    const auto text = experiments::trace_jsonl(c, r);
    const auto o = oracles::kpi_from_jsonl(text);
    const double d = oracles::kpi_max_abs_diff(o, kpi::compute_kpis(r.trace));
    std::printf("kpi: %ld rows; max |oracle - compute_kpis| = %.3g (tol 1e-12)\n", o.rows, d);
    return d <= 1e-12 ? kOk : kInvalid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semran: semantic-agentic RAN simulator"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a scenario sweep and write CSV, traces and manifest");
    std::string scenario, out, config_path, traces = "first";
    int seeds = 10, jobs = 1;
    std::uint64_t first_seed = 1;
    run->add_option("--scenario", scenario, "tsr-vs-snr|bandwidth|learning|pareto|c-sweep|drift")->required();
    run->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);
    run->add_option("--first-seed", first_seed, "first seed of the list");
    run->add_option("--out", out, "output directory")->required();
    run->add_option("--config", config_path, "key = value overrides applied to every arm");
    run->add_option("--jobs", jobs, "concurrent cells")->check(CLI::PositiveNumber);
    run->add_option("--traces", traces, "per-slot traces for: first (seed) | all | none");

    auto* val = app.add_subcommand("validate", "parse and validate a scenario config");
    std::string val_path;
    val->add_option("--config", val_path, "config file")->required();

    auto* orc = app.add_subcommand("oracle", "run a brute-force or finite-difference oracle");
    std::string check;
    orc->add_option("--check", check, "pareto|gradcheck|nash|kpi")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInvalid;
    }

    try {
        if (*run) {
            experiments::RunOptions opt;
            opt.scenario = experiments::parse_scenario(scenario);
            opt.seeds = seeds;
            opt.first_seed = first_seed;
            opt.jobs = jobs;
            opt.out = out;
            opt.traces = experiments::parse_trace_mode(traces);
            if (!config_path.empty()) {
                opt.overrides = parse_entries(slurp(config_path));
                for (const auto& [k, v] : opt.overrides)
                    if (k == "paradigm" || k == "seed")
                        throw ValidationError("'" + k + "' is set by the scenario, not by --config");
            }
            const auto res = experiments::run_scenario(opt);
            std::printf("%s: %zu cells -> %s\n", scenario.c_str(), res.size(),
                        (opt.out / (scenario + ".csv")).string().c_str());
            return kOk;
        }
        if (*val) {
            const auto cfg = parse_config(slurp(val_path));
            std::printf("ok: %s paradigm=%s\n", val_path.c_str(), to_string(cfg.paradigm).c_str());
            return kOk;
        }
        if (*orc) {
            if (check == "pareto") return check_pareto();
            if (check == "gradcheck") return check_gradcheck();
            if (check == "nash") return check_nash();
            if (check == "kpi") return check_kpi();
            throw ValidationError("unknown oracle '" + check + "'");
        }
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return kInvalid;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return kInvalid;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kRuntime;
    }
    return kOk;
}
