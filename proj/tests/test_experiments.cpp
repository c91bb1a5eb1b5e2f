#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "semran/experiments/output.hpp"
#include "semran/experiments/scenarios.hpp"
#include "semran/kpi/kpi.hpp"
#include "semran/oracles/oracles.hpp"
#include "semran/sim/errors.hpp"

using namespace semran;
using namespace semran::experiments;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::map<std::string, std::string> dir_bytes(const fs::path& d) {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::recursive_directory_iterator(d))
        if (e.is_regular_file()) m[fs::relative(e.path(), d).generic_string()] = slurp(e.path());
    return m;
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("semran_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("scenarios: names parse and cells carry the presets") {
    for (auto s : all_scenarios()) CHECK(parse_scenario(to_string(s)) == s);
    CHECK_THROWS_AS(parse_scenario("nope"), ValidationError);
    CHECK_THROWS_AS(parse_trace_mode("some"), ValidationError);

    const auto snr = make_cells(Scenario::TsrVsSnr, 2, 5);
    CHECK(snr.size() == 4 * 7 * 2);
    for (const auto& c : snr) {
        CHECK(c.sweep_key == "snr_db");
        CHECK(c.cfg.snr_db == c.sweep_value);
        CHECK(c.cfg.seed == c.seed);
        CHECK((c.seed == 5 || c.seed == 6));
    }
    CHECK(std::is_sorted(snr.begin(), snr.end(), cell_less));

    const auto drift = make_cells(Scenario::Drift, 1, 1);
    REQUIRE(drift.size() == 2);
    CHECK(drift[0].cfg.shift.shift_magnitude == 0.0);
    CHECK(drift[1].cfg.shift.shift_magnitude == 2.0);
    CHECK(drift[1].cfg.monitor.enabled);
    CHECK(drift[1].cfg.oran.enabled);

    const auto lrn = make_cells(Scenario::Learning, 1, 1);
    for (const auto& c : lrn) {
        if (c.cfg.paradigm == Paradigm::SemComOnly) CHECK(c.cfg.schedule.K == 1);
        if (c.cfg.paradigm == Paradigm::TwoTimescale) CHECK(c.cfg.schedule.K == 50);
    }

    const auto over = make_cells(Scenario::Pareto, 1, 1, {{"horizon_slots", "300"}});
    CHECK(over.size() == 4 * 4 * 4);
    for (const auto& c : over) CHECK(c.cfg.horizon_slots == 300);
    CHECK_THROWS_AS(make_cells(Scenario::Pareto, 1, 1, {{"no_such_key", "1"}}), ValidationError);
    CHECK_THROWS_AS(make_cells(Scenario::Pareto, 0, 1), ValidationError);
}

TEST_CASE("output: CSV header block, column line, NA handling") {
    auto cells = make_cells(Scenario::Drift, 1, 3, {{"horizon_slots", "400"}, {"shift_slot", "300"}, {"monitor_warmup_slots", "0"}});
    const auto results = run_cells(cells, 1);
    const auto text = kpi_csv(Scenario::Drift, results);
    const auto ls = lines_of(text);
    REQUIRE(ls.size() > 5);
    CHECK(ls[0] == std::string("# schema: ") + kKpiSchema);
    CHECK(ls[1].rfind("# build: ", 0) == 0);
    CHECK(ls[2] == "# scenario: drift");
    std::size_t i = 0;
    while (i < ls.size() && ls[i][0] == '#') ++i;
    REQUIRE(i + 3 == ls.size());
    const auto cols = csv_columns();
    CHECK(split(ls[i], ',') == cols);
    for (std::size_t r = i + 1; r < ls.size(); ++r) {
        const auto f = split(ls[r], ',');
        REQUIRE(f.size() == cols.size());
        for (const auto& v : f) CHECK_FALSE(v.empty());
    }
    // The unshifted arm has no rollback.
    const auto f0 = split(ls[i + 1], ',');
    const auto col = [&](const std::string& n) { return std::find(cols.begin(), cols.end(), n) - cols.begin(); };
    CHECK(f0[col("sweep_key")] == "shift_magnitude");
    CHECK(f0[col("rollback_slot")] == "NA");
    CHECK(f0[col("post_rollback_tsr")] == "NA");
}

TEST_CASE("output: fmt round-trips doubles") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678, -2.5}) CHECK(std::stod(fmt(v)) == v);
    CHECK(fmt(3.0) == "3");
}

TEST_CASE("output: trace JSON-lines header, slot rows, monitor rows") {
    auto cells = make_cells(Scenario::Drift, 1, 2, {{"horizon_slots", "300"}, {"monitor_warmup_slots", "0"}});
    const auto& c = cells[1];
    const auto r = engine::run(c.cfg);
    const auto ls = lines_of(trace_jsonl(c, r));
    const auto h = nlohmann::json::parse(ls[0]);
    CHECK(h.at("schema") == kpi::kTraceSchema);
    CHECK(h.at("seed") == 2);
    CHECK(h.at("slots") == 300);
    CHECK(h.at("sweep").at("shift_magnitude") == 2.0);
    long slots = 0, mons = 0, last_t = -1;
    for (std::size_t i = 1; i < ls.size(); ++i) {
        const auto j = nlohmann::json::parse(ls[i]);
        if (j.contains("type") && j.at("type") == "monitor") {
            ++mons;
            CHECK(j.at("t").get<long>() == last_t);
            CHECK(j.contains("drift"));
            CHECK(j.contains("action"));
        } else {
            const auto row = kpi::row_from_json(j);
            CHECK(row.t == last_t + 1);
            last_t = row.t;
            ++slots;
        }
    }
    CHECK(slots == 300);
    CHECK(mons == static_cast<long>(r.checks.size()));
    CHECK(mons == 300 / c.cfg.p1_period);
    CHECK(trace_stem(c) == "TwoTimescale_shift_magnitude=2_seed2");
}

TEST_CASE("output: frontier flags agree with brute force on the seed means") {
    auto cells = make_cells(Scenario::Pareto, 2, 1, {{"horizon_slots", "200"}});
    const auto results = run_cells(cells, 2);
    const auto rows = frontier_rows(results);
    CHECK(rows.size() == 4 * 16);
    std::map<std::string, std::vector<kpi::Point>> pts;
    std::map<std::string, std::vector<bool>> flags;
    for (const auto& r : rows) {
        REQUIRE(r.seeds == 2);
        pts[r.arm].push_back({r.mean_latency, r.mean_energy});
        flags[r.arm].push_back(r.is_frontier);
    }
    for (const auto& [arm, p] : pts) CHECK(oracles::brute_force_frontier(p) == flags[arm]);
    const auto csv = lines_of(frontier_csv(rows));
    CHECK(csv[0] == std::string("# schema: ") + kFrontierSchema);
    CHECK(csv.size() == rows.size() + 3);
}

TEST_CASE("run_scenario: rerun is byte-identical and the manifest hashes every file") {
    RunOptions o;
    o.scenario = Scenario::Pareto;
    o.seeds = 2;
    o.overrides = {{"horizon_slots", "150"}};
    o.traces = TraceMode::First;
    o.jobs = 2;
    const auto da = scratch("a"), db = scratch("b");
    o.out = da;
    run_scenario(o);
    o.out = db;
    o.jobs = 1;
    run_scenario(o);
    const auto a = dir_bytes(da);
    const auto b = dir_bytes(db);
    CHECK(a == b);
    CHECK(a.count("pareto.csv"));
    CHECK(a.count("pareto_frontier.csv"));

    const auto m = nlohmann::json::parse(b.at("manifest.json"));
    CHECK(m.at("schema") == kManifestSchema);
    const auto& files = m.at("scenarios").at("pareto").at("files");
    CHECK(files.size() + 1 == b.size());
    for (const auto& f : files) CHECK(f.at("bytes").get<std::size_t>() == b.at(f.at("path").get<std::string>()).size());
    CHECK(m.at("scenarios").at("pareto").at("seeds") == nlohmann::json::array({1, 2}));
}
