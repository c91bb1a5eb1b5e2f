#include <cmath>
#include <limits>

#include "doctest.h"
#include "semran/control/agent.hpp"
#include "semran/oracles/oracles.hpp"
#include "semran/phy/channel.hpp"

using namespace semran;
using namespace semran::control;

namespace {

// Every nonnegative integer split of B over n agents.
void splits(int n, int B, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == n - 1) {
        cur.push_back(B);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int g = 0; g <= B; ++g) {
        cur.push_back(g);
        splits(n, B - g, cur, out);
        cur.pop_back();
    }
}

double l1_to_shares(const std::vector<int>& g, const std::vector<int>& req, int B) {
    double total = 0.0;
    for (int r : req) total += r;
    double d = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) d += std::abs(g[i] - req[i] * B / total);
    return d;
}

}  // namespace

TEST_CASE("allocation: under budget and symmetric scaling") {
    CHECK(allocate_bandwidth({2, 3}, 10).grants == std::vector<int>{2, 3});
    CHECK(allocate_bandwidth({4, 4, 4}, 6).grants == std::vector<int>{2, 2, 2});
    const auto r = allocate_bandwidth({1, 1, 1}, 2);
    CHECK(r.infeasible);
}

TEST_CASE("allocation: largest remainder equals the exhaustive L1-closest split") {
    std::vector<std::vector<int>> all;
    std::vector<int> cur;
    splits(3, 4, cur, all);
    std::vector<int> best;
    double bd = std::numeric_limits<double>::infinity();
    for (const auto& g : all) {
        const double d = l1_to_shares(g, {3, 2, 1}, 4);
        if (d < bd - 1e-12) {
            bd = d;
            best = g;
        }
    }
    CHECK(allocate_bandwidth({3, 2, 1}, 4).grants == best);

    Rng rng(8, stream_id("test.alloc"));
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(3));
        std::vector<int> req(n);
        long total = 0;
        for (auto& q : req) {
            q = 1 + static_cast<int>(rng.below(4));
            total += q;
        }
        const int B = n + static_cast<int>(rng.below(8));
        if (total <= B) continue;
        bool big = true;  // keep cases where every share is at least one unit
        for (int q : req) big = big && q * B >= total;
        if (!big) continue;
        std::vector<std::vector<int>> cand;
        std::vector<int> c2;
        splits(n, B, c2, cand);
        double m = std::numeric_limits<double>::infinity();
        for (const auto& g : cand) m = std::min(m, l1_to_shares(g, req, B));
        const auto got = allocate_bandwidth(req, B).grants;
        int sum = 0;
        for (int g : got) sum += g;
        CHECK(sum == B);
        CHECK(l1_to_shares(got, req, B) == doctest::Approx(m).epsilon(1e-12));
        ++checked;
    }
    CHECK(checked > 50);
}

TEST_CASE("effective sinr: noise only, monotone in interference, worked value") {
    CHECK(effective_sinr(0.1, 1, 0.0, 1e-3, 0.05) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(effective_sinr(0.1, 1, 0.8, 1e-3, 0.05) < effective_sinr(0.1, 1, 0.4, 1e-3, 0.05));
    const double expect = 10.0 * std::log10(0.1 / (0.001 + 0.05 * 0.4));
    CHECK(effective_sinr(0.1, 1, 0.4, 1e-3, 0.05) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(effective_sinr(0.1, 1, 0.4, 1e-3, 0.05) == doctest::Approx(6.78).epsilon(1e-3));
}

TEST_CASE("select action: uniform under zero weights") {
    const int A = 48, F = kNumFeatures;
    std::vector<double> psi(A * F, 0.0);
    std::vector<double> f(F, 0.5);
    Rng rng(1, stream_id("test.uniform"));
    std::vector<int> counts(A, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[select_action(psi, A, f.data(), F, rng, SelectMode::Sample).action];
    for (int c : counts) CHECK(std::abs(static_cast<double>(c) / n - 1.0 / A) < 0.01);
}

TEST_CASE("select action: saturation, greedy ties, exploration floor") {
    const int A = 48, F = kNumFeatures;
    std::vector<double> psi(A * F, 0.0);
    std::vector<double> f(F, 0.0);
    f[F - 1] = 1.0;
    psi[7 * F + F - 1] = 20.0;
    Rng rng(2, stream_id("test.saturate"));
    int hits = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) hits += select_action(psi, A, f.data(), F, rng, SelectMode::Sample).action == 7;
    CHECK(static_cast<double>(hits) / n >= 0.9999 - 1e-12);

    psi[3 * F + F - 1] = 20.0;
    CHECK(select_action(psi, A, f.data(), F, rng, SelectMode::Greedy).action == 3);

    // With the floor every action keeps probability >= 1e-4.
    psi.assign(A * F, 0.0);
    psi[0 * F + F - 1] = 60.0;
    int others = 0;
    for (int i = 0; i < n; ++i) {
        const auto s = select_action(psi, A, f.data(), F, rng, SelectMode::Sample, 1e-4);
        CHECK(s.logprob >= std::log(1e-4) - 1e-12);
        others += s.action != 0;
    }
    const double expect = n * (A - 1) * 1e-4;
    CHECK(std::abs(others - expect) < 5.0 * std::sqrt(expect));
}

TEST_CASE("reward: worked cases") {
    ScenarioConfig cfg;
    phy::TransmissionReport rep;
    rep.energy_joules = 0.0;
    rep.latency_slots = 1.0;
    auto r = assemble_reward(true, 0.0, rep, cfg);
    CHECK(r.r == 1.0);
    r = assemble_reward(false, 2.0, rep, cfg);
    CHECK(r.task_utility == 0.0);
    CHECK(r.distortion_term == 1.0);
    CHECK(r.r == doctest::Approx(-cfg.beta).epsilon(1e-15));
    RewardWeights w;
    CHECK(compose_reward(0.9, 0.2, 0.0, 0.0, w).r == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(compose_reward(0.0, 1.0, 500.0, 0.0, w).r == -kRewardClip);
    // Latency beyond the deadline is penalized relative to the deadline.
    rep.latency_slots = cfg.latency_budget_slots * 2.0;
    r = assemble_reward(true, 0.0, rep, cfg);
    CHECK(r.latency_penalty == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.r == doctest::Approx(1.0 - cfg.lambda_l).epsilon(1e-15));
}

TEST_CASE("fast update: defaults, zero-advantage no-op, gradient check") {
    const auto u = update_config_of(ScenarioConfig{});
    CHECK(u.entropy_weight == 1e-2);
    CHECK(u.ppo_clip == 0.2);
    CHECK(u.discount == 0.99);

    auto p = PolicyParams::zeros(2, 4, 3, 3, true);
    Rng rng(3, stream_id("test.zeroadv"));
    for (auto& a : p.actor)
        for (auto& v : a) v = rng.normal();
    std::vector<Step> traj;
    for (int i = 0; i < 6; ++i) {
        Step s;
        s.agent = i % 2;
        s.features = {rng.normal(), rng.normal(), 1.0};
        s.action = static_cast<int>(rng.below(4));
        s.reward = 0.0;  // zero critic and zero reward: every advantage is 0
        s.summary = {0.1, 0.2, 1.0};
        traj.push_back(s);
    }
    UpdateConfig z = u;
    z.entropy_weight = 0.0;
    const auto r = fast_update(p, traj, 0.5, z);
    REQUIRE(r.accepted);
    CHECK(r.params.actor == p.actor);
    CHECK(r.params.critic == p.critic);
    const auto r2 = fast_update(p, traj, 0.5, u);
    CHECK(r2.params.actor != p.actor);  // entropy bonus alone moves the actor

    const auto g = oracles::gradcheck_actor(20, 202);
    CHECK(g.instances == 20);
    CHECK(g.max_rel_err <= 1e-4);
}

TEST_CASE("returns: discounted reward-to-go per agent") {
    std::vector<Step> traj(4);
    traj[0].agent = 0;
    traj[0].reward = 1.0;
    traj[1].agent = 1;
    traj[1].reward = 5.0;
    traj[2].agent = 0;
    traj[2].reward = 2.0;
    traj[3].agent = 1;
    traj[3].reward = 7.0;
    const auto g = returns_of(traj, 2, 0.5);
    CHECK(g[0] == 2.0);
    CHECK(g[2] == 2.0);
    CHECK(g[1] == 8.5);
    CHECK(g[3] == 7.0);
}

TEST_CASE("heuristic policy rule table and intents") {
    Observation o;
    o.queue_len = 0;
    auto a = heuristic_policy(o);
    CHECK(a.power_w() == 0.1);
    CHECK(a.bw_request == 1);
    o.queue_len = 5;
    a = heuristic_policy(o);
    CHECK(a.power_level == 3);
    CHECK(a.bw_request == 4);

    ActionTuple mx{3, 4, 2};
    CHECK(broadcast_intent(mx) == std::array<double, 3>{1.0, 1.0, 1.0});
    ActionTuple mn{0, 1, 0};
    CHECK(broadcast_intent(mn) == std::array<double, 3>{0.0, 0.0, 0.0});
}

TEST_CASE("action space encode/decode is a bijection") {
    for (bool tok : {true, false}) {
        ActionSpace s{tok};
        for (int i = 0; i < s.size(); ++i) CHECK(s.encode(s.decode(i)) == i);
    }
    CHECK(ActionSpace{true}.size() == 48);
    CHECK(ActionSpace{false}.size() == 16);
}
