#include <algorithm>

#include "semran/engine/engine.hpp"

namespace semran::engine {

MatrixGame reference_game() {
    // Column player has a strictly dominant action (1); the row player's unique
    // best reply to it is 1, so (1, 1) is the only pure equilibrium.
    MatrixGame g;
    const double p0[3][3] = {{1.0, 0.2, 0.0}, {0.6, 0.8, 0.3}, {0.4, 0.5, 0.9}};
    const double p1[3][3] = {{0.3, 0.9, 0.1}, {0.2, 0.7, 0.4}, {0.6, 0.8, 0.5}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            g.payoff[0][i][j] = p0[i][j];
            g.payoff[1][i][j] = p1[i][j];
        }
    return g;
}

GameResult run_matrix_game(const MatrixGame& g, const ScheduleConfig& s, const AgentConfig& ac, long slots,
                           std::uint64_t seed) {
    auto p = control::PolicyParams::zeros(2, 3, 1, 1, false);
    control::UpdateConfig u;
    u.entropy_weight = ac.entropy_weight;
    u.discount = 0.0;
    u.ppo_clip = ac.ppo_clip;
    u.ppo_epochs = ac.ppo_epochs;
    u.critic_step_scale = ac.critic_step_scale;
    Rng r0(seed, stream_id("game.policy", 0));
    Rng r1(seed, stream_id("game.policy", 1));
    const std::vector<double> bias{1.0};
    std::vector<control::Step> traj(2);
    for (long t = 0; t < slots; ++t) {
        const auto s0 = control::select_action(p.actor[0], 3, bias.data(), 1, r0, control::SelectMode::Sample,
                                               ac.explore_floor);
        const auto s1 = control::select_action(p.actor[1], 3, bias.data(), 1, r1, control::SelectMode::Sample,
                                               ac.explore_floor);
        traj[0] = {0, bias, s0.action, s0.logprob, g.payoff[0][s0.action][s1.action], bias};
        traj[1] = {1, bias, s1.action, s1.logprob, g.payoff[1][s0.action][s1.action], bias};
        auto res = control::fast_update(p, traj, step_sizes(s, t).eta, u);
        if (res.accepted) p = std::move(res.params);
    }
    GameResult out;
    out.probs0.resize(3);
    out.probs1.resize(3);
    control::policy_probs(p.actor[0], 3, bias.data(), 1, out.probs0.data());
    control::policy_probs(p.actor[1], 3, bias.data(), 1, out.probs1.data());
    Rng unused(seed, 0);
    out.greedy0 = control::select_action(p.actor[0], 3, bias.data(), 1, unused, control::SelectMode::Greedy).action;
    out.greedy1 = control::select_action(p.actor[1], 3, bias.data(), 1, unused, control::SelectMode::Greedy).action;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double w = out.probs0[i] * out.probs1[j];
            out.expected_payoff0 += w * g.payoff[0][i][j];
            out.expected_payoff1 += w * g.payoff[1][i][j];
        }
    return out;
}

}  // namespace semran::engine
