#include "semran/control/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semran/kernels/kernels.hpp"
#include "semran/phy/channel.hpp"
#include "semran/sim/errors.hpp"

namespace semran::control {

namespace k = semran::kernels;

std::array<double, kNumFeatures> Observation::features() const {
    return {static_cast<double>(sinr_bucket) / (kSinrBuckets - 1),
            static_cast<double>(std::min(queue_len, kQueueCap)) / kQueueCap,
            static_cast<double>(last_distortion_bucket) / (kDistortionBuckets - 1),
            neighbor_intents[0],
            neighbor_intents[1],
            neighbor_intents[2],
            bias};
}

int sinr_bucket(double sinr_db) {
    const double b = std::floor((sinr_db + 10.0) / 5.0);
    return static_cast<int>(std::clamp(b, 0.0, static_cast<double>(kSinrBuckets - 1)));
}

int distortion_bucket(double d_sem) {
    const double b = std::floor(d_sem / 2.0 * kDistortionBuckets);
    return static_cast<int>(std::clamp(b, 0.0, static_cast<double>(kDistortionBuckets - 1)));
}

ActionTuple ActionSpace::decode(int index) const {
    if (index < 0 || index >= size()) throw std::out_of_range("action index out of range");
    ActionTuple a;
    const int nt = n_token();
    a.token_dim_index = has_token ? index % nt : -1;
    const int rest = index / nt;
    a.bw_request = rest % kMaxBwRequest + 1;
    a.power_level = rest / kMaxBwRequest;
    return a;
}

int ActionSpace::encode(const ActionTuple& a) const {
    const int tok = has_token ? a.token_dim_index : 0;
    return (a.power_level * kMaxBwRequest + (a.bw_request - 1)) * n_token() + tok;
}

PolicyParams PolicyParams::zeros(int n_agents, int n_actions, int n_features, int n_critic_features,
                                 bool shared_critic) {
    PolicyParams p;
    p.n_agents = n_agents;
    p.n_actions = n_actions;
    p.n_features = n_features;
    p.n_critic_features = n_critic_features;
    p.shared_critic = shared_critic;
    p.actor.assign(n_agents, std::vector<double>(static_cast<std::size_t>(n_actions) * n_features, 0.0));
    p.critic.assign(shared_critic ? 1 : n_agents, std::vector<double>(n_critic_features, 0.0));
    return p;
}

std::vector<double> PolicyParams::actor_flat() const {
    std::vector<double> v;
    for (const auto& a : actor) v.insert(v.end(), a.begin(), a.end());
    return v;
}

void PolicyParams::set_actor_flat(const std::vector<double>& v) {
    std::size_t off = 0;
    for (auto& a : actor) {
        if (off + a.size() > v.size()) throw DimensionMismatch("actor vector too short");
        std::copy(v.begin() + static_cast<std::ptrdiff_t>(off), v.begin() + static_cast<std::ptrdiff_t>(off + a.size()),
                  a.begin());
        off += a.size();
    }
    if (off != v.size()) throw DimensionMismatch("actor vector too long");
}

bool PolicyParams::all_finite() const {
    for (const auto* group : {&actor, &critic})
        for (const auto& v : *group)
            for (double x : v)
                if (!std::isfinite(x)) return false;
    return true;
}

RewardWeights weights_of(const ScenarioConfig& cfg) {
    return {cfg.alpha, cfg.effective_beta(), cfg.lambda_e, cfg.lambda_l};
}

RewardRecord compose_reward(double utility, double distortion_term, double energy_penalty, double latency_penalty,
                            const RewardWeights& w) {
    RewardRecord r;
    r.task_utility = utility;
    r.distortion_term = distortion_term;
    r.energy_penalty = energy_penalty;
    r.latency_penalty = latency_penalty;
    r.r_unclipped = w.alpha * utility - w.beta * distortion_term - w.lambda_e * energy_penalty -
                    w.lambda_l * latency_penalty;
    r.r = std::clamp(r.r_unclipped, -kRewardClip, kRewardClip);
    return r;
}

RewardRecord assemble_reward(bool task_success, double d_sem, const phy::TransmissionReport& report,
                             const ScenarioConfig& cfg) {
    const double deadline = static_cast<double>(cfg.latency_budget_slots);
    return compose_reward(task_success ? 1.0 : 0.0, std::clamp(d_sem, 0.0, 2.0) / 2.0,
                          report.energy_joules / cfg.energy_ref_j,
                          std::max(0.0, report.latency_slots - deadline) / deadline, weights_of(cfg));
}

AllocationResult allocate_bandwidth(const std::vector<int>& requests, int B) {
    AllocationResult out;
    const int n = static_cast<int>(requests.size());
    out.grants.assign(n, 0);
    if (n == 0) return out;
    long total = 0;
    for (int r : requests) {
        if (r < 1) throw std::invalid_argument("bandwidth requests must be >= 1");
        total += r;
    }
    if (total <= B) {
        out.grants = requests;
        return out;
    }
    std::vector<double> rem(n);
    int used = 0;
    for (int i = 0; i < n; ++i) {
        const double share = static_cast<double>(requests[i]) * B / static_cast<double>(total);
        out.grants[i] = static_cast<int>(std::floor(share));
        rem[i] = share - out.grants[i];
        used += out.grants[i];
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
    for (int i = 0; used < B && i < n; ++i, ++used) ++out.grants[order[i]];

    if (B < n) {
        out.infeasible = true;
        return out;
    }
    // Every agent keeps at least one unit when the budget allows it.
    for (int i = 0; i < n; ++i) {
        if (out.grants[i] > 0) continue;
        int donor = -1;
        for (int j = 0; j < n; ++j)
            if (out.grants[j] > 1 && (donor < 0 || out.grants[j] > out.grants[donor])) donor = j;
        if (donor < 0) break;
        --out.grants[donor];
        ++out.grants[i];
    }
    return out;
}

double effective_sinr(double own_power, int own_bw, double others_power_sum, double noise_floor_w, double coupling) {
    const double lin = own_power / (noise_floor_w * own_bw + coupling * others_power_sum);
    return 10.0 * std::log10(lin);
}

void softmax(const double* logits, int n, double* probs) {
    double mx = logits[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        probs[i] = std::exp(logits[i] - mx);
        s += probs[i];
    }
    for (int i = 0; i < n; ++i) probs[i] /= s;
}

void policy_probs(const std::vector<double>& psi, int n_actions, const double* features, int n_features,
                  double* probs) {
    std::vector<double> logits(n_actions);
    k::gemv(psi.data(), n_actions, n_features, features, logits.data());
    softmax(logits.data(), n_actions, probs);
}

Selection select_action(const std::vector<double>& psi, int n_actions, const double* features, int n_features,
                        Rng& rng, SelectMode mode, double explore_floor) {
    std::vector<double> logits(n_actions);
    k::gemv(psi.data(), n_actions, n_features, features, logits.data());
    if (mode == SelectMode::Greedy) {
        int best = 0;
        for (int i = 1; i < n_actions; ++i)
            if (logits[i] > logits[best]) best = i;
        std::vector<double> probs(n_actions);
        softmax(logits.data(), n_actions, probs.data());
        return {best, std::log(probs[best])};
    }
    std::vector<double> probs(n_actions);
    softmax(logits.data(), n_actions, probs.data());
    if (explore_floor > 0.0) {
        const double keep = 1.0 - n_actions * explore_floor;
        for (auto& p : probs) p = keep * p + explore_floor;
    }
    const double u = rng.uniform();
    double acc = 0.0;
    int chosen = n_actions - 1;
    for (int i = 0; i < n_actions; ++i) {
        acc += probs[i];
        if (u < acc) {
            chosen = i;
            break;
        }
    }
    return {chosen, std::log(probs[chosen])};
}

UpdateConfig update_config_of(const ScenarioConfig& cfg) {
    return {cfg.agent.entropy_weight, cfg.agent.discount, cfg.agent.ppo_clip, cfg.agent.ppo_epochs,
            cfg.agent.critic_step_scale};
}

std::vector<double> returns_of(const std::vector<Step>& traj, int n_agents, double discount) {
    std::vector<double> G(traj.size(), 0.0);
    std::vector<double> next(n_agents, 0.0);
    std::vector<bool> seen(n_agents, false);
    for (std::size_t i = traj.size(); i-- > 0;) {
        const int a = traj[i].agent;
        G[i] = traj[i].reward + (seen[a] ? discount * next[a] : 0.0);
        next[a] = G[i];
        seen[a] = true;
    }
    return G;
}

std::vector<double> advantages_of(const PolicyParams& p, const std::vector<Step>& traj, double discount) {
    auto G = returns_of(traj, p.n_agents, discount);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& w = p.critic_for(traj[i].agent);
        G[i] -= k::dot(w.data(), traj[i].summary.data(), w.size());
    }
    return G;
}

namespace {

std::vector<int> step_counts(const std::vector<Step>& traj, int n_agents) {
    std::vector<int> c(n_agents, 0);
    for (const auto& s : traj) ++c[s.agent];
    return c;
}

double entropy(const std::vector<double>& probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0) h -= p * std::log(p);
    return h;
}

}  // namespace

double actor_objective(const PolicyParams& p, const PolicyParams& old_params, const std::vector<Step>& traj,
                       const std::vector<double>& advantages, const UpdateConfig& u) {
    const auto counts = step_counts(traj, p.n_agents);
    std::vector<double> probs(p.n_actions), old_probs(p.n_actions);
    double total = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& s = traj[i];
        policy_probs(p.actor[s.agent], p.n_actions, s.features.data(), p.n_features, probs.data());
        policy_probs(old_params.actor[s.agent], p.n_actions, s.features.data(), p.n_features, old_probs.data());
        const double ratio = probs[s.action] / old_probs[s.action];
        const double A = advantages[i];
        const double clipped = std::clamp(ratio, 1.0 - u.ppo_clip, 1.0 + u.ppo_clip);
        const double surr = std::min(ratio * A, clipped * A);
        total += (surr + u.entropy_weight * entropy(probs)) / counts[s.agent];
    }
    return total;
}

std::vector<double> actor_gradient(const PolicyParams& p, const PolicyParams& old_params,
                                   const std::vector<Step>& traj, const std::vector<double>& advantages,
                                   const UpdateConfig& u) {
    const auto counts = step_counts(traj, p.n_agents);
    const std::size_t per_agent = static_cast<std::size_t>(p.n_actions) * p.n_features;
    std::vector<double> grad(per_agent * p.n_agents, 0.0);
    std::vector<double> probs(p.n_actions), old_probs(p.n_actions), glogit(p.n_actions);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& s = traj[i];
        policy_probs(p.actor[s.agent], p.n_actions, s.features.data(), p.n_features, probs.data());
        policy_probs(old_params.actor[s.agent], p.n_actions, s.features.data(), p.n_features, old_probs.data());
        const double ratio = probs[s.action] / old_probs[s.action];
        const double A = advantages[i];
        const bool clipped = (A >= 0.0 && ratio > 1.0 + u.ppo_clip) || (A < 0.0 && ratio < 1.0 - u.ppo_clip);
        const double pg = clipped ? 0.0 : ratio * A;
        const double H = entropy(probs);
        for (int a = 0; a < p.n_actions; ++a) {
            const double onehot = a == s.action ? 1.0 : 0.0;
            const double lp = probs[a] > 0 ? std::log(probs[a]) : 0.0;
            glogit[a] = pg * (onehot - probs[a]) - u.entropy_weight * probs[a] * (lp + H);
        }
        const double w = 1.0 / counts[s.agent];
        double* g = grad.data() + per_agent * static_cast<std::size_t>(s.agent);
        for (int a = 0; a < p.n_actions; ++a)
            k::axpy(w * glogit[a], s.features.data(), g + static_cast<std::size_t>(a) * p.n_features, p.n_features);
    }
    return grad;
}

UpdateResult fast_update(const PolicyParams& p, const std::vector<Step>& traj, double eta, const UpdateConfig& u) {
    UpdateResult r;
    r.params = p;
    if (traj.empty()) {
        r.reason = "empty trajectory";
        return r;
    }
    if (!(eta > 0.0)) {
        r.reason = "zero step";
        return r;
    }
    const auto adv = advantages_of(p, traj, u.discount);

    PolicyParams next = p;
    for (int epoch = 0; epoch < u.ppo_epochs; ++epoch) {
        const auto g = actor_gradient(next, p, traj, adv, u);
        auto flat = next.actor_flat();
        k::axpy(eta, g.data(), flat.data(), flat.size());
        next.set_actor_flat(flat);
    }

    // Critic: squared-error regression of the return on the summary features.
    std::vector<std::vector<double>> cg(next.critic.size(), std::vector<double>(p.n_critic_features, 0.0));
    std::vector<int> cn(next.critic.size(), 0);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const int ci = p.shared_critic ? 0 : traj[i].agent;
        k::axpy(adv[i], traj[i].summary.data(), cg[ci].data(), p.n_critic_features);
        ++cn[ci];
    }
    for (std::size_t c = 0; c < next.critic.size(); ++c)
        if (cn[c] > 0)
            k::axpy(eta * u.critic_step_scale / cn[c], cg[c].data(), next.critic[c].data(), p.n_critic_features);

    if (!next.all_finite()) {
        r.reason = "non-finite gradient";
        return r;
    }
    next.version = p.version + 1;
    r.params = std::move(next);
    r.accepted = true;
    return r;
}

ActionTuple heuristic_policy(const Observation& obs) {
    ActionTuple a;
    a.power_level = obs.queue_len > 2 ? 3 : 1;
    a.bw_request = std::min(kMaxBwRequest, 1 + obs.queue_len);
    a.token_dim_index = -1;
    return a;
}

std::array<double, 3> broadcast_intent(const ActionTuple& planned) {
    return {static_cast<double>(planned.power_level) / (kPowerLevels.size() - 1),
            static_cast<double>(planned.bw_request - 1) / (kMaxBwRequest - 1),
            planned.token_dim_index < 0 ? 0.0
                                        : static_cast<double>(planned.token_dim_index) / (kTokenDims.size() - 1)};
}

}  // namespace semran::control
