#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "semran/sim/config.hpp"
#include "semran/sim/rng.hpp"

namespace semran::phy {
struct TransmissionReport;
}

namespace semran::control {

inline constexpr std::array<double, 4> kPowerLevels{0.05, 0.1, 0.15, 0.2};
inline constexpr std::array<int, 3> kTokenDims{4, 8, 16};
inline constexpr int kMaxBwRequest = 4;

// Observation feature layout (documented, part of the trace schema):
//   0 sinr bucket / 7   1 min(queue, 30) / 30   2 distortion bucket / 7
//   3..5 mean neighbour intent (power, bw, token)   6 bias
inline constexpr int kNumFeatures = 7;
inline constexpr int kSinrBuckets = 8;       // 5 dB wide over [-10, 30) dB, clipped
inline constexpr int kDistortionBuckets = 8;  // over normalized distortion [0, 1]
inline constexpr int kQueueCap = 30;

struct Observation {
    int sinr_bucket = 0;
    int queue_len = 0;
    int last_distortion_bucket = 0;
    std::array<double, 3> neighbor_intents{0.0, 0.0, 0.0};
    double bias = 1.0;

    std::array<double, kNumFeatures> features() const;
};

int sinr_bucket(double sinr_db);
int distortion_bucket(double d_sem);

struct ActionTuple {
    int power_level = 0;      // index into kPowerLevels
    int bw_request = 1;       // 1..4 units
    int token_dim_index = -1; // index into kTokenDims, -1 when the payload is fixed (bit-centric)

    double power_w() const { return kPowerLevels[static_cast<std::size_t>(power_level)]; }
    int token_dim() const { return token_dim_index < 0 ? 0 : kTokenDims[static_cast<std::size_t>(token_dim_index)]; }
    bool operator==(const ActionTuple&) const = default;
};

// Flat action index = (power * 4 + (bw - 1)) * n_token + token.
struct ActionSpace {
    bool has_token = true;
    int n_token() const { return has_token ? static_cast<int>(kTokenDims.size()) : 1; }
    int size() const { return static_cast<int>(kPowerLevels.size()) * kMaxBwRequest * n_token(); }
    ActionTuple decode(int index) const;
    int encode(const ActionTuple& a) const;
};

// Per-agent actors (n_actions x n_features, row-major) and either one shared
// critic over the joint summary or one critic per agent.
struct PolicyParams {
    int n_agents = 0;
    int n_actions = 0;
    int n_features = 0;
    int n_critic_features = 0;
    bool shared_critic = true;
    std::vector<std::vector<double>> actor;
    std::vector<std::vector<double>> critic;
    std::uint64_t version = 0;

    static PolicyParams zeros(int n_agents, int n_actions, int n_features, int n_critic_features, bool shared_critic);
    const std::vector<double>& critic_for(int agent) const { return critic[shared_critic ? 0 : agent]; }
    std::vector<double> actor_flat() const;
    void set_actor_flat(const std::vector<double>& v);
    bool all_finite() const;
};

struct RewardWeights {
    double alpha = 1.0;
    double beta = 1.0;
    double lambda_e = 0.1;
    double lambda_l = 0.1;
};
RewardWeights weights_of(const ScenarioConfig& cfg);

struct RewardRecord {
    double r = 0.0;  // clipped
    double r_unclipped = 0.0;
    double task_utility = 0.0;
    double distortion_term = 0.0;
    double energy_penalty = 0.0;
    double latency_penalty = 0.0;
};

inline constexpr double kRewardClip = 5.0;

RewardRecord compose_reward(double utility, double distortion_term, double energy_penalty, double latency_penalty,
                            const RewardWeights& w);
RewardRecord assemble_reward(bool task_success, double d_sem, const phy::TransmissionReport& report,
                             const ScenarioConfig& cfg);

struct AllocationResult {
    std::vector<int> grants;
    bool infeasible = false;  // B < n_agents: some agents got 0
};
AllocationResult allocate_bandwidth(const std::vector<int>& requests, int B);

// linear = own_power / (noise_floor_w * own_bw + coupling * others_power_sum), returned in dB.
double effective_sinr(double own_power, int own_bw, double others_power_sum, double noise_floor_w,
                      double coupling = 0.05);

enum class SelectMode { Sample, Greedy };

struct Selection {
    int action = 0;
    double logprob = 0.0;
};

void softmax(const double* logits, int n, double* probs);
void policy_probs(const std::vector<double>& psi, int n_actions, const double* features, int n_features,
                  double* probs);
// Sample mode draws from (1 - n*floor) * softmax + floor; the returned logprob is
// that of the sampling distribution. Greedy ignores the floor.
Selection select_action(const std::vector<double>& psi, int n_actions, const double* features, int n_features,
                        Rng& rng, SelectMode mode, double explore_floor = 0.0);

struct Step {
    int agent = 0;
    std::vector<double> features;
    int action = 0;
    double logprob = 0.0;
    double reward = 0.0;
    std::vector<double> summary;
};

struct UpdateConfig {
    double entropy_weight = 1e-2;
    double discount = 0.99;
    double ppo_clip = 0.2;
    int ppo_epochs = 1;
    double critic_step_scale = 1.0;
};
UpdateConfig update_config_of(const ScenarioConfig& cfg);

// Discounted reward-to-go within each agent's subsequence of the trajectory.
std::vector<double> returns_of(const std::vector<Step>& traj, int n_agents, double discount);
std::vector<double> advantages_of(const PolicyParams& p, const std::vector<Step>& traj, double discount);

// Clipped surrogate plus entropy bonus, summed over agents of the per-agent step mean,
// with ratios taken against `old_params` and advantages held fixed.
double actor_objective(const PolicyParams& p, const PolicyParams& old_params, const std::vector<Step>& traj,
                       const std::vector<double>& advantages, const UpdateConfig& u);
std::vector<double> actor_gradient(const PolicyParams& p, const PolicyParams& old_params,
                                   const std::vector<Step>& traj, const std::vector<double>& advantages,
                                   const UpdateConfig& u);

struct UpdateResult {
    PolicyParams params;
    bool accepted = false;
    std::string reason;
};

UpdateResult fast_update(const PolicyParams& p, const std::vector<Step>& traj, double eta, const UpdateConfig& u);

ActionTuple heuristic_policy(const Observation& obs);

std::array<double, 3> broadcast_intent(const ActionTuple& planned);
// Side-channel cost of one intent broadcast, charged every slot while negotiation is on.
inline constexpr double kIntentSymbols = 3.0;

}  // namespace semran::control
