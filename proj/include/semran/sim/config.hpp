#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "semran/sim/taxonomy.hpp"

namespace semran {

struct ScheduleConfig {
    double eta0 = 2.0;
    double decay_p = 0.6;
    double c_ratio = 0.1;
    int K = 50;
    bool enforce_separation = true;  // TwoTimescale requires c_ratio <= 0.5 unless cleared
};

struct MonitorConfig {
    bool enabled = false;
    int window_delta = 200;
    double eps1 = 0.05;
    double eps2 = 0.1;
    double eps3 = 0.2;
    int histogram_bins = 16;
    double laplace_alpha = 0.5;
    MonitorAction action = MonitorAction::LogOnly;
    int warmup_slots = 1000;
    int persistence_checks = 3;
};

struct ChannelConfig {
    double slot_seconds = 1e-3;
    double unit_bw_hz = 180e3;
    double fading_std_db = 4.0;
    int block_length_slots = 10;
    int max_attempts = 8;
    double joules_per_op = 1e-5;
    double power_cap_w = 0.2;
    double interference_coupling = 1e-3;
    int bits_per_dim = 8;
    double quant_range = 4.0;

    double symbols_per_unit_slot() const { return unit_bw_hz * slot_seconds; }
};

struct CodecConfig {
    int input_dim = 32;
    int embed_dim = 8;
    int n_classes = 8;
    double class_sigma = 0.5;
    double class_mean_scale = 1.0;
    int task_bank_size = 4096;
    int validation_size = 512;
    int probe_size = 32;
    double lr_gain = 1.0;  // multiplies gamma_t in the slow loop
    int pretrain_steps = 3000;
    int pretrain_batch = 128;
    double pretrain_lr = 0.5;
    double pretrain_snr_db = 10.0;
    int slow_batch_cap = 4096;
    bool encoder_on_device = true;
};

struct AgentConfig {
    double entropy_weight = 1e-2;
    double discount = 0.99;
    double ppo_clip = 0.2;
    int ppo_epochs = 1;
    double explore_floor = 1e-4;
    double critic_step_scale = 1.0;
    bool negotiation = true;
    bool shared_critic = true;
    int fixed_power_level = -1;  // >= 0 pins the power component of every action
};

struct EngineConfig {
    int grad_probe_every = 100;
    int grad_probe_m = 64;
    double grad_tol = 0.05;
    int stop_window = 500;
    int tsr_window_tasks = 20000;
    bool early_stop = false;
    int trace_every = 1;
};

struct OranConfig {
    bool enabled = false;
    int rapp_steps = 0;
    double sla_margin = 0.01;
    int telemetry_window = 100;
};

struct ShiftConfig {
    long shift_slot = -1;
    double shift_magnitude = 0.0;
};

struct ScenarioConfig {
    Paradigm paradigm = Paradigm::TwoTimescale;
    SemanticLevel semantic_level = SemanticLevel::L2;
    Placement placement = Placement::P0;
    int p1_period = 10;
    int p2_period = 500;
    int n_agents = 4;
    int n_devices_per_agent = 15;
    double arrival_prob = 0.65;
    double snr_db = 10.0;
    int bandwidth_units = 10;
    double energy_budget_j = 20.0;
    int latency_budget_slots = 5;
    double drop_penalty_slots = 5.0;
    double alpha = 1.0;
    double beta = 1.0;
    double lambda_e = 0.1;
    double lambda_l = 0.1;
    double energy_ref_j = 2e-5;
    long horizon_slots = 20000;
    std::uint64_t seed = 1;

    ScheduleConfig schedule;
    MonitorConfig monitor;
    ChannelConfig channel;
    CodecConfig codec;
    AgentConfig agent;
    EngineConfig engine;
    OranConfig oran;
    ShiftConfig shift;

    // Effective loop period of the fast controller in slots for the chosen placement.
    int control_period() const;
    // Weight on the semantic term actually used in rewards (0 for the bit-centric learner).
    double effective_beta() const;
};

// Paradigm-specific defaults (schedule, critic sharing, negotiation, semantic level).
ScenarioConfig defaults_for(Paradigm p);

// Throws ValidationError naming the violated invariant.
void validate(const ScenarioConfig& cfg);

// Raw `key = value` lines ('#' starts a comment); duplicates are a ParseError.
std::vector<std::pair<std::string, std::string>> parse_entries(const std::string& text);
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

// Sets one documented key; throws ValidationError for unknown keys, ParseError for bad values.
void set_key(ScenarioConfig& cfg, const std::string& key, const std::string& value);

// Resolved config as ordered (key, value) pairs; round-trips through parse_config.
std::vector<std::pair<std::string, std::string>> config_entries(const ScenarioConfig& cfg);
std::string config_to_text(const ScenarioConfig& cfg, const std::string& line_prefix = "");

std::vector<std::string> config_keys();

struct StepSizes {
    double eta;
    double gamma;
};

StepSizes step_sizes(const ScheduleConfig& s, long t);

}  // namespace semran
