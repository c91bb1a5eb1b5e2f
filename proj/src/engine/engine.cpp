#include "semran/engine/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <numeric>

#include "semran/kernels/kernels.hpp"
#include "semran/oran/registry.hpp"
#include "semran/phy/channel.hpp"
#include "semran/sim/rng.hpp"

namespace semran::engine {

namespace k = semran::kernels;
using codec::TaskWorld;
using control::ActionTuple;

namespace {

struct Task {
    long id = 0;
    std::uint32_t idx = 0;
    long arrival = 0;
    double remaining = -1.0;  // bits (digital); < 0 until service starts
    int attempts = 0;
};

struct Resolved {
    bool success = false;
    double dsem = 0.0;
    double latency = 0.0;
};

struct Agent {
    std::deque<Task> q;
    phy::ChannelState ch;
    Rng arrivals;
    Rng picks;
    Rng policy;
    ActionTuple act;
    int action = -1;
    double logprob = 0.0;
    std::vector<double> features;
    std::array<double, 3> intent{0.0, 0.0, 0.0};
    double last_dsem = 0.0;
    oran::TsrWindow tsr100{100};
    long last_task_id = -1;
    double last_conf = 1.0;
    int served_last = 0;
    int delivered_window = 0;
    double period_reward = 0.0;
    int period_slots = 0;

    Agent(const ScenarioConfig& cfg, int i)
        : ch(cfg.snr_db, cfg.channel.fading_std_db, cfg.channel.block_length_slots, cfg.seed, i),
          arrivals(cfg.seed, stream_id("arrivals", i)),
          picks(cfg.seed, stream_id("tasks", i)),
          policy(cfg.seed, stream_id("policy", i)) {}
};

bool learns_codec(Paradigm p) { return p == Paradigm::TwoTimescale || p == Paradigm::SemComOnly; }

class Engine {
public:
    Engine(const ScenarioConfig& cfg, std::shared_ptr<const TaskWorld> world, const Hooks& hooks)
        : cfg_(cfg), world_(std::move(world)), hooks_(hooks), probe_rng_(cfg.seed, stream_id("gradprobe", 0)) {
        semantic_ = is_semantic(cfg_.paradigm);
        learner_ = is_learning(cfg_.paradigm);
        space_.has_token = semantic_;
        for (int i = 0; i < cfg_.n_agents; ++i) agents_.emplace_back(cfg_, i);
        const int nf = control::kNumFeatures;
        policy_ = control::PolicyParams::zeros(cfg_.n_agents, space_.size(), nf, nf, cfg_.agent.shared_critic);
        upd_ = control::update_config_of(cfg_);
        codec_ = world_->pretrained;
        version_counter_ = codec_.version;
        pdec_ = codec::project_decoder(codec_, world_->ref);
        batch_ = codec::SlowBatch(world_->D, codec_.d);
        recent_batch_ = codec::SlowBatch(world_->D, codec_.d);
        rapp_batch_ = codec::SlowBatch(world_->D, codec_.d);
        K_ = cfg_.schedule.K;
        c_ = cfg_.schedule.c_ratio;
        if (cfg_.shift.shift_slot >= 0 && cfg_.shift.shift_magnitude != 0.0) {
            shift_ = world_->shift_vector(cfg_.shift.shift_magnitude);
            // Probe and validation inputs follow the live input distribution.
            auto w = std::make_shared<TaskWorld>(*world_);
            const std::size_t D = static_cast<std::size_t>(w->D);
            for (std::size_t i = 0; i < w->val_x.size(); ++i) w->val_x[i] += shift_[i % D];
            for (std::size_t i = 0; i < w->probe_x.size(); ++i) w->probe_x[i] += shift_[i % D];
            shifted_ = std::move(w);
        }
        if (semantic_) registry_.emplace(codec_, codec::validation_tsr(codec_, *world_, validation_sd()), 0);
        if (cfg_.monitor.enabled) monitor_.emplace(cfg_.monitor);
        const double snr_lin = std::pow(10.0, cfg_.snr_db / 10.0);
        noise_floor_ = control::kPowerLevels.back() / snr_lin;
        z_.resize(codec_.d);
        zr_.resize(codec_.d);
        gain_.resize(codec_.d);
        noise_.resize(codec_.d);
        xs_.resize(world_->D);
        xh_.resize(world_->D);
        eh_.resize(world_->dE);
    }

    RunSummary run();

private:
    const double* input_of(const Task& task, long t);
    void arrivals(long t);
    void expire(Agent& ag, long t, std::vector<Resolved>& out);
    void decide(long t);
    void serve_semantic(Agent& ag, int i, long t, int grant, double sinr_db, std::vector<Resolved>& out,
                        double& energy);
    void serve_digital(Agent& ag, long t, int grant, double sinr_db, std::vector<Resolved>& out, double& energy);
    Resolved digital_outcome(const Task& task, long t);
    void slow_loop(long t);
    void monitor_check(long t);
    void rapp(long t);
    void restore_codec(codec::CodecParams p);
    std::vector<double> probe_embeddings(long t) const;
    // Validation runs at the nominal link SNR so promotion tracks in-network TSR.
    double validation_sd() const { return std::sqrt(phy::noise_variance(cfg_.snr_db)); }
    const TaskWorld& live(long t) const {
        return shifted_ && t >= cfg_.shift.shift_slot ? *shifted_ : *world_;
    }

    ScenarioConfig cfg_;
    std::shared_ptr<const TaskWorld> world_;
    Hooks hooks_;
    bool semantic_ = false;
    bool learner_ = false;
    control::ActionSpace space_;
    std::vector<Agent> agents_;
    control::PolicyParams policy_;
    control::UpdateConfig upd_;
    codec::CodecParams codec_;
    std::uint64_t version_counter_ = 1;
    codec::ProjectedDecoder pdec_;
    codec::SlowBatch batch_;
    codec::SlowBatch recent_batch_;
    codec::SlowBatch rapp_batch_;
    long since_slow_ = 0;
    int K_ = 1;
    double c_ = 1.0;
    std::vector<double> shift_;
    long val_due_ = -1;
    std::shared_ptr<const TaskWorld> shifted_;
    std::optional<oran::ModelRegistry> registry_;
    std::optional<monitors::Monitor> monitor_;
    double noise_floor_ = 0.0;
    long next_task_id_ = 0;
    std::vector<control::Step> pending_;
    std::deque<control::Step> step_pool_;
    std::deque<bool> tsr_tasks_;
    long tsr_hits_ = 0;
    std::deque<double> tsr_slots_;
    std::deque<std::pair<long, double>> grad_window_;
    std::optional<double> last_gradnorm_;
    Rng probe_rng_;
    RunSummary sum_;
    std::string pending_act_;
    int pending_mon_ = 0;

    std::vector<double> z_, zr_, gain_, noise_, xs_, xh_, eh_;
};

const double* Engine::input_of(const Task& task, long t) {
    const double* x = world_->x(task.idx);
    if (shift_.empty() || t < cfg_.shift.shift_slot) return x;
    for (int j = 0; j < world_->D; ++j) xs_[j] = x[j] + shift_[j];
    return xs_.data();
}

void Engine::arrivals(long t) {
    for (auto& ag : agents_) {
        const int n = ag.arrivals.binomial(cfg_.n_devices_per_agent, cfg_.arrival_prob);
        for (int j = 0; j < n; ++j) {
            Task task;
            task.id = next_task_id_++;
            task.idx = static_cast<std::uint32_t>(ag.picks.below(world_->bank_size()));
            task.arrival = t;
            ag.q.push_back(task);
        }
    }
}

void Engine::expire(Agent& ag, long t, std::vector<Resolved>& out) {
    const long deadline = cfg_.latency_budget_slots;
    while (!ag.q.empty() && t - ag.q.front().arrival >= deadline) {
        out.push_back({false, 2.0, deadline + cfg_.drop_penalty_slots});
        ag.q.pop_front();
    }
    // A partially sent digital payload does not survive a block boundary: the
    // attempt counts as failed and the next one restarts from the first bit.
    if (!semantic_ && !ag.q.empty() && t % cfg_.channel.block_length_slots == 0) {
        Task& head = ag.q.front();
        if (head.remaining >= 0.0) {
            head.remaining = -1.0;
            if (head.attempts >= cfg_.channel.max_attempts) {
                out.push_back({false, 2.0, deadline + cfg_.drop_penalty_slots});
                ag.q.pop_front();
            }
        }
    }
}

void Engine::decide(long t) {
    const int n = cfg_.n_agents;
    std::vector<std::array<double, 3>> intents(n);
    for (int i = 0; i < n; ++i) intents[i] = agents_[i].intent;
    const int fixed = cfg_.agent.fixed_power_level;
    std::vector<double> probs(space_.size());

    for (int i = 0; i < n; ++i) {
        Agent& ag = agents_[i];
        control::Observation obs;
        obs.sinr_bucket = control::sinr_bucket(ag.ch.realized_snr_db(t));
        obs.queue_len = static_cast<int>(ag.q.size());
        obs.last_distortion_bucket = control::distortion_bucket(ag.last_dsem);
        if (cfg_.agent.negotiation && n > 1) {
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                for (int c = 0; c < 3; ++c) obs.neighbor_intents[c] += intents[j][c] / (n - 1);
            }
        }
        const auto f = obs.features();
        ag.features.assign(f.begin(), f.end());

        if (!learner_) {
            ag.act = control::heuristic_policy(obs);
            if (fixed >= 0) ag.act.power_level = fixed;
            ag.action = -1;
        } else if (fixed < 0) {
            const auto sel = control::select_action(policy_.actor[i], space_.size(), ag.features.data(),
                                                    control::kNumFeatures, ag.policy, control::SelectMode::Sample,
                                                    cfg_.agent.explore_floor);
            ag.action = sel.action;
            ag.logprob = sel.logprob;
            ag.act = space_.decode(sel.action);
        } else {
            // Power pinned by the operating point: sample among the actions that use it.
            control::policy_probs(policy_.actor[i], space_.size(), ag.features.data(), control::kNumFeatures,
                                  probs.data());
            double mass = 0.0;
            for (int a = 0; a < space_.size(); ++a) {
                if (space_.decode(a).power_level != fixed) probs[a] = 0.0;
                mass += probs[a];
            }
            const double u = ag.policy.uniform() * mass;
            double acc = 0.0;
            int pick = -1;
            for (int a = 0; a < space_.size(); ++a) {
                if (probs[a] <= 0.0) continue;
                acc += probs[a];
                pick = a;
                if (u < acc) break;
            }
            ag.action = pick;
            ag.logprob = std::log(probs[pick] / mass);
            ag.act = space_.decode(pick);
        }
        ag.intent = control::broadcast_intent(ag.act);
    }
}

void Engine::serve_semantic(Agent& ag, int i, long t, int grant, double sinr_db, std::vector<Resolved>& out,
                            double& energy) {
    (void)i;
    const int d = codec_.d;
    const int tok = ag.act.token_dim();
    const int sent = std::min(tok, d);
    const double cap = grant * cfg_.channel.symbols_per_unit_slot();
    const double var = phy::noise_variance(sinr_db) * (tok > d ? static_cast<double>(d) / tok : 1.0);
    const double sd = std::sqrt(var);
    const double power = ag.act.power_w();
    double used = 0.0;
    int served = 0;
    while (!ag.q.empty() && used + tok <= cap) {
        const Task task = ag.q.front();
        ag.q.pop_front();
        const double* x = input_of(task, t);
        codec::encode_into(x, codec_, z_.data());
        for (int j = 0; j < d; ++j) {
            gain_[j] = j < sent ? 1.0 : 0.0;
            noise_[j] = j < sent ? sd * ag.ch.noise_rng().normal() : 0.0;
            zr_[j] = gain_[j] * z_[j] + noise_[j];
        }
        pdec_.apply(zr_.data(), eh_.data());
        const int pred = codec::nearest_class_embedded(eh_.data(), world_->ref);
        const auto dist = codec::distortion_from_embedded(world_->e(task.idx), eh_.data(), world_->dE);
        codec::decode_into(zr_.data(), codec_, xh_.data());
        batch_.push(x, gain_.data(), noise_.data(), zr_.data(), xh_.data());
        recent_batch_.push(x, gain_.data(), noise_.data(), zr_.data(), xh_.data());
        if (cfg_.oran.enabled) rapp_batch_.push(x, gain_.data(), noise_.data(), zr_.data(), xh_.data());
        used += tok;
        ++served;
        const bool ok = pred == world_->bank_label[task.idx];
        out.push_back({ok, dist.value, static_cast<double>(t - task.arrival) + used / cap});
        ag.last_task_id = task.id;
        std::vector<double> dists(world_->C);
        for (int c = 0; c < world_->C; ++c) {
            double s = 0.0;
            const double* m = world_->ref.class_mean(c);
            for (int j = 0; j < world_->dE; ++j) s += (eh_[j] - m[j]) * (eh_[j] - m[j]);
            dists[c] = std::sqrt(s);
        }
        ag.last_conf = codec::confidence_from_distances(dists);
    }
    if (recent_batch_.size() > 2048) recent_batch_.keep_last(1024);
    energy += phy::energy_of(power, used / cap, 0.0, cfg_.channel);
    if (served > 0) {
        const double ops = cfg_.codec.encoder_on_device ? 2.0 : 1.0;
        energy += ops * cfg_.channel.joules_per_op;
    }
    ag.served_last = served;
}

Resolved Engine::digital_outcome(const Task& task, long t) {
    if (shift_.empty() || t < cfg_.shift.shift_slot)
        return {world_->bank_digital_success[task.idx] != 0, world_->bank_digital_dsem[task.idx], 0.0};
    const double* x = input_of(task, t);
    phy::quantize_dequantize(x, world_->D, cfg_.channel.bits_per_dim, cfg_.channel.quant_range, xh_.data());
    world_->ref.embed(xh_.data(), eh_.data());
    const int pred = codec::nearest_class_embedded(eh_.data(), world_->ref);
    const auto dist = codec::distortion_from_embedded(world_->e(task.idx), eh_.data(), world_->dE);
    return {pred == world_->bank_label[task.idx], dist.value, 0.0};
}

void Engine::serve_digital(Agent& ag, long t, int grant, double sinr_db, std::vector<Resolved>& out,
                           double& energy) {
    const double cap = phy::bits_per_slot(grant, sinr_db, cfg_.channel);
    const double payload = phy::payload_bits(world_->D, cfg_.channel.bits_per_dim);
    double used = 0.0;
    int served = 0;
    while (!ag.q.empty() && used < cap) {
        Task& head = ag.q.front();
        if (head.remaining < 0.0) {
            head.remaining = payload;
            ++head.attempts;
        }
        const double take = std::min(head.remaining, cap - used);
        head.remaining -= take;
        used += take;
        if (head.remaining > 0.0) break;
        Resolved r = digital_outcome(head, t);
        r.latency = static_cast<double>(t - head.arrival) + used / cap;
        out.push_back(r);
        ag.last_task_id = head.id;
        ag.last_conf = 1.0;
        ag.q.pop_front();
        ++served;
    }
    energy += phy::energy_of(ag.act.power_w(), cap > 0.0 ? used / cap : 0.0, 0.0, cfg_.channel);
    ag.served_last = served;
}

std::vector<double> Engine::probe_embeddings(long t) const {
    const TaskWorld& w = live(t);
    const std::size_t P = w.probe_size();
    std::vector<double> out(P * codec_.d);
    for (std::size_t i = 0; i < P; ++i)
        codec::encode_into(w.probe_x.data() + i * w.D, codec_, out.data() + i * codec_.d);
    return out;
}

void Engine::restore_codec(codec::CodecParams p) {
    codec_ = std::move(p);
    pdec_ = codec::project_decoder(codec_, world_->ref);
    batch_.clear();
    since_slow_ = 0;
}

void Engine::slow_loop(long t) {
    if (!semantic_ || !learns_codec(cfg_.paradigm)) return;
    if (++since_slow_ < K_) return;
    since_slow_ = 0;
    if (batch_.size() > static_cast<std::size_t>(cfg_.codec.slow_batch_cap))
        batch_.keep_last(static_cast<std::size_t>(cfg_.codec.slow_batch_cap));
    const auto steps = step_sizes(cfg_.schedule, t);
    const double gamma = c_ * steps.eta * cfg_.codec.lr_gain;
    auto tr = codec::slow_train_step(codec_, batch_, gamma, world_->ref);
    batch_.clear();
    if (!tr.accepted) {
        ++sum_.slow_rejected;
        sum_.events.push_back({t, "slow_reject", tr.reason});
        return;
    }
    ++sum_.slow_updates;
    sum_.codec_loss.emplace_back(t, tr.loss);
    tr.params.parent_version = codec_.version;
    tr.params.version = ++version_counter_;
    codec_ = std::move(tr.params);
    pdec_ = codec::project_decoder(codec_, world_->ref);
}

void Engine::monitor_check(long t) {
    if (!monitor_) return;
    auto res = monitor_->check(t, probe_embeddings(t), codec_.d, policy_.actor_flat());
    pending_mon_ = (res.drift_breach ? 1 : 0) | (res.ns_breach ? 2 : 0) | (res.osc_breach ? 4 : 0);
    switch (res.action) {
        case monitors::Action::None: break;
        case monitors::Action::ThrottleK:
            K_ = static_cast<int>(std::min<long>(2L * K_, cfg_.horizon_slots));
            sum_.events.push_back({t, "throttle_k", "K=" + std::to_string(K_) + " cause=" + res.cause});
            pending_act_ = "throttle_k";
            break;
        case monitors::Action::ReduceC:
            c_ *= 0.5;
            sum_.events.push_back({t, "reduce_c", "c=" + std::to_string(c_) + " cause=" + res.cause});
            pending_act_ = "reduce_c";
            break;
        case monitors::Action::Rollback: {
            if (registry_) {
                // Unvalidated local updates fall back to the Active version; if the
                // working copy already is the Active one, step back one promotion.
                const auto active = registry_->active().version;
                const auto target =
                    codec_.version != active ? active : registry_->previous_active().value_or(active);
                registry_->rollback(target, t);
                restore_codec(registry_->params_of(target));
                sum_.events.push_back({t, "rollback", "to=" + std::to_string(target) + " cause=" + res.cause});
            } else {
                sum_.events.push_back({t, "rollback", "no registry cause=" + res.cause});
            }
            monitor_->reset_after_rollback(t + 1);
            pending_act_ = "rollback";
            val_due_ = t + K_ - 1;  // last slot before the next slow update
            break;
        }
    }
    sum_.checks.push_back(std::move(res));
}

void Engine::rapp(long t) {
    if (!registry_ || !cfg_.oran.enabled || !semantic_) return;
    const auto steps = step_sizes(cfg_.schedule, t);
    const double gamma = c_ * steps.eta * cfg_.codec.lr_gain;
    auto res = oran::rapp_cycle(*registry_, &codec_, rapp_batch_, cfg_.oran.rapp_steps, gamma, &live(t),
                                cfg_.oran.sla_margin, t, control::weights_of(cfg_), validation_sd());
    rapp_batch_.clear();
    if (res.unchanged) return;
    sum_.events.push_back({t, res.accepted ? "rapp_accept" : "rapp_reject",
                           "candidate=" + std::to_string(res.candidate_version) +
                               " tsr=" + std::to_string(res.candidate_tsr) +
                               " active_tsr=" + std::to_string(res.active_tsr)});
    if (pending_act_.empty()) pending_act_ = res.accepted ? "rapp_accept" : "rapp_reject";
    version_counter_ = std::max(version_counter_, registry_->max_version());
    if (res.adopted.version != codec_.version || !codec::same_values(res.adopted, codec_)) {
        // A1 policy takes effect at the next slot boundary, which is where this runs.
        codec_ = std::move(res.adopted);
        pdec_ = codec::project_decoder(codec_, world_->ref);
    }
}

RunSummary Engine::run() {
    const int n = cfg_.n_agents;
    const int period = cfg_.control_period();
    const auto w = control::weights_of(cfg_);
    std::vector<std::vector<Resolved>> resolved(n);
    std::vector<int> requests(n);
    std::vector<double> energy(n);
    std::vector<double> slot_rewards;
    sum_.final_K = K_;

    long t = 0;
    for (; t < cfg_.horizon_slots; ++t) {
        for (auto& ag : agents_) ag.ch.set_slot(t);
        arrivals(t);
        for (int i = 0; i < n; ++i) {
            resolved[i].clear();
            energy[i] = 0.0;
            expire(agents_[i], t, resolved[i]);
        }
        if (t % period == 0) decide(t);

        for (int i = 0; i < n; ++i) requests[i] = agents_[i].act.bw_request;
        const auto alloc = control::allocate_bandwidth(requests, cfg_.bandwidth_units);
        if (std::accumulate(requests.begin(), requests.end(), 0) > cfg_.bandwidth_units) ++sum_.bw_overflow_slots;
        double total_power = 0.0;
        for (const auto& ag : agents_) total_power += ag.act.power_w();

        kpi::TraceRow row;
        row.t = t;
        row.agents.resize(n);
        row.w = {w.alpha, w.beta, w.lambda_e, w.lambda_l};
        row.cv = codec_.version;
        for (int i = 0; i < n; ++i) {
            Agent& ag = agents_[i];
            const int grant = alloc.grants[i];
            row.bw_alloc += grant;
            if (grant <= 0) continue;
            const double own = ag.act.power_w();
            const double sinr = control::effective_sinr(own, 1, total_power - own, noise_floor_,
                                                        cfg_.channel.interference_coupling) +
                                ag.ch.fade_db(ag.ch.block_of(t));
            if (semantic_)
                serve_semantic(ag, i, t, grant, sinr, resolved[i], energy[i]);
            else
                serve_digital(ag, t, grant, sinr, resolved[i], energy[i]);
        }
        if (cfg_.agent.negotiation && n > 1)
            for (int i = 0; i < n; ++i)
                energy[i] += phy::energy_of(agents_[i].act.power_w(),
                                            control::kIntentSymbols / cfg_.channel.symbols_per_unit_slot(), 0.0,
                                            cfg_.channel);

        // Rewards: per-task terms averaged over the tasks each agent resolved, with
        // the slot's energy shared equally among them.
        slot_rewards.clear();
        double rsum = 0.0;
        int rcount = 0;
        double dsum = 0.0;
        for (int i = 0; i < n; ++i) {
            Agent& ag = agents_[i];
            auto& a = row.agents[i];
            a.a = ag.action;
            a.bw = alloc.grants[i];
            const auto& res = resolved[i];
            a.n = static_cast<int>(res.size());
            row.e += energy[i];
            if (res.empty()) {
                if (energy[i] > 0.0) {
                    a.pe = energy[i] / cfg_.energy_ref_j;
                    a.r = control::compose_reward(0.0, 0.0, a.pe, 0.0, w).r;
                }
            } else {
                phy::TransmissionReport rep;
                rep.energy_joules = energy[i] / static_cast<double>(res.size());
                double ds = 0.0;
                for (const auto& r : res) {
                    rep.latency_slots = r.latency;
                    const auto rr = control::assemble_reward(r.success, r.dsem, rep, cfg_);
                    a.r += rr.r;
                    a.u += rr.task_utility;
                    a.dist += rr.distortion_term;
                    a.pe += rr.energy_penalty;
                    a.pl += rr.latency_penalty;
                    a.s += r.success ? 1 : 0;
                    ds += r.dsem;
                    row.lat += r.latency;
                    ++row.lh[kpi::latency_bin(r.latency)];
                    ag.tsr100.push(r.success);
                    tsr_tasks_.push_back(r.success);
                    tsr_hits_ += r.success ? 1 : 0;
                    if (tsr_tasks_.size() > static_cast<std::size_t>(cfg_.engine.tsr_window_tasks)) {
                        tsr_hits_ -= tsr_tasks_.front() ? 1 : 0;
                        tsr_tasks_.pop_front();
                    }
                }
                const double inv = 1.0 / static_cast<double>(res.size());
                a.r *= inv;
                a.u *= inv;
                a.dist *= inv;
                a.pe *= inv;
                a.pl *= inv;
                ag.last_dsem = ds * inv;
                dsum += ds;
            }
            row.n += a.n;
            row.s += a.s;
            if (a.n > 0 || energy[i] > 0.0) {
                rsum += a.r;
                ++rcount;
                slot_rewards.push_back(a.r);
            }
            ag.period_reward += a.r;
            ++ag.period_slots;
        }
        row.J = kpi::j_of(row.agents, row.w);
        row.dsem = row.n > 0 ? dsum / row.n : 0.0;
        row.rm = rcount > 0 ? rsum / rcount : 0.0;
        row.tsr = tsr_tasks_.empty() ? 0.0 : static_cast<double>(tsr_hits_) / static_cast<double>(tsr_tasks_.size());

        // Fast loop: one step per agent per decision period.
        if (learner_ && (t + 1) % period == 0) {
            std::vector<double> mean_f(control::kNumFeatures, 0.0);
            for (const auto& ag : agents_) k::axpy(1.0 / n, ag.features.data(), mean_f.data(), mean_f.size());
            pending_.clear();
            for (int i = 0; i < n; ++i) {
                Agent& ag = agents_[i];
                control::Step s;
                s.agent = i;
                s.features = ag.features;
                s.action = ag.action;
                s.logprob = ag.logprob;
                s.reward = ag.period_slots > 0 ? ag.period_reward / ag.period_slots : 0.0;
                s.summary = policy_.shared_critic ? mean_f : ag.features;
                ag.period_reward = 0.0;
                ag.period_slots = 0;
                pending_.push_back(s);
                step_pool_.push_back(std::move(s));
            }
            while (step_pool_.size() > 1024) step_pool_.pop_front();
            const auto steps = step_sizes(cfg_.schedule, t);
            auto ur = control::fast_update(policy_, pending_, steps.eta, upd_);
            if (ur.accepted)
                policy_ = std::move(ur.params);
            else {
                ++sum_.fast_rejected;
                sum_.events.push_back({t, "fast_reject", ur.reason});
            }
        }

        slow_loop(t);

        if (monitor_) monitor_->record_rewards(t, slot_rewards);
        if ((t + 1) % cfg_.p1_period == 0) {
            if (cfg_.oran.enabled) {
                for (int i = 0; i < n; ++i) {
                    Agent& ag = agents_[i];
                    oran::RadioKpis radio;
                    radio.sinr_db = ag.ch.realized_snr_db(t);
                    radio.queue_len = static_cast<int>(ag.q.size());
                    radio.throughput_proxy = ag.served_last;
                    radio.delivered_rate = row.agents[i].n > 0
                                               ? static_cast<double>(row.agents[i].s) / row.agents[i].n
                                               : 0.0;
                    auto rec = oran::package_telemetry(i, t, ag.last_task_id, semantic_ ? ag.act.token_dim() : 0,
                                                       ag.last_conf, ag.tsr100, radio);
                    if (hooks_.xapp) hooks_.xapp(rec);
                    sum_.telemetry.push_back(rec);
                }
            }
            monitor_check(t);
        }
        if ((t + 1) % cfg_.p2_period == 0) rapp(t);
        if (semantic_ && (t == val_due_ || (cfg_.shift.shift_slot > 0 && t + 1 == cfg_.shift.shift_slot)))
            sum_.val_probes.emplace_back(t, codec::validation_tsr(codec_, live(t), validation_sd()));

        if (learner_ && cfg_.engine.grad_probe_every > 0 && (t + 1) % cfg_.engine.grad_probe_every == 0) {
            std::vector<control::Step> pool(step_pool_.begin(), step_pool_.end());
            const bool slow = semantic_ && learns_codec(cfg_.paradigm);
            last_gradnorm_ = estimate_gradnorm(policy_, pool, slow ? &codec_ : nullptr, recent_batch_, world_->ref,
                                               cfg_.engine.grad_probe_m, upd_, probe_rng_);
            row.gradnorm = last_gradnorm_;
            grad_window_.emplace_back(t, *last_gradnorm_);
        }
        while (!grad_window_.empty() && grad_window_.front().first <= t - cfg_.engine.stop_window)
            grad_window_.pop_front();
        tsr_slots_.push_back(row.tsr);
        while (tsr_slots_.size() > static_cast<std::size_t>(cfg_.engine.stop_window)) tsr_slots_.pop_front();

        row.mon = pending_mon_;
        row.act = pending_act_;
        pending_mon_ = 0;
        pending_act_.clear();
        if (hooks_.on_row) hooks_.on_row(row);
        if (cfg_.engine.trace_every <= 1 || t % cfg_.engine.trace_every == 0) sum_.trace.push_back(std::move(row));

        if (!sum_.stop_slot && learner_) {
            std::deque<double> gw;
            for (const auto& g : grad_window_) gw.push_back(g.second);
            if (stopping_check(tsr_slots_, gw, static_cast<std::size_t>(cfg_.engine.stop_window),
                               cfg_.engine.grad_tol)) {
                sum_.stop_slot = t;
                if (cfg_.engine.early_stop) {
                    sum_.stopped_early = true;
                    ++t;
                    break;
                }
            }
        }
    }
    sum_.slots_run = t;
    sum_.final_tsr = tsr_tasks_.empty() ? 0.0 : static_cast<double>(tsr_hits_) / tsr_tasks_.size();
    sum_.final_gradnorm = last_gradnorm_.value_or(0.0);
    if (monitor_) sum_.triggers = monitor_->trigger_log();
    if (registry_) sum_.registry_audit = registry_->audit_jsonl();
    sum_.final_K = K_;
    sum_.final_c = c_;
    sum_.final_codec = codec_;
    sum_.final_policy = policy_;
    return std::move(sum_);
}

}  // namespace

RunSummary run(const ScenarioConfig& cfg, std::shared_ptr<const TaskWorld> world, const Hooks& hooks) {
    validate(cfg);
    if (!world) world = codec::build_world(cfg.codec, cfg.channel, cfg.seed);
    Engine e(cfg, std::move(world), hooks);
    return e.run();
}

bool stopping_check(const std::deque<double>& tsr_window, const std::deque<double>& grad_window, std::size_t W,
                    double grad_tol) {
    if (W == 0 || tsr_window.size() < W || grad_window.empty()) return false;
    const auto [lo, hi] = std::minmax_element(tsr_window.end() - static_cast<long>(W), tsr_window.end());
    if (*hi - *lo > 0.01) return false;
    double mean = 0.0;
    for (double g : grad_window) mean += g;
    mean /= static_cast<double>(grad_window.size());
    return mean <= grad_tol;
}

double estimate_gradnorm(const control::PolicyParams& p, const std::vector<control::Step>& pool,
                         const codec::CodecParams* codec, const codec::SlowBatch& pool_batch,
                         const codec::ReferenceEmbedder& ref, int m, const control::UpdateConfig& u, Rng& rng) {
    double total = 0.0;
    if (!pool.empty() && m > 0) {
        std::vector<control::Step> sample;
        sample.reserve(m);
        for (int j = 0; j < m; ++j) sample.push_back(pool[rng.below(pool.size())]);
        // One-step advantages: each sampled step stands alone.
        control::UpdateConfig one = u;
        one.discount = 0.0;
        const auto adv = control::advantages_of(p, sample, 0.0);
        const auto g = control::actor_gradient(p, p, sample, adv, one);
        total += k::dot(g.data(), g.data(), g.size());
    }
    if (codec && !pool_batch.empty() && m > 0) {
        codec::SlowBatch b(pool_batch.D, pool_batch.d);
        const int D = pool_batch.D, d = pool_batch.d;
        for (int j = 0; j < m; ++j) {
            const std::size_t i = rng.below(pool_batch.size());
            b.push(pool_batch.x.data() + i * D, pool_batch.gain.data() + i * d, pool_batch.noise.data() + i * d,
                   pool_batch.z_received.data() + i * d, pool_batch.x_hat.data() + i * D);
        }
        const auto lg = codec::surrogate_loss_grad(*codec, b, ref);
        total += k::dot(lg.grad.data(), lg.grad.data(), lg.grad.size());
    }
    return total;
}

}  // namespace semran::engine
