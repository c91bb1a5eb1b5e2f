#pragma once

#include <deque>
#include <string>
#include <vector>

#include "semran/sim/config.hpp"

namespace semran::monitors {

struct Value {
    double value = 0.0;
    bool available = false;
};

// Mean over probe rows of 1 - cos(z_now_i, z_then_i); rows of dimension d.
Value drift(const std::vector<double>& z_now, const std::vector<double>& z_then, int d);

// Laplace-smoothed histogram over [lo, hi) with `bins` equal bins (values clipped into range).
std::vector<double> smoothed_histogram(const std::vector<double>& samples, int bins, double alpha, double lo = -5.0,
                                       double hi = 5.0);
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);

// KL(recent || older) of the reward distributions; unavailable below 30 samples per window.
Value ns(const std::vector<double>& recent, const std::vector<double>& older, int bins, double alpha);

// ||current - snapshot|| / ||snapshot||; unavailable when the snapshot is all zeros.
Value osc(const std::vector<double>& current, const std::vector<double>& snapshot);

enum class Action { None, ThrottleK, ReduceC, Rollback };
std::string to_string(Action a);

struct Values {
    Value drift;
    Value ns;
    Value osc;
};

struct TriggerEntry {
    long t = 0;
    std::string metric;
    double value = 0.0;
    Action action = Action::None;
};

struct CheckResult {
    long t = 0;
    Values values;
    bool drift_breach = false;
    bool ns_breach = false;
    bool osc_breach = false;
    Action action = Action::None;
    std::string cause;
};

// Online monitor evaluated at P1 cadence. Holds probe-embedding and policy
// snapshots for the last 2*delta slots plus per-agent reward samples.
class Monitor {
public:
    explicit Monitor(const MonitorConfig& cfg);

    void record_rewards(long t, const std::vector<double>& rewards);
    // Evaluates the three proxies at slot t and decides (at most) one action.
    CheckResult check(long t, const std::vector<double>& probe_embeddings, int d, const std::vector<double>& policy_flat);
    // Called by the engine after a rollback: histories restart from the restored state.
    void reset_after_rollback(long t);

    const std::vector<TriggerEntry>& trigger_log() const { return log_; }
    const Values& last_values() const { return last_; }
    const MonitorConfig& config() const { return cfg_; }

private:
    struct Snapshot {
        long t;
        std::vector<double> probe;
        std::vector<double> policy;
    };
    const Snapshot* snapshot_at(long t) const;

    MonitorConfig cfg_;
    std::deque<Snapshot> snaps_;
    std::deque<std::pair<long, double>> rewards_;
    Values last_;
    int drift_streak_ = 0;
    int osc_streak_ = 0;
    long last_throttle_ = -1000000000;
    long last_reduce_ = -1000000000;
    long history_start_ = 0;
    std::vector<TriggerEntry> log_;
};

}  // namespace semran::monitors
