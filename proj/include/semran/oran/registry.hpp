#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semran/codec/codec.hpp"
#include "semran/codec/task_source.hpp"
#include "semran/control/agent.hpp"

namespace semran::oran {

enum class EntryStatus { Candidate, Active, RolledBack };
std::string to_string(EntryStatus s);

struct RegistryEntry {
    std::uint64_t version = 0;
    std::vector<std::uint8_t> codec_bytes;
    std::uint64_t hash = 0;
    double validation_tsr = 0.0;
    bool validation_available = false;
    EntryStatus status = EntryStatus::Candidate;
    long created_slot = 0;
};

struct AuditEvent {
    long slot = 0;
    std::string event;
    std::uint64_t version = 0;
    std::uint64_t hash = 0;
};

struct A1Policy {
    std::uint64_t target_codec_version = 0;
    control::RewardWeights reward_weights;
    long issued_slot = 0;
    long effective_from_slot = 0;
    bool in_effect(long slot) const { return slot >= effective_from_slot; }
};

// Versioned codec store owned by the non-RT side. Exactly one entry is Active.
// A superseded Active (replaced by promotion, not by rollback) goes back to
// Candidate status so it stays eligible as a rollback target.
class ModelRegistry {
public:
    ModelRegistry(const codec::CodecParams& initial, double validation_tsr, long slot);

    const RegistryEntry& active() const;
    codec::CodecParams active_params() const;
    const RegistryEntry* find(std::uint64_t version) const;
    codec::CodecParams params_of(std::uint64_t version) const;

    // Stores a candidate; throws ValidationError when the version is not newer than every stored version.
    const RegistryEntry& add_candidate(const codec::CodecParams& p, double validation_tsr, bool available, long slot);
    void promote(std::uint64_t version, long slot);
    void reject(std::uint64_t version, long slot);
    // Target becomes Active, the previous Active becomes RolledBack. Same version: logged no-op.
    const RegistryEntry& rollback(std::uint64_t to_version, long slot);

    // The Active version before the current one, if any.
    std::optional<std::uint64_t> previous_active() const;

    const std::vector<RegistryEntry>& entries() const { return entries_; }
    const std::vector<AuditEvent>& audit_log() const { return audit_; }
    std::size_t count_active() const;
    std::string audit_jsonl() const;
    std::uint64_t max_version() const;

private:
    RegistryEntry* find_mut(std::uint64_t version);
    void log(long slot, const std::string& event, const RegistryEntry& e);

    std::vector<RegistryEntry> entries_;
    std::vector<std::uint64_t> active_history_;
    std::vector<AuditEvent> audit_;
};

struct RappResult {
    bool accepted = false;
    bool unchanged = false;  // candidate identical to Active, nothing registered
    std::uint64_t candidate_version = 0;
    double candidate_tsr = 0.0;
    double active_tsr = 0.0;
    A1Policy policy;
    codec::CodecParams adopted;  // what the near-RT side runs from policy.effective_from_slot
};

// Non-RT retrain/validate/version cycle. Starts from `working` (the near-RT
// copy; the Active entry when null), runs `steps` slow steps on `buffer`,
// scores candidate and Active on the world's held-out set (with noise_sd > 0,
// under one fixed noise draw) and promotes the candidate when its
// TSR >= Active TSR - margin.
RappResult rapp_cycle(ModelRegistry& reg, const codec::CodecParams* working, const codec::SlowBatch& buffer,
                      int steps, double gamma, const codec::TaskWorld* world, double margin, long slot,
                      const control::RewardWeights& weights, double noise_sd = 0.0);

}  // namespace semran::oran
