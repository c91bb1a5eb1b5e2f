#include "semran/oran/registry.hpp"

#include <algorithm>

#include "json.hpp"
#include "semran/codec/checkpoint.hpp"
#include "semran/sim/errors.hpp"

namespace semran::oran {

std::string to_string(EntryStatus s) {
    switch (s) {
        case EntryStatus::Candidate: return "candidate";
        case EntryStatus::Active: return "active";
        case EntryStatus::RolledBack: return "rolled_back";
    }
    return "?";
}

ModelRegistry::ModelRegistry(const codec::CodecParams& initial, double validation_tsr, long slot) {
    RegistryEntry e;
    e.version = initial.version;
    e.codec_bytes = codec::serialize(initial);
    e.hash = codec::hash_bytes(e.codec_bytes);
    e.validation_tsr = validation_tsr;
    e.validation_available = true;
    e.status = EntryStatus::Active;
    e.created_slot = slot;
    entries_.push_back(std::move(e));
    active_history_.push_back(initial.version);
    log(slot, "register_active", entries_.back());
}

RegistryEntry* ModelRegistry::find_mut(std::uint64_t version) {
    for (auto& e : entries_)
        if (e.version == version) return &e;
    return nullptr;
}

const RegistryEntry* ModelRegistry::find(std::uint64_t version) const {
    for (const auto& e : entries_)
        if (e.version == version) return &e;
    return nullptr;
}

const RegistryEntry& ModelRegistry::active() const {
    for (const auto& e : entries_)
        if (e.status == EntryStatus::Active) return e;
    throw std::logic_error("registry has no active entry");
}

codec::CodecParams ModelRegistry::active_params() const { return codec::deserialize(active().codec_bytes); }

codec::CodecParams ModelRegistry::params_of(std::uint64_t version) const {
    const RegistryEntry* e = find(version);
    if (!e) throw UnknownVersion("codec version " + std::to_string(version) + " not in registry");
    return codec::deserialize(e->codec_bytes);
}

std::uint64_t ModelRegistry::max_version() const {
    std::uint64_t v = 0;
    for (const auto& e : entries_) v = std::max(v, e.version);
    return v;
}

std::size_t ModelRegistry::count_active() const {
    return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(),
                                                  [](const RegistryEntry& e) { return e.status == EntryStatus::Active; }));
}

void ModelRegistry::log(long slot, const std::string& event, const RegistryEntry& e) {
    audit_.push_back({slot, event, e.version, e.hash});
}

const RegistryEntry& ModelRegistry::add_candidate(const codec::CodecParams& p, double validation_tsr, bool available,
                                                  long slot) {
    if (p.version <= max_version())
        throw ValidationError("candidate version " + std::to_string(p.version) + " is not newer than the registry");
    RegistryEntry e;
    e.version = p.version;
    e.codec_bytes = codec::serialize(p);
    e.hash = codec::hash_bytes(e.codec_bytes);
    e.validation_tsr = validation_tsr;
    e.validation_available = available;
    e.status = EntryStatus::Candidate;
    e.created_slot = slot;
    entries_.push_back(std::move(e));
    log(slot, "candidate", entries_.back());
    return entries_.back();
}

void ModelRegistry::promote(std::uint64_t version, long slot) {
    RegistryEntry* target = find_mut(version);
    if (!target) throw UnknownVersion("codec version " + std::to_string(version) + " not in registry");
    if (target->status == EntryStatus::Active) {
        log(slot, "promote_noop", *target);
        return;
    }
    for (auto& e : entries_)
        if (e.status == EntryStatus::Active) e.status = EntryStatus::Candidate;
    target->status = EntryStatus::Active;
    active_history_.push_back(version);
    log(slot, "promote", *target);
}

void ModelRegistry::reject(std::uint64_t version, long slot) {
    const RegistryEntry* e = find(version);
    if (!e) throw UnknownVersion("codec version " + std::to_string(version) + " not in registry");
    log(slot, "reject", *e);
}

const RegistryEntry& ModelRegistry::rollback(std::uint64_t to_version, long slot) {
    RegistryEntry* target = find_mut(to_version);
    if (!target) throw UnknownVersion("codec version " + std::to_string(to_version) + " not in registry");
    if (target->status == EntryStatus::Active) {
        log(slot, "rollback_noop", *target);
        return *target;
    }
    for (auto& e : entries_)
        if (e.status == EntryStatus::Active) e.status = EntryStatus::RolledBack;
    target->status = EntryStatus::Active;
    active_history_.push_back(to_version);
    log(slot, "rollback", *target);
    return *target;
}

std::optional<std::uint64_t> ModelRegistry::previous_active() const {
    const std::uint64_t cur = active().version;
    for (auto it = active_history_.rbegin(); it != active_history_.rend(); ++it)
        if (*it != cur) return *it;
    return std::nullopt;
}

std::string ModelRegistry::audit_jsonl() const {
    std::string out;
    for (const auto& a : audit_) {
        nlohmann::json j{{"slot", a.slot}, {"event", a.event}, {"version", a.version}, {"hash", a.hash}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

RappResult rapp_cycle(ModelRegistry& reg, const codec::CodecParams* working, const codec::SlowBatch& buffer,
                      int steps, double gamma, const codec::TaskWorld* world, double margin, long slot,
                      const control::RewardWeights& weights, double noise_sd) {
    if (!world || world->validation_size() == 0) throw ValidationSetMissing("rApp cycle needs a validation set");
    RappResult res;
    codec::CodecParams cand = working ? *working : reg.active_params();
    for (int s = 0; s < steps && !buffer.empty(); ++s) {
        auto tr = codec::slow_train_step(cand, buffer, gamma, world->ref);
        if (tr.accepted) cand = std::move(tr.params);
    }
    const RegistryEntry& act = reg.active();
    res.active_tsr = act.validation_tsr;
    res.policy.reward_weights = weights;
    res.policy.issued_slot = slot;
    res.policy.effective_from_slot = slot + 1;

    if (cand.version <= reg.max_version()) {
        // Nothing new since the last cycle (or the near-RT copy is a stored version).
        res.unchanged = true;
        res.adopted = reg.active_params();
        res.policy.target_codec_version = res.adopted.version;
        res.candidate_version = cand.version;
        res.candidate_tsr = act.validation_tsr;
        return res;
    }
    res.candidate_tsr = codec::validation_tsr(cand, *world, noise_sd);
    res.candidate_version = cand.version;
    // The active model is re-scored on the same set, which may have moved since it was stored.
    res.active_tsr = codec::validation_tsr(reg.active_params(), *world, noise_sd);
    reg.add_candidate(cand, res.candidate_tsr, true, slot);
    if (res.candidate_tsr >= res.active_tsr - margin) {
        reg.promote(cand.version, slot);
        res.accepted = true;
        res.adopted = std::move(cand);
    } else {
        reg.reject(cand.version, slot);
        res.adopted = reg.active_params();
    }
    res.policy.target_codec_version = res.adopted.version;
    return res;
}

}  // namespace semran::oran
