#pragma once

#include <cstdint>
#include <string_view>

namespace semran {

// Counter-based generator: value k of stream (seed, stream_id) is
// splitmix64_finalize(key + (k + 1) * golden), key derived from both ids.
// Integer and uniform outputs are identical on every platform; normal()
// additionally goes through std::log/std::sqrt (Marsaglia polar method).
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64();
    double uniform();                       // [0, 1), 53-bit resolution
    double uniform(double lo, double hi);
    double normal();                        // N(0, 1)
    double normal(double mean, double sd);
    std::uint64_t below(std::uint64_t n);   // unbiased in [0, n)
    bool bernoulli(double p);
    int binomial(int n, double p);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64_finalize(std::uint64_t z);

// FNV-1a of a name mixed with an index; used to name per-module streams.
std::uint64_t stream_id(std::string_view name, std::uint64_t index = 0);

}  // namespace semran
