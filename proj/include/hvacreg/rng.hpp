#pragma once

#include <cstdint>
#include <random>

namespace hvacreg {

// Deterministic random source. std::mt19937_64 is bit-exact across
// platforms, but the standard distributions are not, so the mappings
// from raw bits to uniform/normal variates are done here by hand.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; one spare value is cached.
    double gaussian();

    double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// splitmix64 step; used to derive independent stream seeds from a base
// seed so that sub-streams (per draw, per cell, per purpose) never share
// state.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

} // namespace hvacreg
