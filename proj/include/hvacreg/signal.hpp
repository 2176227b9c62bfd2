#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace hvacreg::signal {

// Normalized frequency-regulation command series, one sample per
// sample_period_s seconds, every sample in [-1, 1].
struct RegulationSignal {
    std::vector<double> w;
    double sample_period_s = 4.0;
    std::int64_t start_epoch_s = 0;

    void validate() const; // throws std::invalid_argument on out-of-range samples
};

// Per-window energy contents: |time-average of w| over each complete
// window. The absolute mean (not the mean absolute value) is used
// because the scheduler's robust state constraints depend on the net
// thermal energy moved within a slot; incomplete trailing windows are
// dropped.
struct EnergyContentStats {
    std::vector<double> contents;        // one value per window, in [0, 1]
    std::vector<double> sorted_contents; // ascending; the empirical CDF support
    double median = 0.0;
    double p95 = 0.0;
    double p975 = 0.0;
    double p99 = 0.0;
    double max = 0.0;

    nlohmann::json to_json() const; // includes the full CDF arrays
};

RegulationSignal load_signal_csv(const std::string& path);
void save_signal_csv(const std::string& path, const RegulationSignal& s);

EnergyContentStats energy_content(const RegulationSignal& s, double window_s = 900.0);

// p-th percentile (nearest-rank, p in (0, 100]) of the window contents.
double wlim_from_percentile(const EnergyContentStats& stats, double p);

// Band-limited noise in [-1, 1]: a deterministic sum of random-phase
// sinusoids on the DFT grid restricted to [f_lo, f_hi], rescaled to unit
// peak. Same seed, same signal.
RegulationSignal generate_synthetic(std::uint64_t seed, double duration_s, double f_lo,
                                    double f_hi, double sample_period_s = 4.0);

} // namespace hvacreg::signal
