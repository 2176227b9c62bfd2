#include "hvacreg/signal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hvacreg/csv.hpp"
#include "hvacreg/rng.hpp"
#include "hvacreg/timeutil.hpp"

namespace hvacreg::signal {

void RegulationSignal::validate() const {
    if (!(sample_period_s > 0.0))
        throw std::invalid_argument("regulation signal: sample period must be > 0");
    for (std::size_t i = 0; i < w.size(); ++i)
        if (!(w[i] >= -1.0 && w[i] <= 1.0))
            throw std::invalid_argument("regulation signal: sample " + std::to_string(i) +
                                        " out of [-1, 1]: " + std::to_string(w[i]));
}

RegulationSignal load_signal_csv(const std::string& path) {
    auto table = csv::read_file(path);
    std::size_t c_t = table.column("timestamp");
    std::size_t c_w = table.column("w");

    RegulationSignal s;
    s.w.reserve(table.rows.size());
    std::int64_t prev_t = 0;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        std::int64_t t;
        double w;
        try {
            t = parse_iso8601_utc(row.at(c_t));
            w = std::stod(row.at(c_w));
        } catch (const std::exception&) {
            throw std::runtime_error("signal csv: malformed row " + std::to_string(i + 2));
        }
        if (!(w >= -1.0 && w <= 1.0))
            throw std::runtime_error("signal csv: row " + std::to_string(i + 2) +
                                     ": w out of [-1, 1]: " + row.at(c_w));
        if (i == 0) {
            s.start_epoch_s = t;
        } else {
            if (t <= prev_t)
                throw std::runtime_error("signal csv: row " + std::to_string(i + 2) +
                                         ": timestamps not increasing");
            if (i == 1) s.sample_period_s = static_cast<double>(t - s.start_epoch_s);
        }
        prev_t = t;
        s.w.push_back(w);
    }
    return s;
}

void save_signal_csv(const std::string& path, const RegulationSignal& s) {
    csv::Table t;
    t.header = {"timestamp", "w"};
    t.rows.reserve(s.w.size());
    for (std::size_t i = 0; i < s.w.size(); ++i) {
        std::int64_t ts = s.start_epoch_s + static_cast<std::int64_t>(i * s.sample_period_s);
        t.rows.push_back({iso8601_utc(ts), csv::format_double(s.w[i])});
    }
    csv::write_file(path, t);
}

namespace {

// Nearest-rank percentile on an ascending sample; exact for fixtures and
// monotone in p by construction.
double percentile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("percentile: empty sample");
    if (!(p > 0.0 && p <= 100.0)) throw std::invalid_argument("percentile: p must be in (0, 100]");
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
    rank = std::max<std::size_t>(1, std::min(rank, sorted.size()));
    return sorted[rank - 1];
}

} // namespace

EnergyContentStats energy_content(const RegulationSignal& s, double window_s) {
    if (!(window_s > 0.0)) throw std::invalid_argument("energy_content: window must be > 0");
    auto per_window = static_cast<std::size_t>(std::llround(window_s / s.sample_period_s));
    if (per_window == 0 || s.w.size() < per_window)
        throw std::invalid_argument("energy_content: signal shorter than one window");

    EnergyContentStats stats;
    std::size_t n_windows = s.w.size() / per_window;
    stats.contents.reserve(n_windows);
    for (std::size_t wdx = 0; wdx < n_windows; ++wdx) {
        double sum = 0.0;
        for (std::size_t i = 0; i < per_window; ++i) sum += s.w[wdx * per_window + i];
        stats.contents.push_back(std::abs(sum / static_cast<double>(per_window)));
    }
    stats.sorted_contents = stats.contents;
    std::sort(stats.sorted_contents.begin(), stats.sorted_contents.end());
    stats.median = percentile(stats.sorted_contents, 50.0);
    stats.p95 = percentile(stats.sorted_contents, 95.0);
    stats.p975 = percentile(stats.sorted_contents, 97.5);
    stats.p99 = percentile(stats.sorted_contents, 99.0);
    stats.max = stats.sorted_contents.back();
    return stats;
}

double wlim_from_percentile(const EnergyContentStats& stats, double p) {
    return percentile(stats.sorted_contents, p);
}

nlohmann::json EnergyContentStats::to_json() const {
    std::vector<double> cdf(sorted_contents.size());
    for (std::size_t i = 0; i < cdf.size(); ++i)
        cdf[i] = static_cast<double>(i + 1) / static_cast<double>(cdf.size());
    return nlohmann::json{{"contents", contents},
                          {"cdf_values", sorted_contents},
                          {"cdf_probabilities", cdf},
                          {"median", median},
                          {"p95", p95},
                          {"p97_5", p975},
                          {"p99", p99},
                          {"max", max}};
}

RegulationSignal generate_synthetic(std::uint64_t seed, double duration_s, double f_lo,
                                    double f_hi, double sample_period_s) {
    double nyquist = 0.5 / sample_period_s;
    if (!(f_lo > 0.0) || !(f_lo < f_hi) || f_hi > nyquist + 1e-15)
        throw std::invalid_argument("generate_synthetic: band must satisfy 0 < f_lo < f_hi <= "
                                    "Nyquist of the sample period");
    auto n = static_cast<std::size_t>(std::floor(duration_s / sample_period_s));
    if (n == 0) throw std::invalid_argument("generate_synthetic: duration shorter than one sample");

    // Frequencies on the length-n DFT grid inside the band, capped so the
    // synthesis stays O(n * n_components).
    double df = 1.0 / (static_cast<double>(n) * sample_period_s);
    auto k_lo = static_cast<std::size_t>(std::ceil(f_lo / df));
    auto k_hi = static_cast<std::size_t>(std::floor(f_hi / df));
    k_lo = std::max<std::size_t>(1, k_lo);
    if (k_hi < k_lo) k_hi = k_lo;
    std::size_t count = k_hi - k_lo + 1;
    std::size_t n_comp = std::min<std::size_t>(count, 512);

    Rng rng(mix_seed(seed, 0x5157a1));
    std::vector<double> freq(n_comp), phase(n_comp), amp(n_comp);
    for (std::size_t c = 0; c < n_comp; ++c) {
        std::size_t k = (n_comp == 1) ? k_lo
                                      : k_lo + (count - 1) * c / (n_comp - 1);
        freq[c] = static_cast<double>(k) * df;
        phase[c] = rng.uniform(0.0, 2.0 * M_PI);
        amp[c] = std::abs(rng.gaussian());
    }

    RegulationSignal s;
    s.sample_period_s = sample_period_s;
    s.w.resize(n);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double t = static_cast<double>(i) * sample_period_s;
        double v = 0.0;
        for (std::size_t c = 0; c < n_comp; ++c)
            v += amp[c] * std::sin(2.0 * M_PI * freq[c] * t + phase[c]);
        s.w[i] = v;
        peak = std::max(peak, std::abs(v));
    }
    if (peak > 0.0)
        for (auto& v : s.w) v = std::clamp(v / peak, -1.0, 1.0);
    return s;
}

} // namespace hvacreg::signal
