#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hvacreg/model.hpp"
#include "hvacreg/nlp.hpp"

namespace hvacreg::sysid {

struct IdentRow {
    std::int64_t t = 0; // epoch seconds
    double T_r = 0.0;   // measured room temperature, degC
    double mdot = 0.0;  // supply air mass flow, kg/s
    double T_a = 0.0;   // ambient temperature, degC
    double G = 0.0;     // solar irradiance, W/m^2
    double I_g = 0.0;   // internal gains, W
    double T_s = 0.0;   // supply air temperature, degC
};

// Uniformly sampled measurement segment. Gaps are rejected on load;
// split gapped recordings into separate segments upstream.
struct IdentDataset {
    std::vector<IdentRow> rows;
    double sample_period_s = 900.0;

    void validate() const;
    std::size_t steps_per_day() const;

    static IdentDataset from_csv(const std::string& path);
};

enum class HorizonMode { one_step, one_day };

struct FitConfig {
    int n_states = 2;                        // 1 or 2
    HorizonMode horizon_mode = HorizonMode::one_day;
    double tm_low = 0.01;                    // T_m bounds as multiples of T_r
    double tm_high = 2.5;
    std::uint64_t seed = 0;                  // deterministic multistart stream
    int multistarts = 3;
    nlp::NlpOptions solver;
};

struct FitReport {
    model::DiscreteBuildingModel fitted;
    int n_states = 2;
    HorizonMode horizon_mode = HorizonMode::one_day;
    double rmse = 0.0;                 // degC, in the fit's horizon mode
    std::vector<double> residuals;     // predicted minus measured T_r
    bool converged = false;
    bool stability_ok = false;         // |eig(A + B_xu u_k)| <= 1 for all data u_k
    bool tm_bounds_ok = false;         // reconstructed T_m within its band
    int starts_tried = 0;
    double objective = 0.0;
    std::string notes;

    nlohmann::json to_json() const;
};

// Constrained regression of the bilinear model from measurements.
// One-step mode injects the measured room temperature at every step of
// the predictor; one-day mode chains the predictor's own room estimate
// and restarts it from the measurement at day boundaries. The hidden
// mass temperature is always reconstructed by forward simulation
// (initialized at the measured T_r), never a free variable. Sign
// constraints are box bounds; stability and the T_m band enter as
// penalties and are verified a posteriori.
FitReport fit_model(const IdentDataset& data, const FitConfig& cfg);

// RMSE of the model's T_r predictions over the dataset. one_step: each
// prediction starts from the measured state. one_day: open-loop chains
// restarted from the measurement at every day boundary.
double evaluate_rmse(const model::DiscreteBuildingModel& m, const IdentDataset& data,
                     HorizonMode mode);

} // namespace hvacreg::sysid
