#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hvacreg/csv.hpp"
#include "hvacreg/fan.hpp"
#include "hvacreg/model.hpp"
#include "hvacreg/nlp.hpp"

namespace hvacreg::scheduler {

// Reserve product structure required by the market.
enum class SymmetryMode {
    none,               // independent up/down electric capacities
    electric_symmetric, // R_u,k = R_d,k
    thermal_symmetric,  // r_u,k = r_d,k (electric capacities asymmetric)
};

std::string to_string(SymmetryMode m);
SymmetryMode symmetry_from_string(const std::string& s);

struct MarketScenario {
    int horizon = 96;                          // N1, 15-minute slots
    std::vector<double> energy_price;          // c_k, $ per W of fan power per slot
    std::vector<double> reserve_price;         // lambda_k, $ per W of capacity per slot
    std::vector<model::Disturbance> forecast;  // v_k over the horizon
    std::vector<double> x_min, x_max;          // room comfort band per slot, degC
    double w_lim = 0.25;                       // worst-case slot energy content, (0, 1]
    double u_min = 0.0, u_max = 0.0;           // scheduler flow band, kg/s
    int block_len = 4;                         // T_res slots per reserve block
    SymmetryMode symmetry = SymmetryMode::thermal_symmetric;
    double comfort_penalty = 1e4;              // $ per degC per slot on band violations

    // Synthetic but realistic defaults: flat prices, office comfort band
    // (21-24 degC during 08:00-18:00, 19-26 otherwise), a clear-sky
    // disturbance day, flow band at fan speeds 20 % / 80 %.
    static MarketScenario defaults(const fan::FanCurves& curves, int horizon = 96);

    void validate() const;
    nlohmann::json to_json() const;
    static MarketScenario from_json(const nlohmann::json& j, const fan::FanCurves& curves);
};

struct ReserveScheduleRow {
    double u = 0.0;   // operating flow, kg/s
    double r_u = 0.0; // thermal up-reserve, kg/s
    double r_d = 0.0; // thermal down-reserve, kg/s
    double R_u = 0.0; // electric up capacity, W
    double R_d = 0.0; // electric down capacity, W
    Eigen::Vector2d x_hi = Eigen::Vector2d::Zero(); // worst-case high state after the slot
    Eigen::Vector2d x_lo = Eigen::Vector2d::Zero(); // worst-case low state after the slot
};

struct ReserveSchedule {
    std::vector<ReserveScheduleRow> rows;
    double objective = 0.0;            // $(energy) - $(reserve revenue) + penalties
    double comfort_slack = 0.0;        // total degC-slots of band violation in the envelopes
    bool exact_dynamics = false;       // true if produced by the inverse-map formulation
    nlp::SolveReport report;

    csv::Table to_csv() const; // k,u,r_u,r_d,R_u,R_d,x_hi,x_lo
    nlohmann::json summary_json() const;
};

// Day-ahead robust reserve scheduling with the linearized envelope
// dynamics (thermal reserves scaled by w_lim). Throws std::invalid_argument
// when the supply-air assumption T_s <= x_min,k fails.
ReserveSchedule schedule_reserves(const model::DiscreteBuildingModel& m,
                                  const fan::FanCurves& curves, const MarketScenario& scenario,
                                  const model::BuildingState& x0,
                                  const ReserveSchedule* warm_start = nullptr);

// Same problem with the exact inverse-fan-map envelope dynamics; the
// reference the linearized solver is validated against.
ReserveSchedule schedule_reserves_exact(const model::DiscreteBuildingModel& m,
                                        const fan::FanCurves& curves,
                                        const MarketScenario& scenario,
                                        const model::BuildingState& x0,
                                        const ReserveSchedule* warm_start = nullptr);

// The underlying optimization problem, exposed for gradient checks and
// the single-step oracle comparisons.
nlp::NlpProblem build_problem(const model::DiscreteBuildingModel& m, const fan::FanCurves& curves,
                              const MarketScenario& scenario, const model::BuildingState& x0,
                              bool exact_dynamics);
Eigen::VectorXd cold_start(const MarketScenario& scenario);

struct RobustnessReport {
    double max_comfort_violation = 0.0;  // degC beyond [x_min, x_max]
    double max_above_upper_envelope = 0.0;
    double max_below_lower_envelope = 0.0;
    double max_flow_violation = 0.0;     // kg/s beyond [u_min, u_max]
    int draws = 0;
};

// Monte Carlo activation replay: n_draws random per-slot signals with
// |w| <= w_lim plus the two constant extremes, simulated through the
// model with the activated flow f^-1(f(u) + w R). Envelope containment
// on both sides is a guarantee only for exact-dynamics schedules.
RobustnessReport verify_schedule(const model::DiscreteBuildingModel& m,
                                 const fan::FanCurves& curves, const ReserveSchedule& schedule,
                                 const MarketScenario& scenario, const model::BuildingState& x0,
                                 int n_draws, std::uint64_t seed);

} // namespace hvacreg::scheduler
