#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace hvacreg::model {

// Continuous-time RC parameters of the 2-state room/thermal-mass network.
// Units: capacitances in kWh/degC (any consistent choice works as long as
// resistances match), resistances in degC/kW, c_p in kJ/(kg*degC).
struct ContinuousBuildingParams {
    double C_r;   // room air capacitance
    double C_m;   // lumped thermal mass capacitance
    double R_ra;  // room <-> ambient resistance
    double R_rm;  // room <-> mass resistance
    double gamma; // solar absorption factor
    double c_p;   // specific heat of supply air
    double T_s;   // supply air temperature, degC

    void validate() const; // throws std::invalid_argument
};

// x = (T_r, T_m), u = mass flow in kg/s, v = (T_a, G, I_g).
struct BuildingState {
    double T_r = 0.0;
    double T_m = 0.0;

    Eigen::Vector2d vec() const { return {T_r, T_m}; }
    static BuildingState from_vec(const Eigen::Vector2d& v) { return {v(0), v(1)}; }
};

struct Disturbance {
    double T_a = 0.0; // ambient temperature, degC
    double G = 0.0;   // solar irradiance, W/m^2
    double I_g = 0.0; // internal gains, W

    Eigen::Vector3d vec() const { return {T_a, G, I_g}; }
};

// Discrete-time bilinear model
//   x+ = A x + B_u u + B_xu x u + B_v v,
// where B_u = (b*T_s, 0), B_xu = [[-b, 0], [0, 0]] and B_v has only its
// first row populated. The second rows stay zero: the thermal mass is
// coupled to the room only through A.
struct DiscreteBuildingModel {
    Eigen::Matrix2d A = Eigen::Matrix2d::Identity();
    Eigen::Vector2d B_u = Eigen::Vector2d::Zero();
    Eigen::Matrix2d B_xu = Eigen::Matrix2d::Zero();
    Eigen::Matrix<double, 2, 3> B_v = Eigen::Matrix<double, 2, 3>::Zero();
    double delta_t = 900.0; // step length, s
    double T_s = 14.0;      // supply air temperature, degC

    // Named-entry factory mirroring the serialized form.
    static DiscreteBuildingModel from_entries(double a11, double a12, double a21, double a22,
                                              double b, double d11, double d12, double d13,
                                              double T_s, double delta_t = 900.0);

    double b() const { return -B_xu(0, 0); }

    // Sign pattern, zero second rows, and |eig(A)| <= 1.
    void validate() const; // throws std::invalid_argument
    bool sign_pattern_ok() const;

    nlohmann::json to_json() const;
    static DiscreteBuildingModel from_json(const nlohmann::json& j);
};

// Largest eigenvalue magnitude of a 2x2 matrix, closed form.
double spectral_radius(const Eigen::Matrix2d& M);

// First-order Euler discretization: A = I + dt*A^c, B_* = dt*B_*^c.
// The sign pattern of the continuous matrices survives for any dt > 0.
DiscreteBuildingModel discretize(const ContinuousBuildingParams& p, double delta_t);

// One bilinear update. Evaluation order is fixed (A*x, then input,
// bilinear, disturbance terms) so trajectories replay bit-for-bit.
BuildingState step(const DiscreteBuildingModel& m, const BuildingState& x, double u,
                   const Disturbance& v);

// trajectory[0] = x0, trajectory[k+1] = step(m, trajectory[k], u[k], v[k]).
std::vector<BuildingState> simulate(const DiscreteBuildingModel& m, const BuildingState& x0,
                                    const std::vector<double>& u_seq,
                                    const std::vector<Disturbance>& v_seq);

// true iff |eig(A)| <= 1 and |eig(A + B_xu*u)| <= 1.
bool closed_loop_stable(const DiscreteBuildingModel& m, double u);

// Fitted parameter sets from the test facility, used as defaults and
// test fixtures throughout. "recent" is the 2-state/1-day calibration
// used by the controllers; "older" is the earlier calibration kept for
// plant-model mismatch studies.
DiscreteBuildingModel recent_calibration();
DiscreteBuildingModel older_calibration();

} // namespace hvacreg::model
