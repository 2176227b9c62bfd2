#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace hvacreg::fan {

struct ReservePair {
    double R_u = 0.0; // up-reserve electric capacity, W (consume less)
    double R_d = 0.0; // down-reserve electric capacity, W (consume more)
};

// One sample of a fan characterization sweep.
struct SweepSample {
    double t = 0.0;      // seconds since sweep start
    double speed_pct = 0.0;
    double flow = 0.0;   // kg/s
    double power = 0.0;  // W
};

// Static fan maps:
//   f: flow -> power,  P = sum_n alpha[n] u^n        (cubic)
//   g: speed -> power, P = sum_n beta[n] N^n         (cubic)
//   h: speed -> flow,  u = gamma1 N + gamma0         (affine)
// Forward maps clamp their argument to the stored domain; the inverses
// are hard-errors outside range because they feed actuator commands.
class FanCurves {
public:
    FanCurves() = default;
    FanCurves(std::array<double, 4> alpha, std::array<double, 4> beta, double gamma0,
              double gamma1, double n_lo, double n_hi);

    // Curves measured on the test facility's supply fan (speed swept
    // 10..90 % in 5 % steps). Used as the default plant everywhere.
    static FanCurves reference();

    double flow_to_power(double u) const;   // f, clamped to [u_lo, u_hi]
    double power_to_flow(double P) const;   // f^-1, throws std::domain_error out of range
    double speed_to_power(double N) const;  // g, clamped to [N_lo, N_hi]
    double power_to_speed(double P) const;  // g^-1, throws std::domain_error out of range
    double speed_to_flow(double N) const;   // h, clamped
    double flow_to_speed(double u) const;   // h^-1, exact affine inversion

    // Unclamped polynomial evaluations and derivatives. The optimizers
    // use these so that intermediate iterates slightly outside the
    // domain stay smooth; the *_extended inverse continues f linearly
    // beyond the domain ends (C^1 at the seams).
    double f_raw(double u) const;
    double f_prime(double u) const;
    double f_second(double u) const;
    double g_raw(double N) const;
    double g_prime(double N) const;
    double power_to_flow_extended(double P) const;

    // f continued linearly outside [u_lo, u_hi]: globally increasing and
    // C^1, equal to the cubic inside the domain. power_to_flow_extended
    // is its exact inverse.
    double f_extended(double u) const;
    double f_extended_prime(double u) const;

    // R_u = f(u) - f(u - r_d), R_d = f(u + r_u) - f(u).
    // Throws std::domain_error if u - r_d or u + r_u leaves the flow domain.
    ReservePair reserve_capacities(double u, double r_u, double r_d) const;

    bool in_flow_domain(double u) const { return u >= u_lo_ && u <= u_hi_; }
    bool in_speed_domain(double N) const { return N >= n_lo_ && N <= n_hi_; }
    double u_lo() const { return u_lo_; }
    double u_hi() const { return u_hi_; }
    double n_lo() const { return n_lo_; }
    double n_hi() const { return n_hi_; }
    const std::array<double, 4>& alpha() const { return alpha_; }
    const std::array<double, 4>& beta() const { return beta_; }
    double gamma0() const { return gamma0_; }
    double gamma1() const { return gamma1_; }

    // Max |f(h(N)) - g(N)| over the speed domain. The two power maps are
    // fitted independently and may disagree; this is reported as a
    // diagnostic, never enforced.
    double consistency_gap() const;

    nlohmann::json to_json() const;
    static FanCurves from_json(const nlohmann::json& j);

private:
    std::array<double, 4> alpha_{};
    std::array<double, 4> beta_{};
    double gamma0_ = 0.0, gamma1_ = 1.0;
    double u_lo_ = 0.0, u_hi_ = 1.0;
    double n_lo_ = 0.0, n_hi_ = 100.0;
};

struct FanFitReport {
    FanCurves curves;
    double rmse_flow_to_power = 0.0;  // W
    double rmse_speed_to_power = 0.0; // W
    double rmse_speed_to_flow = 0.0;  // kg/s
    double consistency_gap = 0.0;     // W, f(h(N)) vs g(N)
    std::size_t samples_used = 0;
    std::size_t samples_discarded = 0; // first 20 s after each level change
};

// Least-squares fit of f, g (cubic) and h (affine) from a speed sweep.
// Samples within the first 20 s after a speed level change are discarded
// (fan transients + communication delay). Requires >= 8 distinct levels;
// the fitted f must be strictly increasing and convex on the data range,
// otherwise the violating subinterval is reported.
FanFitReport fit_fan(const std::vector<SweepSample>& sweep);

std::vector<SweepSample> load_sweep_csv(const std::string& path);

} // namespace hvacreg::fan
