#include "hvacreg/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hvacreg/rng.hpp"

namespace hvacreg::scheduler {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

std::string to_string(SymmetryMode m) {
    switch (m) {
    case SymmetryMode::none: return "none";
    case SymmetryMode::electric_symmetric: return "electric_symmetric";
    case SymmetryMode::thermal_symmetric: return "thermal_symmetric";
    }
    return "none";
}

SymmetryMode symmetry_from_string(const std::string& s) {
    if (s == "none") return SymmetryMode::none;
    if (s == "electric_symmetric") return SymmetryMode::electric_symmetric;
    if (s == "thermal_symmetric") return SymmetryMode::thermal_symmetric;
    throw std::invalid_argument("unknown symmetry mode '" + s + "'");
}

void MarketScenario::validate() const {
    if (horizon <= 0) throw std::invalid_argument("scenario: horizon must be positive");
    auto n = static_cast<std::size_t>(horizon);
    if (energy_price.size() != n || reserve_price.size() != n || forecast.size() != n ||
        x_min.size() != n || x_max.size() != n)
        throw std::invalid_argument("scenario: series lengths must equal the horizon");
    for (std::size_t k = 0; k < n; ++k)
        if (!(x_min[k] < x_max[k]))
            throw std::invalid_argument("scenario: x_min must be below x_max at slot " +
                                        std::to_string(k));
    if (!(w_lim >= 0.0 && w_lim <= 1.0))
        throw std::invalid_argument("scenario: w_lim must lie in [0, 1]");
    if (!(u_min < u_max)) throw std::invalid_argument("scenario: need u_min < u_max");
    if (block_len < 1) throw std::invalid_argument("scenario: block length must be >= 1");
    if (!(comfort_penalty > 0.0)) throw std::invalid_argument("scenario: comfort penalty <= 0");
}

MarketScenario MarketScenario::defaults(const fan::FanCurves& curves, int horizon) {
    MarketScenario s;
    s.horizon = horizon;
    auto n = static_cast<std::size_t>(horizon);
    // Synthetic flat prices: 0.10 $/kWh energy and a reserve payment that
    // makes capacity worth offering. Clearly placeholders, not market data.
    s.energy_price.assign(n, 2.5e-5);  // $ per W per 15-min slot
    s.reserve_price.assign(n, 4.0e-5); // $ per W per slot
    s.forecast.resize(n);
    s.x_min.resize(n);
    s.x_max.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        double hour = std::fmod(static_cast<double>(k) * 0.25, 24.0);
        auto& v = s.forecast[k];
        v.T_a = 16.0 + 7.0 * std::sin(2.0 * M_PI * (hour - 9.0) / 24.0);
        double solar = std::sin(M_PI * (hour - 6.5) / 13.0);
        v.G = (hour > 6.5 && hour < 19.5) ? 600.0 * std::max(0.0, solar) : 0.0;
        v.I_g = (hour >= 8.0 && hour < 18.0) ? 900.0 : 150.0;
        bool working = hour >= 8.0 && hour < 18.0;
        s.x_min[k] = working ? 21.0 : 19.0;
        s.x_max[k] = working ? 24.0 : 26.0;
    }
    s.u_min = curves.speed_to_flow(20.0);
    s.u_max = curves.speed_to_flow(80.0);
    return s;
}

namespace {

constexpr double kCapScale = 1000.0; // capacity decision variables are in kW

struct Layout {
    SymmetryMode mode;
    bool exact = false;
    int N = 0;
    int T_res = 1;
    int B = 0;
    bool block_u = false; // u constant within blocks (thermal mode with blocks)
    int nu = 0;
    int nq = 0;
    int n = 0;

    static Layout make(const MarketScenario& sc, bool exact) {
        Layout L;
        L.mode = sc.symmetry;
        L.exact = exact;
        L.N = sc.horizon;
        L.T_res = sc.block_len;
        L.B = (L.N + L.T_res - 1) / L.T_res;
        // Requiring both R_u and R_d constant inside a block while the
        // thermal reserves stay symmetric pins the flow inside the block
        // too; parametrizing per block keeps the products exact.
        L.block_u = (sc.symmetry == SymmetryMode::thermal_symmetric && L.T_res > 1);
        L.nu = L.block_u ? L.B : L.N;
        switch (sc.symmetry) {
        case SymmetryMode::none: L.nq = 2 * L.B; break;
        case SymmetryMode::electric_symmetric: L.nq = L.B; break;
        case SymmetryMode::thermal_symmetric: L.nq = L.nu; break;
        }
        L.n = L.nu + L.nq;
        return L;
    }

    int blk(int k) const { return k / T_res; }
    int iu(int k) const { return block_u ? blk(k) : k; }
    int iq1(int k) const {
        if (mode == SymmetryMode::thermal_symmetric) return nu + iu(k);
        return nu + blk(k);
    }
    int iq2(int k) const { // only distinct in mode none (R_d block)
        return nu + B + blk(k);
    }
};

// Smoothed hinge for the soft comfort penalty: the analytic elimination
// of a linear-penalty slack variable, rounded in [0, eps] so the
// objective stays C^1. Both formulations share the definition, so the
// cross-checks between them are unaffected by the rounding.
constexpr double kHingeEps = 1e-3;

double hinge(double v) {
    if (v <= 0.0) return 0.0;
    if (v < kHingeEps) return v * v / (2.0 * kHingeEps);
    return v - 0.5 * kHingeEps;
}

double hinge_prime(double v) {
    if (v <= 0.0) return 0.0;
    if (v < kHingeEps) return v / kHingeEps;
    return 1.0;
}

struct StepEval {
    double u = 0, R_u = 0, R_d = 0, r_u = 0, r_d = 0;
    double phi_hi = 0, phi_lo = 0;
    // derivative triplets wrt decision entries (iu, iq1, iq2)
    double dRu[3] = {0, 0, 0}, dRd[3] = {0, 0, 0};
    double dhi[3] = {0, 0, 0}, dlo[3] = {0, 0, 0};
    double dru[3] = {0, 0, 0}, drd[3] = {0, 0, 0};
};

struct Context {
    model::DiscreteBuildingModel m;
    fan::FanCurves curves;
    MarketScenario sc;
    model::BuildingState x0;
    Layout L;
};

StepEval eval_step(const Context& c, const VectorXd& z, int k) {
    const auto& fc = c.curves;
    const double w = c.sc.w_lim;
    StepEval s;
    s.u = z(c.L.iu(k));
    double fu = fc.f_extended(s.u);
    double fpu = fc.f_extended_prime(s.u);

    if (c.L.mode == SymmetryMode::thermal_symmetric) {
        double r = z(c.L.iq1(k));
        s.r_u = s.r_d = r;
        s.dru[1] = s.drd[1] = 1.0;
        double f_lo = fc.f_extended(s.u - r), fp_lo = fc.f_extended_prime(s.u - r);
        double f_hi = fc.f_extended(s.u + r), fp_hi = fc.f_extended_prime(s.u + r);
        s.R_u = fu - f_lo;
        s.dRu[0] = fpu - fp_lo;
        s.dRu[1] = fp_lo;
        s.R_d = f_hi - fu;
        s.dRd[0] = fp_hi - fpu;
        s.dRd[1] = fp_hi;
        if (!c.L.exact) {
            s.phi_hi = s.u - w * r;
            s.dhi[0] = 1.0;
            s.dhi[1] = -w;
            s.phi_lo = s.u + w * r;
            s.dlo[0] = 1.0;
            s.dlo[1] = w;
        } else {
            double P_hi = (1.0 - w) * fu + w * f_lo;
            s.phi_hi = fc.power_to_flow_extended(P_hi);
            double den = fc.f_extended_prime(s.phi_hi);
            s.dhi[0] = ((1.0 - w) * fpu + w * fp_lo) / den;
            s.dhi[1] = -w * fp_lo / den;
            double P_lo = (1.0 - w) * fu + w * f_hi;
            s.phi_lo = fc.power_to_flow_extended(P_lo);
            double den2 = fc.f_extended_prime(s.phi_lo);
            s.dlo[0] = ((1.0 - w) * fpu + w * fp_hi) / den2;
            s.dlo[1] = w * fp_hi / den2;
        }
        return s;
    }

    // Capacity parametrization: decision variables are the electric
    // capacities (kW) at block granularity; thermal reserves follow from
    // the inverse map.
    bool electric = c.L.mode == SymmetryMode::electric_symmetric;
    s.R_u = kCapScale * z(c.L.iq1(k));
    s.R_d = electric ? s.R_u : kCapScale * z(c.L.iq2(k));
    s.dRu[1] = kCapScale;
    if (electric)
        s.dRd[1] = kCapScale;
    else
        s.dRd[2] = kCapScale;

    double psi1 = fc.power_to_flow_extended(fu - s.R_u);
    double fp_psi1 = fc.f_extended_prime(psi1);
    s.r_d = s.u - psi1;
    s.drd[0] = 1.0 - fpu / fp_psi1;
    double drd_dRu = 1.0 / fp_psi1;

    double psi2 = fc.power_to_flow_extended(fu + s.R_d);
    double fp_psi2 = fc.f_extended_prime(psi2);
    s.r_u = psi2 - s.u;
    s.dru[0] = fpu / fp_psi2 - 1.0;
    double dru_dRd = 1.0 / fp_psi2;

    int slot_d = electric ? 1 : 2; // derivative slot carrying R_d
    s.drd[1] = drd_dRu * kCapScale;
    s.dru[slot_d] = dru_dRd * kCapScale;

    if (!c.L.exact) {
        // phi_hi = (1-w) u + w psi1, phi_lo = (1-w) u + w psi2
        s.phi_hi = s.u - w * s.r_d;
        s.dhi[0] = (1.0 - w) + w * fpu / fp_psi1;
        s.dhi[1] = -w * kCapScale / fp_psi1;
        s.phi_lo = s.u + w * s.r_u;
        s.dlo[0] = (1.0 - w) + w * fpu / fp_psi2;
        s.dlo[slot_d] = w * kCapScale / fp_psi2;
    } else {
        s.phi_hi = fc.power_to_flow_extended(fu - w * s.R_u);
        double den = fc.f_extended_prime(s.phi_hi);
        s.dhi[0] = fpu / den;
        s.dhi[1] = -w * kCapScale / den;
        s.phi_lo = fc.power_to_flow_extended(fu + w * s.R_d);
        double den2 = fc.f_extended_prime(s.phi_lo);
        s.dlo[0] = fpu / den2;
        s.dlo[slot_d] = w * kCapScale / den2;
    }
    return s;
}

// Shared full evaluation: objective, flow inequalities, and (optionally)
// analytic derivatives via forward sensitivity propagation of the two
// envelope recursions.
void eval_problem(const Context& c, const VectorXd& z, bool want, nlp::Evaluation& out) {
    const Layout& L = c.L;
    const int N = L.N, n = L.n;
    const auto& m = c.m;
    const auto& sc = c.sc;

    out.g.resize(2 * N);
    if (want) {
        out.grad = VectorXd::Zero(n);
        out.Jg = MatrixXd::Zero(2 * N, n);
    }

    Vector2d x_hi = c.x0.vec(), x_lo = c.x0.vec();
    MatrixXd S_hi, S_lo;
    if (want) {
        S_hi = MatrixXd::Zero(2, n);
        S_lo = MatrixXd::Zero(2, n);
    }

    double obj = 0.0;
    for (int k = 0; k < N; ++k) {
        StepEval s = eval_step(c, z, k);
        int idx[3] = {L.iu(k), L.iq1(k), L.iq2(k)};

        obj += sc.energy_price[k] * c.curves.f_extended(s.u) -
               sc.reserve_price[k] * (s.R_u + s.R_d);
        if (want) {
            out.grad(idx[0]) += sc.energy_price[k] * c.curves.f_extended_prime(s.u);
            for (int j = 0; j < 3; ++j)
                out.grad(idx[j]) -= sc.reserve_price[k] * (s.dRu[j] + s.dRd[j]);
        }

        // Flow band: u - r_d >= u_min and u + r_u <= u_max. In capacity
        // modes the equivalent power-domain form keeps the rows linear in
        // the capacity variables; rows are normalized to kW magnitudes.
        if (L.mode == SymmetryMode::thermal_symmetric) {
            double r = s.r_d;
            out.g(2 * k) = sc.u_min - s.u + r;
            out.g(2 * k + 1) = s.u + r - sc.u_max;
            if (want) {
                out.Jg(2 * k, idx[0]) = -1.0;
                out.Jg(2 * k, idx[1]) = 1.0;
                out.Jg(2 * k + 1, idx[0]) = 1.0;
                out.Jg(2 * k + 1, idx[1]) = 1.0;
            }
        } else {
            double fu = c.curves.f_extended(s.u);
            double fpu = c.curves.f_extended_prime(s.u);
            double f_min = c.curves.f_extended(sc.u_min);
            double f_max = c.curves.f_extended(sc.u_max);
            out.g(2 * k) = (f_min - fu + s.R_u) / kCapScale;
            out.g(2 * k + 1) = (fu + s.R_d - f_max) / kCapScale;
            if (want) {
                out.Jg(2 * k, idx[0]) = -fpu / kCapScale;
                out.Jg(2 * k + 1, idx[0]) = fpu / kCapScale;
                for (int j = 1; j < 3; ++j) {
                    out.Jg(2 * k, idx[j]) += s.dRu[j] / kCapScale;
                    out.Jg(2 * k + 1, idx[j]) += s.dRd[j] / kCapScale;
                }
            }
        }

        // Envelope propagation (upper: reduced flow; lower: raised flow).
        Eigen::Matrix2d M_hi = m.A + m.B_xu * s.phi_hi;
        Eigen::Matrix2d M_lo = m.A + m.B_xu * s.phi_lo;
        Vector2d in_hi = m.B_u + m.B_xu * x_hi;
        Vector2d in_lo = m.B_u + m.B_xu * x_lo;
        Eigen::Vector3d vk = sc.forecast[k].vec();
        Vector2d x_hi_next = m.A * x_hi + m.B_u * s.phi_hi + (m.B_xu * x_hi) * s.phi_hi +
                             m.B_v * vk;
        Vector2d x_lo_next = m.A * x_lo + m.B_u * s.phi_lo + (m.B_xu * x_lo) * s.phi_lo +
                             m.B_v * vk;
        if (want) {
            S_hi = (M_hi * S_hi).eval();
            S_lo = (M_lo * S_lo).eval();
            for (int j = 0; j < 3; ++j) {
                if (s.dhi[j] != 0.0) S_hi.col(idx[j]) += in_hi * s.dhi[j];
                if (s.dlo[j] != 0.0) S_lo.col(idx[j]) += in_lo * s.dlo[j];
            }
        }
        x_hi = x_hi_next;
        x_lo = x_lo_next;

        double v_hi = x_hi(0) - sc.x_max[k];
        double v_lo = sc.x_min[k] - x_lo(0);
        obj += sc.comfort_penalty * (hinge(v_hi) + hinge(v_lo));
        if (want) {
            double dh = sc.comfort_penalty * hinge_prime(v_hi);
            double dl = sc.comfort_penalty * hinge_prime(v_lo);
            if (dh != 0.0) out.grad += dh * S_hi.row(0).transpose();
            if (dl != 0.0) out.grad -= dl * S_lo.row(0).transpose();
        }
    }
    out.f = obj;
}

Context make_context(const model::DiscreteBuildingModel& m, const fan::FanCurves& curves,
                     const MarketScenario& sc, const model::BuildingState& x0, bool exact) {
    sc.validate();
    for (int k = 0; k < sc.horizon; ++k)
        if (!(m.T_s <= sc.x_min[k]))
            throw std::invalid_argument(
                "scheduler: cooling-mode assumption violated (T_s = " + std::to_string(m.T_s) +
                " degC above comfort minimum at slot " + std::to_string(k) + ")");
    return Context{m, curves, sc, x0, Layout::make(sc, exact)};
}

ReserveSchedule assemble(const Context& c, const nlp::SolveReport& rep) {
    const Layout& L = c.L;
    ReserveSchedule out;
    out.exact_dynamics = L.exact;
    out.report = rep;
    out.objective = rep.objective;
    out.rows.resize(L.N);

    Vector2d x_hi = c.x0.vec(), x_lo = c.x0.vec();
    double slack = 0.0;
    for (int k = 0; k < L.N; ++k) {
        StepEval s = eval_step(c, rep.z, k);
        auto& row = out.rows[k];
        row.u = s.u;
        row.r_u = s.r_u;
        row.r_d = s.r_d;
        row.R_u = s.R_u;
        row.R_d = s.R_d;
        x_hi = c.m.A * x_hi + c.m.B_u * s.phi_hi + (c.m.B_xu * x_hi) * s.phi_hi +
               c.m.B_v * c.sc.forecast[k].vec();
        x_lo = c.m.A * x_lo + c.m.B_u * s.phi_lo + (c.m.B_xu * x_lo) * s.phi_lo +
               c.m.B_v * c.sc.forecast[k].vec();
        row.x_hi = x_hi;
        row.x_lo = x_lo;
        slack += std::max(0.0, x_hi(0) - c.sc.x_max[k]) + std::max(0.0, c.sc.x_min[k] - x_lo(0));
    }
    out.comfort_slack = slack;
    return out;
}

VectorXd warm_start_vector(const Context& c, const ReserveSchedule& warm) {
    const Layout& L = c.L;
    VectorXd z = VectorXd::Zero(L.n);
    if (static_cast<int>(warm.rows.size()) != L.N)
        throw std::invalid_argument("warm start horizon mismatch");
    for (int k = 0; k < L.N; ++k) {
        const auto& row = warm.rows[k];
        z(L.iu(k)) = std::clamp(row.u, c.sc.u_min, c.sc.u_max);
        switch (L.mode) {
        case SymmetryMode::thermal_symmetric:
            z(L.iq1(k)) = std::max(0.0, 0.5 * (row.r_u + row.r_d));
            break;
        case SymmetryMode::electric_symmetric:
            z(L.iq1(k)) = std::max(0.0, 0.5 * (row.R_u + row.R_d) / kCapScale);
            break;
        case SymmetryMode::none:
            z(L.iq1(k)) = std::max(0.0, row.R_u / kCapScale);
            z(L.iq2(k)) = std::max(0.0, row.R_d / kCapScale);
            break;
        }
    }
    return z;
}

nlp::NlpProblem problem_from_context(std::shared_ptr<Context> c) {
    nlp::NlpProblem problem;
    problem.n = c->L.n;
    problem.m_ineq = 2 * c->L.N;
    problem.analytic_derivatives = true;
    problem.eval = [c](const VectorXd& z, bool want, nlp::Evaluation& out) {
        eval_problem(*c, z, want, out);
    };
    problem.lower = VectorXd::Zero(c->L.n);
    problem.upper = VectorXd::Zero(c->L.n);
    for (int i = 0; i < c->L.nu; ++i) {
        problem.lower(i) = c->sc.u_min;
        problem.upper(i) = c->sc.u_max;
    }
    double q_hi = (c->L.mode == SymmetryMode::thermal_symmetric)
                      ? (c->sc.u_max - c->sc.u_min)
                      : (c->curves.f_extended(c->sc.u_max) - c->curves.f_extended(c->sc.u_min)) /
                            kCapScale;
    for (int i = c->L.nu; i < c->L.n; ++i) {
        problem.lower(i) = 0.0;
        problem.upper(i) = q_hi;
    }
    return problem;
}

ReserveSchedule solve_impl(const model::DiscreteBuildingModel& m, const fan::FanCurves& curves,
                           const MarketScenario& scenario, const model::BuildingState& x0,
                           bool exact, const ReserveSchedule* warm) {
    auto c = std::make_shared<Context>(make_context(m, curves, scenario, x0, exact));
    nlp::NlpProblem problem = problem_from_context(c);
    VectorXd z0 = warm ? warm_start_vector(*c, *warm) : cold_start(scenario);

    nlp::NlpOptions opts;
    opts.max_inner = 700;
    opts.max_total_inner = 60000;
    auto rep = nlp::solve(problem, z0, opts);
    return assemble(*c, rep);
}

} // namespace

Eigen::VectorXd cold_start(const MarketScenario& scenario) {
    // mid-band flow, zero reserves; layout depends only on the scenario
    Layout L = Layout::make(scenario, false);
    VectorXd z = VectorXd::Zero(L.n);
    for (int i = 0; i < L.nu; ++i) z(i) = 0.5 * (scenario.u_min + scenario.u_max);
    return z;
}

nlp::NlpProblem build_problem(const model::DiscreteBuildingModel& m, const fan::FanCurves& curves,
                              const MarketScenario& scenario, const model::BuildingState& x0,
                              bool exact_dynamics) {
    auto c = std::make_shared<Context>(make_context(m, curves, scenario, x0, exact_dynamics));
    return problem_from_context(c);
}

ReserveSchedule schedule_reserves(const model::DiscreteBuildingModel& m,
                                  const fan::FanCurves& curves, const MarketScenario& scenario,
                                  const model::BuildingState& x0, const ReserveSchedule* warm) {
    return solve_impl(m, curves, scenario, x0, false, warm);
}

ReserveSchedule schedule_reserves_exact(const model::DiscreteBuildingModel& m,
                                        const fan::FanCurves& curves,
                                        const MarketScenario& scenario,
                                        const model::BuildingState& x0,
                                        const ReserveSchedule* warm) {
    return solve_impl(m, curves, scenario, x0, true, warm);
}

RobustnessReport verify_schedule(const model::DiscreteBuildingModel& m,
                                 const fan::FanCurves& curves, const ReserveSchedule& schedule,
                                 const MarketScenario& scenario, const model::BuildingState& x0,
                                 int n_draws, std::uint64_t seed) {
    scenario.validate();
    const int N = scenario.horizon;
    if (static_cast<int>(schedule.rows.size()) != N)
        throw std::invalid_argument("verify_schedule: schedule/scenario horizon mismatch");

    RobustnessReport report;
    report.draws = n_draws + 2;

    for (int draw = 0; draw < n_draws + 2; ++draw) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(draw)));
        model::BuildingState x = x0;
        for (int k = 0; k < N; ++k) {
            const auto& row = schedule.rows[k];
            double w;
            if (draw == n_draws) w = scenario.w_lim;
            else if (draw == n_draws + 1) w = -scenario.w_lim;
            else w = rng.uniform(-scenario.w_lim, scenario.w_lim);

            double request = (w >= 0.0) ? w * row.R_d : w * row.R_u;
            double u_act = curves.power_to_flow_extended(curves.f_extended(row.u) + request);
            double flow_excess = std::max(std::max(0.0, scenario.u_min - u_act),
                                          std::max(0.0, u_act - scenario.u_max));
            report.max_flow_violation = std::max(report.max_flow_violation, flow_excess);

            x = model::step(m, x, u_act, scenario.forecast[k]);
            report.max_comfort_violation =
                std::max(report.max_comfort_violation,
                         std::max(x.T_r - scenario.x_max[k], scenario.x_min[k] - x.T_r));
            report.max_above_upper_envelope =
                std::max(report.max_above_upper_envelope, x.T_r - row.x_hi(0));
            report.max_below_lower_envelope =
                std::max(report.max_below_lower_envelope, row.x_lo(0) - x.T_r);
        }
    }
    report.max_comfort_violation = std::max(0.0, report.max_comfort_violation);
    report.max_above_upper_envelope = std::max(0.0, report.max_above_upper_envelope);
    report.max_below_lower_envelope = std::max(0.0, report.max_below_lower_envelope);
    return report;
}

csv::Table ReserveSchedule::to_csv() const {
    csv::Table t;
    t.header = {"k", "u", "r_u", "r_d", "R_u", "R_d", "x_hi", "x_lo"};
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& r = rows[k];
        t.rows.push_back({std::to_string(k), csv::format_double(r.u), csv::format_double(r.r_u),
                          csv::format_double(r.r_d), csv::format_double(r.R_u),
                          csv::format_double(r.R_d), csv::format_double(r.x_hi(0)),
                          csv::format_double(r.x_lo(0))});
    }
    return t;
}

nlohmann::json ReserveSchedule::summary_json() const {
    double revenue_w = 0.0, max_Ru = 0.0, max_Rd = 0.0;
    for (const auto& r : rows) {
        revenue_w += r.R_u + r.R_d;
        max_Ru = std::max(max_Ru, r.R_u);
        max_Rd = std::max(max_Rd, r.R_d);
    }
    return nlohmann::json{{"slots", rows.size()},
                          {"objective", objective},
                          {"comfort_slack_degC_slots", comfort_slack},
                          {"total_capacity_W_slots", revenue_w},
                          {"max_R_u_W", max_Ru},
                          {"max_R_d_W", max_Rd},
                          {"exact_dynamics", exact_dynamics},
                          {"converged", report.converged},
                          {"solver_message", report.message}};
}

nlohmann::json MarketScenario::to_json() const {
    nlohmann::json fc = nlohmann::json::array();
    for (const auto& v : forecast) fc.push_back({v.T_a, v.G, v.I_g});
    return nlohmann::json{{"horizon", horizon},
                          {"energy_price", energy_price},
                          {"reserve_price", reserve_price},
                          {"forecast_TaGIg", fc},
                          {"x_min", x_min},
                          {"x_max", x_max},
                          {"w_lim", w_lim},
                          {"u_min", u_min},
                          {"u_max", u_max},
                          {"block_len", block_len},
                          {"symmetry", to_string(symmetry)},
                          {"comfort_penalty", comfort_penalty}};
}

MarketScenario MarketScenario::from_json(const nlohmann::json& j, const fan::FanCurves& curves) {
    MarketScenario s = defaults(curves, j.value("horizon", 96));
    auto n = static_cast<std::size_t>(s.horizon);

    auto series = [&](const char* key, std::vector<double>& dst) {
        if (!j.contains(key)) return;
        if (j.at(key).is_number()) {
            dst.assign(n, j.at(key).get<double>());
        } else {
            dst = j.at(key).get<std::vector<double>>();
        }
    };
    series("energy_price", s.energy_price);
    series("reserve_price", s.reserve_price);
    series("x_min", s.x_min);
    series("x_max", s.x_max);
    if (j.contains("forecast_TaGIg")) {
        const auto& fc = j.at("forecast_TaGIg");
        s.forecast.clear();
        for (const auto& row : fc)
            s.forecast.push_back({row.at(0).get<double>(), row.at(1).get<double>(),
                                  row.at(2).get<double>()});
    }
    s.w_lim = j.value("w_lim", s.w_lim);
    s.block_len = j.value("block_len", s.block_len);
    s.comfort_penalty = j.value("comfort_penalty", s.comfort_penalty);
    if (j.contains("symmetry")) s.symmetry = symmetry_from_string(j.at("symmetry").get<std::string>());
    if (j.contains("flow_band_speed_pct")) {
        auto band = j.at("flow_band_speed_pct").get<std::array<double, 2>>();
        s.u_min = curves.speed_to_flow(band[0]);
        s.u_max = curves.speed_to_flow(band[1]);
    } else {
        s.u_min = j.value("u_min", s.u_min);
        s.u_max = j.value("u_max", s.u_max);
    }
    s.validate();
    return s;
}

} // namespace hvacreg::scheduler
