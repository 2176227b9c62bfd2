#include <doctest.h>

#include <cmath>

#include "hvacreg/model.hpp"
#include "hvacreg/scheduler.hpp"
#include "hvacreg/rng.hpp"

#include <nlohmann/json.hpp>

using namespace hvacreg;
using namespace hvacreg::scheduler;
using Eigen::VectorXd;

namespace {

MarketScenario small_scenario(const fan::FanCurves& curves, int horizon = 12,
                              SymmetryMode mode = SymmetryMode::thermal_symmetric,
                              int block_len = 1) {
    auto sc = MarketScenario::defaults(curves, horizon);
    sc.symmetry = mode;
    sc.block_len = block_len;
    // generous band keeps the soft comfort penalty inactive unless a test
    // tightens it on purpose
    for (int k = 0; k < horizon; ++k) {
        sc.x_min[k] = 15.0;
        sc.x_max[k] = 28.0;
    }
    return sc;
}

const model::BuildingState kX0{22.0, 22.0};

} // namespace

TEST_CASE("analytic derivatives match finite differences") {
    auto m = model::recent_calibration();
    auto curves = fan::FanCurves::reference();
    Rng rng(17);
    for (bool exact : {false, true}) {
        for (auto mode : {SymmetryMode::none, SymmetryMode::electric_symmetric,
                          SymmetryMode::thermal_symmetric}) {
            auto sc = small_scenario(curves, 6, mode);
            sc.w_lim = 0.4;
            auto problem = build_problem(m, curves, sc, kX0, exact);
            // random interior points
            for (int trial = 0; trial < 3; ++trial) {
                VectorXd z(problem.n);
                for (int i = 0; i < problem.n; ++i) {
                    double lo = problem.lower(i), hi = problem.upper(i);
                    z(i) = lo + (0.25 + 0.5 * rng.uniform()) * (hi - lo);
                }
                CHECK(nlp::check_gradients(problem, z, 1e-6) <= 1e-5);
            }
        }
    }
}

TEST_CASE("zero reserve price schedules zero reserves") {
    auto m = model::recent_calibration();
    auto curves = fan::FanCurves::reference();
    auto sc = small_scenario(curves, 12);
    std::fill(sc.reserve_price.begin(), sc.reserve_price.end(), 0.0);

    auto sched = schedule_reserves(m, curves, sc, kX0);
    CHECK(sched.report.converged);
    for (const auto& row : sched.rows) {
        CHECK(row.R_u <= 1e-3); // W
        CHECK(row.R_d <= 1e-3);
    }

    // same problem with the reserve variables pinned to zero
    auto pinned = build_problem(m, curves, sc, kX0, false);
    pinned.upper.segment(12, 12).setZero(); // thermal layout: r vars after u vars
    auto rep = nlp::solve(pinned, cold_start(sc));
    CHECK(rep.converged);
    CHECK(sched.objective == doctest::Approx(rep.objective).epsilon(1e-6));
}

TEST_CASE("w_lim = 0 collapses the envelopes in thermal-symmetric mode") {
    auto m = model::recent_calibration();
    auto curves = fan::FanCurves::reference();
    auto sc = small_scenario(curves, 8);
    sc.w_lim = 0.0;
    auto sched = schedule_reserves(m, curves, sc, kX0);
    for (const auto& row : sched.rows) {
        CHECK(row.x_hi(0) == doctest::Approx(row.x_lo(0)).epsilon(1e-12));
        CHECK(row.x_hi(1) == doctest::Approx(row.x_lo(1)).epsilon(1e-12));
    }
}

TEST_CASE("thermal symmetry skews electric capacities downward-heavy") {
    auto m = model::recent_calibration();
    auto curves = fan::FanCurves::reference();
    auto sc = small_scenario(curves, 12);
    auto sched = schedule_reserves(m, curves, sc, kX0);
    CHECK(sched.report.converged);
    bool any_reserve = false;
    for (const auto& row : sched.rows) {
        CHECK(row.r_u == doctest::Approx(row.r_d).epsilon(1e-9));
        if (row.r_u > 1e-4) {
            any_reserve = true;
            CHECK(row.R_d >= row.R_u); // convexity of the fan curve
        }
    }
    CHECK(any_reserve); // the default prices make reserves worth offering
}

TEST_CASE("envelope ordering holds in any returned schedule") {
    auto m = model::recent_calibration();
    auto curves = fan::FanCurves::reference();
    for (auto mode : {SymmetryMode::none, SymmetryMode::thermal_symmetric}) {
        auto sc = small_scenario(curves, 12, mode);
        auto sched = schedule_reserves(m, curves, sc, kX0);
        for (const auto& row : sched.rows) CHECK(row.x_lo(0) <= row.x_hi(0) + 1e-12);
    }
}

TEST_CASE("block mode keeps capacities exactly constant per block") {
    auto m = model::recent_calibration();
    auto curves = fan::FanCurves::reference();
    for (auto mode : {SymmetryMode::none, SymmetryMode::electric_symmetric,
                      SymmetryMode::thermal_symmetric}) {
        auto sc = small_scenario(curves, 12, mode, 4);
        auto sched = schedule_reserves(m, curves, sc, kX0);
        for (int blk = 0; blk < 3; ++blk) {
            for (int j = 1; j < 4; ++j) {
                int k = 4 * blk + j;
                CHECK(sched.rows[k].R_u == sched.rows[4 * blk].R_u);
                CHECK(sched.rows[k].R_d == sched.rows[4 * blk].R_d);
            }
        }
    }
}

TEST_CASE("exact and linearized formulations coincide at w_lim = 1") {
    auto m = model::recent_calibration();
    auto curves = fan::FanCurves::reference();
    auto sc = small_scenario(curves, 12);
    sc.w_lim = 1.0;
    auto approx = schedule_reserves(m, curves, sc, kX0);
    auto exact = schedule_reserves_exact(m, curves, sc, kX0);
    REQUIRE(approx.report.converged);
    REQUIRE(exact.report.converged);
    CHECK(approx.objective ==
          doctest::Approx(exact.objective).epsilon(1e-4)); // relative
    for (int k = 0; k < 12; ++k) {
        CHECK(std::abs(approx.rows[k].x_hi(0) - exact.rows[k].x_hi(0)) <= 1e-3);
        CHECK(std::abs(approx.rows[k].x_lo(0) - exact.rows[k].x_lo(0)) <= 1e-3);
    }
}

TEST_CASE("linearization overestimates both envelopes for w_lim < 1") {
    auto m = model::recent_calibration();
    auto curves = fan::FanCurves::reference();
    auto sc = small_scenario(curves, 12);
    sc.w_lim = 0.25;
    auto approx = schedule_reserves(m, curves, sc, kX0);
    auto exact = schedule_reserves_exact(m, curves, sc, kX0);
    REQUIRE(approx.report.converged);
    REQUIRE(exact.report.converged);
    for (int k = 0; k < 12; ++k) {
        CHECK(approx.rows[k].x_hi(0) >= exact.rows[k].x_hi(0) - 1e-4);
        CHECK(approx.rows[k].x_lo(0) >= exact.rows[k].x_lo(0) - 1e-4);
    }
}

TEST_CASE("single-step instance matches an exhaustive grid search") {
    auto m = model::recent_calibration();
    auto curves = fan::FanCurves::reference();
    Rng rng(23);
    for (int instance = 0; instance < 5; ++instance) {
        auto sc = small_scenario(curves, 1, SymmetryMode::none);
        sc.energy_price[0] = rng.uniform(1e-5, 6e-5);
        sc.reserve_price[0] = rng.uniform(1e-5, 9e-5);
        sc.x_max[0] = rng.uniform(22.6, 26.0);
        sc.x_min[0] = rng.uniform(15.0, 20.0);
        sc.w_lim = 0.25;
        model::BuildingState x0{rng.uniform(21.0, 23.0), rng.uniform(21.0, 23.0)};

        auto sched = schedule_reserves(m, curves, sc, x0);
        REQUIRE(sched.report.converged);

        // Exhaustive oracle at 1e-3 kg/s. For fixed u the two reserve
        // sides decouple, so the triple scan is two nested scans.
        const double grid = 1e-3;
        const double w = sc.w_lim, pen = sc.comfort_penalty;
        auto hinge = [](double v) {
            if (v <= 0.0) return 0.0;
            if (v < 1e-3) return v * v / 2e-3;
            return v - 5e-4;
        };
        double best = 1e100;
        double best_u = 0, best_ru = 0, best_rd = 0;
        for (double u = sc.u_min; u <= sc.u_max + 1e-12; u += grid) {
            double fu = curves.f_raw(u);
            // up/down parts independently minimized
            double best_d = 1e100, best_rd_loc = 0;
            for (double r_d = 0.0; r_d <= u - sc.u_min + 1e-12; r_d += grid) {
                double R_u = fu - curves.f_raw(u - r_d);
                double phi = u - w * r_d;
                double x1 = m.A.row(0) * x0.vec() + (m.B_u(0) + m.B_xu(0, 0) * x0.T_r) * phi +
                            m.B_v.row(0) * sc.forecast[0].vec();
                double val = -sc.reserve_price[0] * R_u + pen * hinge(x1 - sc.x_max[0]);
                if (val < best_d) {
                    best_d = val;
                    best_rd_loc = r_d;
                }
            }
            double best_up = 1e100, best_ru_loc = 0;
            for (double r_u = 0.0; r_u <= sc.u_max - u + 1e-12; r_u += grid) {
                double R_d = curves.f_raw(u + r_u) - fu;
                double phi = u + w * r_u;
                double x1 = m.A.row(0) * x0.vec() + (m.B_u(0) + m.B_xu(0, 0) * x0.T_r) * phi +
                            m.B_v.row(0) * sc.forecast[0].vec();
                double val = -sc.reserve_price[0] * R_d + pen * hinge(sc.x_min[0] - x1);
                if (val < best_up) {
                    best_up = val;
                    best_ru_loc = r_u;
                }
            }
            double val = sc.energy_price[0] * fu + best_d + best_up;
            if (val < best) {
                best = val;
                best_u = u;
                best_rd = best_rd_loc;
                best_ru = best_ru_loc;
            }
        }
        // tolerance: the objective variation across one grid cell around the optimum
        double tol = 2.0 * (sc.energy_price[0] * (curves.f_raw(best_u + grid) - curves.f_raw(best_u)) +
                            sc.reserve_price[0] *
                                (curves.f_raw(best_u + grid) - curves.f_raw(best_u - grid))) +
                     1e-9;
        CHECK(sched.objective <= best + tol);
        CHECK(best <= sched.objective + tol);
        CHECK(sched.rows[0].u == doctest::Approx(best_u).epsilon(0.05));
        (void)best_ru;
        (void)best_rd;
    }
}

TEST_CASE("verification: clean schedule, extremes stay within envelopes") {
    auto m = model::recent_calibration();
    auto curves = fan::FanCurves::reference();
    auto sc = small_scenario(curves, 12);
    sc.w_lim = 0.25;
    auto sched = schedule_reserves_exact(m, curves, sc, kX0);
    REQUIRE(sched.report.converged);

    auto rob = verify_schedule(m, curves, sched, sc, kX0, 200, 77);
    CHECK(rob.draws == 202);
    CHECK(rob.max_above_upper_envelope <= 0.05);
    CHECK(rob.max_below_lower_envelope <= 0.05);
    CHECK(rob.max_flow_violation <= 1e-9);
}

TEST_CASE("verification: zero-reserve schedule inside the band has no violations") {
    auto m = model::recent_calibration();
    auto curves = fan::FanCurves::reference();
    auto sc = small_scenario(curves, 12);
    std::fill(sc.reserve_price.begin(), sc.reserve_price.end(), 0.0);
    auto sched = schedule_reserves(m, curves, sc, kX0);
    auto rob = verify_schedule(m, curves, sched, sc, kX0, 50, 5);
    CHECK(rob.max_comfort_violation == 0.0);
    CHECK(rob.max_flow_violation == 0.0);
}

TEST_CASE("verification flags a corrupted schedule") {
    auto m = model::recent_calibration();
    auto curves = fan::FanCurves::reference();
    auto sc = small_scenario(curves, 12);
    auto sched = schedule_reserves_exact(m, curves, sc, kX0);
    for (auto& row : sched.rows) row.R_d = 2.5 * row.R_d + 500.0; // lie about capacity
    auto rob = verify_schedule(m, curves, sched, sc, kX0, 100, 6);
    CHECK((rob.max_flow_violation > 0.0 || rob.max_below_lower_envelope > 0.05));
}

TEST_CASE("scheduling is deterministic") {
    auto m = model::recent_calibration();
    auto curves = fan::FanCurves::reference();
    auto sc = small_scenario(curves, 12);
    auto a = schedule_reserves(m, curves, sc, kX0);
    auto b = schedule_reserves(m, curves, sc, kX0);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        CHECK(a.rows[k].u == b.rows[k].u);
        CHECK(a.rows[k].R_u == b.rows[k].R_u);
    }
    CHECK(a.objective == b.objective);
}

TEST_CASE("warm start reproduces the cold-start optimum") {
    auto m = model::recent_calibration();
    auto curves = fan::FanCurves::reference();
    auto sc = small_scenario(curves, 12);
    auto cold = schedule_reserves(m, curves, sc, kX0);
    auto warm = schedule_reserves(m, curves, sc, kX0, &cold);
    CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-5));
}

TEST_CASE("cooling-mode assumption is enforced") {
    auto m = model::recent_calibration(); // T_s = 14
    auto curves = fan::FanCurves::reference();
    auto sc = small_scenario(curves, 4);
    sc.x_min[2] = 12.0; // below the supply air temperature
    sc.x_max[2] = 13.0;
    CHECK_THROWS_AS(schedule_reserves(m, curves, sc, kX0), std::invalid_argument);
}

TEST_CASE("scenario json round-trip") {
    auto curves = fan::FanCurves::reference();
    auto sc = small_scenario(curves, 12, SymmetryMode::electric_symmetric, 4);
    sc.w_lim = 0.33;
    auto j = sc.to_json();
    auto back = MarketScenario::from_json(j, curves);
    CHECK(back.horizon == sc.horizon);
    CHECK(back.w_lim == sc.w_lim);
    CHECK(back.symmetry == sc.symmetry);
    CHECK(back.block_len == sc.block_len);
    CHECK(back.energy_price == sc.energy_price);
    CHECK(back.x_min == sc.x_min);
    CHECK(back.forecast[3].T_a == sc.forecast[3].T_a);
}

TEST_CASE("schedule csv export shape") {
    auto m = model::recent_calibration();
    auto curves = fan::FanCurves::reference();
    auto sc = small_scenario(curves, 4);
    auto sched = schedule_reserves(m, curves, sc, kX0);
    auto t = sched.to_csv();
    CHECK(t.header == std::vector<std::string>{"k", "u", "r_u", "r_d", "R_u", "R_d", "x_hi", "x_lo"});
    CHECK(t.rows.size() == 4);
}
