#include <doctest.h>

#include <cmath>

#include "hvacreg/model.hpp"
#include "hvacreg/rng.hpp"

#include <nlohmann/json.hpp>

using namespace hvacreg;
using namespace hvacreg::model;

namespace {

ContinuousBuildingParams sample_params(Rng& rng) {
    ContinuousBuildingParams p;
    p.C_r = rng.uniform(0.5, 5.0);
    p.C_m = rng.uniform(2.0, 50.0);
    p.R_ra = rng.uniform(0.5, 10.0);
    p.R_rm = rng.uniform(0.2, 5.0);
    p.gamma = rng.uniform(0.0, 0.1);
    p.c_p = 1.005;
    p.T_s = 14.0;
    return p;
}

} // namespace

TEST_CASE("discretize: zero step gives identity dynamics") {
    ContinuousBuildingParams p{1.0, 10.0, 2.0, 1.0, 0.05, 1.005, 14.0};
    auto m = discretize(p, 0.0);
    CHECK(m.A.isApprox(Eigen::Matrix2d::Identity()));
    CHECK(m.B_u.isZero());
    CHECK(m.B_xu.isZero());
    CHECK(m.B_v.isZero());
}

TEST_CASE("discretize: doubling the step doubles A - I entrywise") {
    ContinuousBuildingParams p{1.0, 10.0, 2.0, 1.0, 0.05, 1.005, 14.0};
    auto m1 = discretize(p, 300.0);
    auto m2 = discretize(p, 600.0);
    Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
    CHECK((m2.A - I).isApprox(2.0 * (m1.A - I), 1e-12));
    CHECK(m2.B_u.isApprox(2.0 * m1.B_u, 1e-12));
}

TEST_CASE("discretize: small steps stay within the unit circle") {
    Rng rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        auto p = sample_params(rng);
        // shortest RC time constant bounds the stable Euler step
        double tau = 1.0 / (1.0 / (p.C_r * p.R_ra) + 1.0 / (p.C_r * p.R_rm) +
                            1.0 / (p.C_m * p.R_rm));
        auto m = discretize(p, 0.5 * tau);
        CHECK(spectral_radius(m.A) <= 1.0 + 1e-12);
    }
}

TEST_CASE("discretize: sign pattern survives any positive step") {
    Rng rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        auto p = sample_params(rng);
        auto m = discretize(p, rng.uniform(1.0, 3600.0));
        CHECK(m.sign_pattern_ok());
        CHECK(m.B_u(1) == 0.0);
        CHECK(m.B_v.row(1).isZero());
    }
}

TEST_CASE("discretize: rejects non-positive capacitance or resistance") {
    ContinuousBuildingParams p{1.0, 10.0, 2.0, 1.0, 0.05, 1.005, 14.0};
    p.C_r = 0.0;
    CHECK_THROWS_AS(discretize(p, 900.0), std::invalid_argument);
    p.C_r = 1.0;
    p.R_rm = -1.0;
    CHECK_THROWS_AS(discretize(p, 900.0), std::invalid_argument);
}

TEST_CASE("step: reference update") {
    auto m = recent_calibration();
    auto x1 = step(m, {24.0, 24.0}, 0.5, {20.0, 0.0, 0.0});
    CHECK(x1.T_r == doctest::Approx(20.064).epsilon(1e-12));
    CHECK(x1.T_m == doctest::Approx(24.4584).epsilon(1e-12));
}

TEST_CASE("step: origin is a fixed point") {
    auto m = recent_calibration();
    auto x1 = step(m, {0.0, 0.0}, 0.0, {0.0, 0.0, 0.0});
    CHECK(x1.T_r == 0.0);
    CHECK(x1.T_m == 0.0);
}

TEST_CASE("step: free response decays to zero") {
    auto m = recent_calibration();
    CHECK(spectral_radius(m.A) == doctest::Approx(0.99280481).epsilon(1e-6));
    BuildingState x{24.0, 24.0};
    Disturbance v{};
    double prev = 1e9;
    for (int k = 0; k < 4000; ++k) {
        x = step(m, x, 0.0, v);
        double norm = std::abs(x.T_r) + std::abs(x.T_m);
        CHECK(norm <= prev + 1e-12);
        prev = norm;
    }
    CHECK(std::abs(x.T_r) < 1e-6);
    CHECK(std::abs(x.T_m) < 1e-6);
}

TEST_CASE("step: cooling is monotone in flow under the supply-air assumption") {
    auto m = recent_calibration();
    Rng rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        BuildingState x{rng.uniform(14.0, 30.0), rng.uniform(10.0, 35.0)}; // T_r >= T_s
        Disturbance v{rng.uniform(-5.0, 35.0), rng.uniform(0.0, 800.0), rng.uniform(0.0, 2000.0)};
        double u1 = rng.uniform(0.0, 1.0);
        double u2 = u1 + rng.uniform(0.0, 0.5);
        CHECK(step(m, x, u2, v).T_r <= step(m, x, u1, v).T_r + 1e-12);
    }
}

TEST_CASE("simulate: empty input gives just the initial state") {
    auto m = recent_calibration();
    auto traj = simulate(m, {21.0, 22.0}, {}, {});
    REQUIRE(traj.size() == 1);
    CHECK(traj[0].T_r == 21.0);
}

TEST_CASE("simulate: one step reproduces step()") {
    auto m = recent_calibration();
    auto traj = simulate(m, {24.0, 24.0}, {0.5}, {{20.0, 0.0, 0.0}});
    auto direct = step(m, {24.0, 24.0}, 0.5, {20.0, 0.0, 0.0});
    REQUIRE(traj.size() == 2);
    CHECK(traj[1].T_r == direct.T_r);
    CHECK(traj[1].T_m == direct.T_m);
}

TEST_CASE("simulate: constant input matches the closed-form affine recursion") {
    auto m = recent_calibration();
    const double u = 0.5;
    const Disturbance v{20.0, 0.0, 0.0};
    const int n = 96;
    auto traj = simulate(m, {24.0, 24.0}, std::vector<double>(n, u),
                         std::vector<Disturbance>(n, v));

    // Independent route: x_k = M^k x0 + (I - M)^-1 (I - M^k) c with
    // M = A + B_xu u, M^k formed by repeated squaring.
    Eigen::Matrix2d M = m.A + m.B_xu * u;
    Eigen::Vector2d c = m.B_u * u + m.B_v * v.vec();
    Eigen::Matrix2d Mk = Eigen::Matrix2d::Identity();
    {
        int e = n;
        Eigen::Matrix2d base = M;
        while (e > 0) {
            if (e & 1) Mk = Mk * base;
            base = base * base;
            e >>= 1;
        }
    }
    Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
    Eigen::Vector2d xk = Mk * Eigen::Vector2d(24.0, 24.0) +
                         (I - M).partialPivLu().solve((I - Mk) * c);
    CHECK(traj[n].T_r == doctest::Approx(xk(0)).epsilon(1e-9));
    CHECK(traj[n].T_m == doctest::Approx(xk(1)).epsilon(1e-9));
    // frozen cross-check of the same trajectory point
    CHECK(traj[n].T_r == doctest::Approx(15.10208749).epsilon(1e-7));
    CHECK(traj[n].T_m == doctest::Approx(18.66835089).epsilon(1e-7));
}

TEST_CASE("simulate: equals k-fold composition of step bit-for-bit") {
    auto m = recent_calibration();
    Rng rng(11);
    std::vector<double> u_seq;
    std::vector<Disturbance> v_seq;
    for (int k = 0; k < 50; ++k) {
        u_seq.push_back(rng.uniform(0.0, 1.2));
        v_seq.push_back({rng.uniform(0.0, 35.0), rng.uniform(0.0, 900.0), rng.uniform(0.0, 2000.0)});
    }
    auto traj = simulate(m, {22.0, 23.0}, u_seq, v_seq);
    BuildingState x{22.0, 23.0};
    for (int k = 0; k < 50; ++k) {
        x = step(m, x, u_seq[k], v_seq[k]);
        CHECK(traj[k + 1].T_r == x.T_r); // exact, same evaluation order
        CHECK(traj[k + 1].T_m == x.T_m);
    }
}

TEST_CASE("simulate: length mismatch is an error") {
    auto m = recent_calibration();
    CHECK_THROWS_AS(simulate(m, {21.0, 21.0}, {0.5}, {}), std::invalid_argument);
}

TEST_CASE("closed_loop_stable") {
    auto m = recent_calibration();
    SUBCASE("reference model at u = 0.5") {
        CHECK(closed_loop_stable(m, 0.5));
        CHECK(spectral_radius(m.A + m.B_xu * 0.5) == doctest::Approx(0.96497007).epsilon(1e-6));
    }
    SUBCASE("identity boundary counts as stable") {
        DiscreteBuildingModel id = DiscreteBuildingModel::from_entries(1, 0, 0, 1, 0, 0, 0, 0, 14);
        CHECK(closed_loop_stable(id, 0.7));
    }
    SUBCASE("2I is unstable") {
        DiscreteBuildingModel bad;
        bad.A = 2.0 * Eigen::Matrix2d::Identity();
        CHECK_FALSE(closed_loop_stable(bad, 0.0));
    }
}

TEST_CASE("model json round-trip") {
    auto m = recent_calibration();
    auto j = m.to_json();
    auto back = DiscreteBuildingModel::from_json(j);
    CHECK(back.A == m.A);
    CHECK(back.B_u == m.B_u);
    CHECK(back.B_xu == m.B_xu);
    CHECK(back.B_v == m.B_v);
    CHECK(back.T_s == m.T_s);
    CHECK(back.delta_t == m.delta_t);
}

TEST_CASE("validate rejects broken sign patterns") {
    auto m = recent_calibration();
    CHECK_NOTHROW(m.validate());
    auto bad = m;
    bad.A(0, 1) = -0.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
