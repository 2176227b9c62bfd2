#include <doctest.h>

#include <cmath>

#include "hvacreg/nlp.hpp"

using namespace hvacreg::nlp;
using Eigen::VectorXd;

TEST_CASE("unconstrained quadratic") {
    auto p = NlpProblem::unconstrained(1, [](const VectorXd& z) { return (z(0) - 3.0) * (z(0) - 3.0); });
    auto rep = solve(p, VectorXd::Zero(1));
    CHECK(rep.converged);
    CHECK(rep.z(0) == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(rep.max_violation == 0.0);
}

TEST_CASE("active box bound") {
    NlpProblem p;
    p.n = 1;
    p.lower = VectorXd::Constant(1, 1.0);
    p.upper = VectorXd::Constant(1, 10.0);
    p.eval = [](const VectorXd& z, bool, Evaluation& out) { out.f = z(0); };
    auto rep = solve(p, VectorXd::Constant(1, 5.0));
    CHECK(rep.converged);
    CHECK(rep.z(0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("inequality constraint z >= 1 via g(z) <= 0") {
    NlpProblem p;
    p.n = 1;
    p.m_ineq = 1;
    p.lower = VectorXd::Constant(1, -100.0);
    p.upper = VectorXd::Constant(1, 100.0);
    p.eval = [](const VectorXd& z, bool, Evaluation& out) {
        out.f = z(0);
        out.g.resize(1);
        out.g(0) = 1.0 - z(0);
    };
    auto rep = solve(p, VectorXd::Constant(1, 5.0));
    CHECK(rep.converged);
    CHECK(rep.z(0) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(rep.max_violation <= 1e-6);
}

TEST_CASE("equality constraint x + y = 1") {
    NlpProblem p;
    p.n = 2;
    p.m_eq = 1;
    p.lower = VectorXd::Constant(2, -100.0);
    p.upper = VectorXd::Constant(2, 100.0);
    p.eval = [](const VectorXd& z, bool, Evaluation& out) {
        out.f = z.squaredNorm();
        out.h.resize(1);
        out.h(0) = z(0) + z(1) - 1.0;
    };
    auto rep = solve(p, VectorXd::Zero(2));
    CHECK(rep.converged);
    CHECK(rep.z(0) == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(rep.z(1) == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("rosenbrock with analytic gradient") {
    NlpProblem p;
    p.n = 2;
    p.analytic_derivatives = true;
    p.lower = VectorXd::Constant(2, -10.0);
    p.upper = VectorXd::Constant(2, 10.0);
    p.eval = [](const VectorXd& z, bool want, Evaluation& out) {
        double a = 1.0 - z(0);
        double b = z(1) - z(0) * z(0);
        out.f = a * a + 100.0 * b * b;
        if (want) {
            out.grad.resize(2);
            out.grad(0) = -2.0 * a - 400.0 * z(0) * b;
            out.grad(1) = 200.0 * b;
        }
    };
    NlpOptions opts;
    opts.max_inner = 2000;
    auto rep = solve(p, VectorXd::Constant(2, -1.5), opts);
    CHECK(rep.converged);
    CHECK(rep.z(0) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(rep.z(1) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("solver is deterministic") {
    auto make = [] {
        NlpProblem p;
        p.n = 3;
        p.m_ineq = 1;
        p.lower = VectorXd::Constant(3, -5.0);
        p.upper = VectorXd::Constant(3, 5.0);
        p.eval = [](const VectorXd& z, bool, Evaluation& out) {
            out.f = (z - VectorXd::Constant(3, 1.7)).squaredNorm() + 0.3 * z(0) * z(1);
            out.g.resize(1);
            out.g(0) = z.sum() - 2.0;
        };
        return p;
    };
    auto r1 = solve(make(), VectorXd::Zero(3));
    auto r2 = solve(make(), VectorXd::Zero(3));
    CHECK(r1.z == r2.z); // bit-identical
    CHECK(r1.objective == r2.objective);
    CHECK(r1.inner_iterations == r2.inner_iterations);
}

TEST_CASE("iteration cap yields a non-converged report, not a crash") {
    NlpProblem p;
    p.n = 1;
    p.m_eq = 2;
    p.lower = VectorXd::Constant(1, -10.0);
    p.upper = VectorXd::Constant(1, 10.0);
    // inconsistent equalities: z = 0 and z = 1
    p.eval = [](const VectorXd& z, bool, Evaluation& out) {
        out.f = 0.0;
        out.h.resize(2);
        out.h(0) = z(0);
        out.h(1) = z(0) - 1.0;
    };
    NlpOptions opts;
    opts.max_outer = 20;
    auto rep = solve(p, VectorXd::Zero(1), opts);
    CHECK_FALSE(rep.converged);
    CHECK(rep.max_violation >= 0.49); // best compromise splits the difference
    CHECK(!rep.message.empty());
}

TEST_CASE("feasible reports never overstate feasibility") {
    NlpProblem p;
    p.n = 2;
    p.m_ineq = 2;
    p.lower = VectorXd::Constant(2, -10.0);
    p.upper = VectorXd::Constant(2, 10.0);
    p.eval = [](const VectorXd& z, bool, Evaluation& out) {
        out.f = z(0) + 2.0 * z(1);
        out.g.resize(2);
        out.g(0) = 1.0 - z(0) - z(1);
        out.g(1) = z(0) - z(1) - 3.0;
    };
    auto rep = solve(p, VectorXd::Zero(2));
    if (rep.converged) CHECK(rep.max_violation <= 1e-6);
}

TEST_CASE("check_gradients: correct quadratic") {
    NlpProblem p;
    p.n = 2;
    p.analytic_derivatives = true;
    p.lower = VectorXd::Constant(2, -10.0);
    p.upper = VectorXd::Constant(2, 10.0);
    p.eval = [](const VectorXd& z, bool want, Evaluation& out) {
        out.f = z.squaredNorm();
        if (want) out.grad = 2.0 * z;
    };
    VectorXd z(2);
    z << 0.3, -1.2;
    CHECK(check_gradients(p, z, 1e-5) <= 1e-7);
}

TEST_CASE("check_gradients: deliberately wrong gradient is flagged") {
    NlpProblem p;
    p.n = 1;
    p.analytic_derivatives = true;
    p.lower = VectorXd::Constant(1, -10.0);
    p.upper = VectorXd::Constant(1, 10.0);
    p.eval = [](const VectorXd& z, bool want, Evaluation& out) {
        out.f = z(0) * z(0);
        if (want) {
            out.grad.resize(1);
            out.grad(0) = 2.0 * z(0) + 0.5; // wrong on purpose
        }
    };
    CHECK(check_gradients(p, VectorXd::Constant(1, 1.0), 1e-5) >= 1e-2);
}

TEST_CASE("check_gradients covers constraint jacobians") {
    NlpProblem p;
    p.n = 2;
    p.m_ineq = 1;
    p.m_eq = 1;
    p.analytic_derivatives = true;
    p.lower = VectorXd::Constant(2, -10.0);
    p.upper = VectorXd::Constant(2, 10.0);
    p.eval = [](const VectorXd& z, bool want, Evaluation& out) {
        out.f = z(0) * z(1);
        out.g.resize(1);
        out.g(0) = z(0) * z(0) - z(1);
        out.h.resize(1);
        out.h(0) = std::sin(z(0)) + z(1);
        if (want) {
            out.grad.resize(2);
            out.grad << z(1), z(0);
            out.Jg.resize(1, 2);
            out.Jg << 2.0 * z(0), -1.0;
            out.Jh.resize(1, 2);
            out.Jh << std::cos(z(0)), 1.0;
        }
    };
    VectorXd z(2);
    z << 0.7, 0.4;
    CHECK(check_gradients(p, z, 1e-5) <= 1e-7);
}
