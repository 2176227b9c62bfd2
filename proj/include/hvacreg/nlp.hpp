#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <string>

namespace hvacreg::nlp {

// One combined callback evaluates objective and constraints so shared
// work (e.g. a forward simulation feeding both) happens once. When
// want_derivs is set and analytic_derivatives is true, the callback must
// also fill grad, Jg, Jh; otherwise the solver falls back to central
// finite differences of the whole evaluation.
struct Evaluation {
    double f = 0.0;
    Eigen::VectorXd grad; // n
    Eigen::VectorXd g;    // m_ineq, feasible iff g <= 0
    Eigen::MatrixXd Jg;   // m_ineq x n
    Eigen::VectorXd h;    // m_eq, feasible iff h == 0
    Eigen::MatrixXd Jh;   // m_eq x n
};

struct NlpProblem {
    int n = 0;
    int m_ineq = 0;
    int m_eq = 0;
    bool analytic_derivatives = false;
    std::function<void(const Eigen::VectorXd& z, bool want_derivs, Evaluation& out)> eval;
    Eigen::VectorXd lower; // box bounds, -inf allowed
    Eigen::VectorXd upper;

    // Convenience constructor for box-only problems.
    static NlpProblem unconstrained(int n,
                                    std::function<double(const Eigen::VectorXd&)> objective);
};

struct NlpOptions {
    double tol_stationarity = 1e-6; // scaled by max(1, |f|)
    double tol_feasibility = 1e-6;
    int max_outer = 500;
    int max_inner = 500;      // per augmented-Lagrangian subproblem
    long max_total_inner = 100000;
    double initial_penalty = 10.0;
    double penalty_growth = 10.0;
    double max_penalty = 1e12;
    double fd_step = 1e-7; // finite-difference step when no analytic derivatives
    int lbfgs_memory = 10;
};

struct SolveReport {
    Eigen::VectorXd z;
    double objective = 0.0;
    double stationarity = std::numeric_limits<double>::infinity();
    double max_violation = 0.0; // reported even when not converged
    int outer_iterations = 0;
    long inner_iterations = 0;
    long evaluations = 0;
    bool converged = false;
    std::string message;
    Eigen::VectorXd multipliers_ineq;
    Eigen::VectorXd multipliers_eq;
};

// Augmented-Lagrangian outer loop around a projected quasi-Newton (L-BFGS)
// inner minimizer. Deterministic: identical inputs give bit-identical
// reports. Iteration caps produce a non-converged report, never a throw.
SolveReport solve(const NlpProblem& problem, const Eigen::VectorXd& z0,
                  const NlpOptions& opts = {});

// Max relative error between the problem's analytic derivatives and
// central finite differences with step h_fd, over the objective gradient
// and every constraint Jacobian entry. z should be interior to the box.
double check_gradients(const NlpProblem& problem, const Eigen::VectorXd& z, double h_fd);

} // namespace hvacreg::nlp
