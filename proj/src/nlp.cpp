#include "hvacreg/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace hvacreg::nlp {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd project(const VectorXd& z, const VectorXd& lo, const VectorXd& hi) {
    return z.cwiseMax(lo).cwiseMin(hi);
}

struct AlParams {
    VectorXd lambda; // inequality multipliers, >= 0
    VectorXd nu;     // equality multipliers
    double mu = 10.0;
};

// Shared evaluation context: counts problem evaluations and provides the
// augmented Lagrangian value/gradient with either analytic or
// finite-difference derivatives.
struct AlContext {
    const NlpProblem& p;
    const NlpOptions& opts;
    long evals = 0;

    void raw_eval(const VectorXd& z, bool want_derivs, Evaluation& out) {
        p.eval(z, want_derivs && p.analytic_derivatives, out);
        ++evals;
    }

    double al_value(const Evaluation& e, const AlParams& al) const {
        double val = e.f;
        for (int i = 0; i < p.m_ineq; ++i) {
            double t = std::max(0.0, al.lambda(i) + al.mu * e.g(i));
            val += (t * t - al.lambda(i) * al.lambda(i)) / (2.0 * al.mu);
        }
        for (int j = 0; j < p.m_eq; ++j)
            val += al.nu(j) * e.h(j) + 0.5 * al.mu * e.h(j) * e.h(j);
        return val;
    }

    double value(const VectorXd& z, const AlParams& al) {
        Evaluation e;
        raw_eval(z, false, e);
        return al_value(e, al);
    }

    // Value and gradient of the augmented Lagrangian.
    double value_grad(const VectorXd& z, const AlParams& al, VectorXd& grad) {
        if (p.analytic_derivatives) {
            Evaluation e;
            raw_eval(z, true, e);
            grad = e.grad;
            for (int i = 0; i < p.m_ineq; ++i) {
                double t = std::max(0.0, al.lambda(i) + al.mu * e.g(i));
                if (t > 0.0) grad += t * e.Jg.row(i).transpose();
            }
            for (int j = 0; j < p.m_eq; ++j)
                grad += (al.nu(j) + al.mu * e.h(j)) * e.Jh.row(j).transpose();
            return al_value(e, al);
        }
        // Central differences on the scalar augmented Lagrangian.
        double val = value(z, al);
        grad.resize(p.n);
        VectorXd zp = z;
        for (int i = 0; i < p.n; ++i) {
            double step = opts.fd_step * std::max(1.0, std::abs(z(i)));
            zp(i) = z(i) + step;
            double fp = value(zp, al);
            zp(i) = z(i) - step;
            double fm = value(zp, al);
            zp(i) = z(i);
            grad(i) = (fp - fm) / (2.0 * step);
        }
        return val;
    }
};

struct InnerResult {
    VectorXd z;
    double value = 0.0;
    VectorXd grad;
    double pg_norm = 0.0;
    int iterations = 0;
    bool hit_cap = false;
};

double projected_gradient_norm(const VectorXd& z, const VectorXd& grad, const VectorXd& lo,
                               const VectorXd& hi) {
    return (z - project(z - grad, lo, hi)).lpNorm<Eigen::Infinity>();
}

// Projected L-BFGS with Armijo backtracking along the projected path.
// Falls back to projected steepest descent when the quasi-Newton
// direction is not usable.
InnerResult minimize_box(AlContext& ctx, const AlParams& al, const VectorXd& z0, double tol,
                         int max_iter) {
    const VectorXd& lo = ctx.p.lower;
    const VectorXd& hi = ctx.p.upper;
    const int mem = ctx.opts.lbfgs_memory;

    InnerResult res;
    res.z = project(z0, lo, hi);
    res.value = ctx.value_grad(res.z, al, res.grad);

    std::deque<std::pair<VectorXd, VectorXd>> pairs; // (s, y)
    double bb_step = 1.0;

    for (int it = 0; it < max_iter; ++it) {
        res.pg_norm = projected_gradient_norm(res.z, res.grad, lo, hi);
        res.iterations = it;
        if (res.pg_norm <= tol) return res;

        // Two-loop recursion.
        VectorXd d = -res.grad;
        if (!pairs.empty()) {
            std::vector<double> alpha_c(pairs.size());
            std::vector<double> rho(pairs.size());
            for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
                const auto& [s, y] = pairs[i];
                rho[i] = 1.0 / s.dot(y);
                alpha_c[i] = rho[i] * s.dot(d);
                d -= alpha_c[i] * y;
            }
            const auto& [s_last, y_last] = pairs.back();
            d *= s_last.dot(y_last) / y_last.squaredNorm();
            for (std::size_t i = 0; i < pairs.size(); ++i) {
                const auto& [s, y] = pairs[i];
                double beta = rho[i] * y.dot(d);
                d += (alpha_c[i] - beta) * s;
            }
        } else {
            d *= bb_step;
        }

        bool descent = d.dot(res.grad) < 0.0;
        if (!descent) {
            pairs.clear();
            d = -bb_step * res.grad;
        }

        // Backtracking along the projected arc.
        double alpha = 1.0;
        bool accepted = false;
        VectorXd z_new;
        double f_new = 0.0;
        for (int ls = 0; ls < 60; ++ls) {
            z_new = project(res.z + alpha * d, lo, hi);
            VectorXd dz = z_new - res.z;
            double gd = res.grad.dot(dz);
            if (dz.lpNorm<Eigen::Infinity>() == 0.0) break;
            f_new = ctx.value(z_new, al);
            if (gd < 0.0 && f_new <= res.value + 1e-4 * gd) {
                accepted = true;
                break;
            }
            // tolerate flat steps once the step is already tiny
            if (f_new < res.value) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            if (!pairs.empty()) {
                // Retry from a steepest-descent step before giving up.
                pairs.clear();
                continue;
            }
            return res; // line search exhausted: local flatness at this tolerance
        }

        VectorXd grad_new;
        double f_chk = ctx.value_grad(z_new, al, grad_new);
        (void)f_chk;
        VectorXd s = z_new - res.z;
        VectorXd y = grad_new - res.grad;
        double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            pairs.emplace_back(s, y);
            if (static_cast<int>(pairs.size()) > mem) pairs.pop_front();
            bb_step = std::clamp(sy / y.squaredNorm(), 1e-12, 1e12);
        }
        double f_old = res.value;
        res.z = z_new;
        res.value = f_new;
        res.grad = grad_new;

        if (std::abs(f_new - f_old) <= 1e-16 * (1.0 + std::abs(f_old)) &&
            s.lpNorm<Eigen::Infinity>() <= 1e-14)
            return res;
    }
    res.pg_norm = projected_gradient_norm(res.z, res.grad, lo, hi);
    res.iterations = max_iter;
    res.hit_cap = true;
    return res;
}

double max_violation_of(const NlpProblem& p, const Evaluation& e) {
    double v = 0.0;
    for (int i = 0; i < p.m_ineq; ++i) v = std::max(v, e.g(i));
    for (int j = 0; j < p.m_eq; ++j) v = std::max(v, std::abs(e.h(j)));
    return v;
}

} // namespace

NlpProblem NlpProblem::unconstrained(int n,
                                     std::function<double(const Eigen::VectorXd&)> objective) {
    NlpProblem p;
    p.n = n;
    p.lower = VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
    p.upper = VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    p.eval = [obj = std::move(objective)](const VectorXd& z, bool, Evaluation& out) {
        out.f = obj(z);
    };
    return p;
}

SolveReport solve(const NlpProblem& problem, const Eigen::VectorXd& z0, const NlpOptions& opts) {
    AlContext ctx{problem, opts};
    AlParams al;
    al.lambda = VectorXd::Zero(problem.m_ineq);
    al.nu = VectorXd::Zero(problem.m_eq);
    al.mu = opts.initial_penalty;

    SolveReport report;
    report.z = project(z0, problem.lower, problem.upper);

    double eta = 0.1;            // feasibility milestone
    double omega = 1e-2;         // inner tolerance, tightened over outer iterations
    long total_inner = 0;

    for (int outer = 1; outer <= opts.max_outer; ++outer) {
        report.outer_iterations = outer;

        Evaluation probe;
        ctx.raw_eval(report.z, false, probe);
        double scale = std::max(1.0, std::abs(probe.f));
        double inner_tol = std::max(omega, 0.5 * opts.tol_stationarity * scale);

        int budget = static_cast<int>(
            std::min<long>(opts.max_inner, opts.max_total_inner - total_inner));
        if (budget <= 0) {
            report.message = "total inner-iteration budget exhausted";
            break;
        }
        InnerResult inner = minimize_box(ctx, al, report.z, inner_tol, budget);
        total_inner += inner.iterations;
        report.inner_iterations = total_inner;
        report.z = inner.z;

        Evaluation e;
        ctx.raw_eval(report.z, false, e);
        report.objective = e.f;
        report.max_violation = max_violation_of(problem, e);
        scale = std::max(1.0, std::abs(e.f));
        report.stationarity = inner.pg_norm / scale;

        bool feasible = report.max_violation <= opts.tol_feasibility;
        bool stationary = inner.pg_norm <= opts.tol_stationarity * scale;
        if (feasible && stationary) {
            report.converged = true;
            report.message = "converged";
            break;
        }
        if (problem.m_ineq == 0 && problem.m_eq == 0) {
            // Nothing to update in the outer loop: keep tightening the
            // inner tolerance until stationarity holds at the final scale.
            omega = std::max(0.2 * omega, 0.25 * opts.tol_stationarity * scale);
            if (!inner.hit_cap && inner.pg_norm <= opts.tol_stationarity * scale) {
                report.converged = true;
                report.message = "converged";
                break;
            }
            if (!inner.hit_cap && omega <= 0.3 * opts.tol_stationarity * scale) {
                // pg-norm cannot improve further (line search exhausted)
                report.converged = stationary;
                report.message = stationary ? "converged" : "stalled at line-search precision";
                break;
            }
            continue;
        }

        if (report.max_violation <= std::max(eta, opts.tol_feasibility)) {
            for (int i = 0; i < problem.m_ineq; ++i)
                al.lambda(i) = std::max(0.0, al.lambda(i) + al.mu * e.g(i));
            for (int j = 0; j < problem.m_eq; ++j) al.nu(j) += al.mu * e.h(j);
            eta = std::max(0.1 * opts.tol_feasibility, 0.2 * eta);
            omega = std::max(0.2 * omega, 0.25 * opts.tol_stationarity * scale);
        } else {
            if (al.mu >= opts.max_penalty) {
                report.message = "penalty cap reached without feasibility";
                break;
            }
            al.mu = std::min(al.mu * opts.penalty_growth, opts.max_penalty);
        }
    }

    if (report.message.empty()) report.message = "iteration cap reached";
    report.evaluations = ctx.evals;
    report.multipliers_ineq = al.lambda;
    report.multipliers_eq = al.nu;
    return report;
}

double check_gradients(const NlpProblem& problem, const Eigen::VectorXd& z, double h_fd) {
    Evaluation a;
    problem.eval(z, true, a);
    if (!problem.analytic_derivatives) {
        // Build the solver's forward-difference estimate as the provider.
        a.grad.resize(problem.n);
        a.Jg.resize(problem.m_ineq, problem.n);
        a.Jh.resize(problem.m_eq, problem.n);
        Evaluation base;
        problem.eval(z, false, base);
        VectorXd zp = z;
        for (int i = 0; i < problem.n; ++i) {
            double step = 1e-7 * std::max(1.0, std::abs(z(i)));
            zp(i) = z(i) + step;
            Evaluation e;
            problem.eval(zp, false, e);
            zp(i) = z(i);
            a.grad(i) = (e.f - base.f) / step;
            for (int r = 0; r < problem.m_ineq; ++r) a.Jg(r, i) = (e.g(r) - base.g(r)) / step;
            for (int r = 0; r < problem.m_eq; ++r) a.Jh(r, i) = (e.h(r) - base.h(r)) / step;
        }
    }

    double max_err = 0.0;
    VectorXd zp = z;
    for (int i = 0; i < problem.n; ++i) {
        double step = h_fd * std::max(1.0, std::abs(z(i)));
        zp(i) = z(i) + step;
        Evaluation ep;
        problem.eval(zp, false, ep);
        zp(i) = z(i) - step;
        Evaluation em;
        problem.eval(zp, false, em);
        zp(i) = z(i);

        double fd = (ep.f - em.f) / (2.0 * step);
        max_err = std::max(max_err, std::abs(a.grad(i) - fd) / std::max(1.0, std::abs(fd)));
        for (int r = 0; r < problem.m_ineq; ++r) {
            double fdg = (ep.g(r) - em.g(r)) / (2.0 * step);
            max_err = std::max(max_err, std::abs(a.Jg(r, i) - fdg) / std::max(1.0, std::abs(fdg)));
        }
        for (int r = 0; r < problem.m_eq; ++r) {
            double fdh = (ep.h(r) - em.h(r)) / (2.0 * step);
            max_err = std::max(max_err, std::abs(a.Jh(r, i) - fdh) / std::max(1.0, std::abs(fdh)));
        }
    }
    return max_err;
}

} // namespace hvacreg::nlp
