#include "hvacreg/model.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace hvacreg::model {

void ContinuousBuildingParams::validate() const {
    if (!(C_r > 0.0) || !(C_m > 0.0))
        throw std::invalid_argument("building params: capacitances must be > 0");
    if (!(R_ra > 0.0) || !(R_rm > 0.0))
        throw std::invalid_argument("building params: resistances must be > 0");
    if (!(gamma >= 0.0)) throw std::invalid_argument("building params: gamma must be >= 0");
    if (!(c_p > 0.0)) throw std::invalid_argument("building params: c_p must be > 0");
}

DiscreteBuildingModel DiscreteBuildingModel::from_entries(double a11, double a12, double a21,
                                                          double a22, double b, double d11,
                                                          double d12, double d13, double T_s,
                                                          double delta_t) {
    DiscreteBuildingModel m;
    m.A << a11, a12, a21, a22;
    m.B_u << b * T_s, 0.0;
    m.B_xu << -b, 0.0, 0.0, 0.0;
    m.B_v << d11, d12, d13, 0.0, 0.0, 0.0;
    m.delta_t = delta_t;
    m.T_s = T_s;
    return m;
}

bool DiscreteBuildingModel::sign_pattern_ok() const {
    return A(0, 1) >= 0.0 && A(1, 0) >= 0.0 && b() >= 0.0 && B_v(0, 0) >= 0.0 &&
           B_v(0, 1) >= 0.0 && B_v(0, 2) >= 0.0;
}

void DiscreteBuildingModel::validate() const {
    if (!sign_pattern_ok())
        throw std::invalid_argument("building model: sign pattern violated "
                                    "(a12, a21, b, d11, d12, d13 must be >= 0)");
    if (B_u(1) != 0.0 || B_xu(1, 0) != 0.0 || B_xu(1, 1) != 0.0 || B_xu(0, 1) != 0.0 ||
        B_v.row(1).any())
        throw std::invalid_argument("building model: second rows of B_u, B_xu, B_v must be zero");
    if (spectral_radius(A) > 1.0 + 1e-9)
        throw std::invalid_argument("building model: |eig(A)| > 1");
    if (!(delta_t > 0.0)) throw std::invalid_argument("building model: delta_t must be > 0");
}

double spectral_radius(const Eigen::Matrix2d& M) {
    double tr = M(0, 0) + M(1, 1);
    double det = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
    double disc = tr * tr - 4.0 * det;
    if (disc >= 0.0) {
        double s = std::sqrt(disc);
        return std::max(std::abs((tr + s) / 2.0), std::abs((tr - s) / 2.0));
    }
    return std::sqrt(det); // complex pair, |eig| = sqrt(det)
}

DiscreteBuildingModel discretize(const ContinuousBuildingParams& p, double delta_t) {
    p.validate();
    if (delta_t < 0.0) throw std::invalid_argument("discretize: delta_t must be >= 0");

    Eigen::Matrix2d Ac;
    Ac << -(1.0 / (p.C_r * p.R_ra) + 1.0 / (p.C_r * p.R_rm)), 1.0 / (p.C_r * p.R_rm),
        1.0 / (p.C_m * p.R_rm), -1.0 / (p.C_m * p.R_rm);
    Eigen::Vector2d Buc(p.c_p * p.T_s / p.C_r, 0.0);
    Eigen::Matrix2d Bxuc;
    Bxuc << -p.c_p / p.C_r, 0.0, 0.0, 0.0;
    Eigen::Matrix<double, 2, 3> Bvc;
    Bvc << 1.0 / (p.C_r * p.R_ra), p.gamma / p.C_r, 1.0 / p.C_r, 0.0, 0.0, 0.0;

    DiscreteBuildingModel m;
    m.A = Eigen::Matrix2d::Identity() + delta_t * Ac;
    m.B_u = delta_t * Buc;
    m.B_xu = delta_t * Bxuc;
    m.B_v = delta_t * Bvc;
    m.delta_t = delta_t;
    m.T_s = p.T_s;
    return m;
}

BuildingState step(const DiscreteBuildingModel& m, const BuildingState& x, double u,
                   const Disturbance& v) {
    Eigen::Vector2d xv = x.vec();
    Eigen::Vector2d out = m.A * xv;
    out += m.B_u * u;
    out += (m.B_xu * xv) * u;
    out += m.B_v * v.vec();
    return BuildingState::from_vec(out);
}

std::vector<BuildingState> simulate(const DiscreteBuildingModel& m, const BuildingState& x0,
                                    const std::vector<double>& u_seq,
                                    const std::vector<Disturbance>& v_seq) {
    if (u_seq.size() != v_seq.size())
        throw std::invalid_argument("simulate: u_seq and v_seq lengths differ");
    std::vector<BuildingState> traj;
    traj.reserve(u_seq.size() + 1);
    traj.push_back(x0);
    for (std::size_t k = 0; k < u_seq.size(); ++k)
        traj.push_back(step(m, traj.back(), u_seq[k], v_seq[k]));
    return traj;
}

bool closed_loop_stable(const DiscreteBuildingModel& m, double u) {
    const double tol = 1e-12;
    if (spectral_radius(m.A) > 1.0 + tol) return false;
    Eigen::Matrix2d M = m.A + m.B_xu * u;
    return spectral_radius(M) <= 1.0 + tol;
}

nlohmann::json DiscreteBuildingModel::to_json() const {
    return nlohmann::json{{"a11", A(0, 0)},    {"a12", A(0, 1)},    {"a21", A(1, 0)},
                          {"a22", A(1, 1)},    {"b", b()},          {"d11", B_v(0, 0)},
                          {"d12", B_v(0, 1)},  {"d13", B_v(0, 2)},  {"T_s", T_s},
                          {"delta_t", delta_t}};
}

DiscreteBuildingModel DiscreteBuildingModel::from_json(const nlohmann::json& j) {
    return from_entries(j.at("a11").get<double>(), j.at("a12").get<double>(),
                        j.at("a21").get<double>(), j.at("a22").get<double>(),
                        j.at("b").get<double>(), j.at("d11").get<double>(),
                        j.at("d12").get<double>(), j.at("d13").get<double>(),
                        j.at("T_s").get<double>(), j.value("delta_t", 900.0));
}

DiscreteBuildingModel recent_calibration() {
    return DiscreteBuildingModel::from_entries(0.6344, 0.2661, 0.1021, 0.9170, 0.4716, 0.0405,
                                               0.0028, 3.3686e-4, 14.0, 900.0);
}

DiscreteBuildingModel older_calibration() {
    return DiscreteBuildingModel::from_entries(0.8665, 0.0918, 0.0374, 0.9703, 0.2996, 0.0230,
                                               2.016e-4, 1.424e-4, 14.0, 900.0);
}

} // namespace hvacreg::model
