#include "mgrid/observer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mgrid::observer {

void KernelParams::validate() const {
    if (!(varpi > 0.0)) throw std::invalid_argument("kernel rise rate must be positive");
    for (int h = 0; h < 3; ++h) {
        if (!(omega[h] > 0.0)) throw std::invalid_argument("kernel decay rates must be positive");
        for (int j = 0; j < h; ++j) {
            if (omega[h] == omega[j]) throw std::invalid_argument("kernel decay rates must be pairwise distinct");
        }
    }
}

std::array<double, 3> rise(double varpi, double tau) {
    const double e = std::exp(-varpi * tau);
    const double one_minus = 1.0 - e;
    return {one_minus * one_minus, 2.0 * varpi * one_minus * e, 2.0 * varpi * varpi * e * (2.0 * e - 1.0)};
}

KernelTrace kernel_trace(const KernelParams& kp, int h, double t_loc) {
    if (t_loc < 0.0) throw std::invalid_argument("window-local time must be non-negative");
    const auto r = rise(kp.varpi, t_loc);
    return {r[0], kp.omega.at(h) * r[0] + r[1]};
}

VolterraBank::VolterraBank(KernelParams kp) : kp_(kp) { kp_.validate(); }

void VolterraBank::reset(double y0, double u0) {
    for (auto& row : v_) row.fill(0.0);
    t_loc_ = 0.0;
    y_ = y0;
    u_ = u0;
}

void VolterraBank::advance(double y1, double u1, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("observer step needs dt > 0");
    const double t0 = t_loc_;
    const double taus[3] = {t0, t0 + 0.5 * dt, t0 + dt};
    const double ys[3] = {y_, 0.5 * (y_ + y1), y1};
    const double us[3] = {u_, 0.5 * (u_ + u1), u1};
    std::array<double, 3> rs[3];
    for (int j = 0; j < 3; ++j) rs[j] = rise(kp_.varpi, taus[j]);

    for (int h = 0; h < 3; ++h) {
        const double w = kp_.omega[h];
        // Forcing of each integral at the three RK4 nodes.
        double src[3][4];
        for (int j = 0; j < 3; ++j) {
            const auto& r = rs[j];
            const double m2 = w * w * r[0] + 2.0 * w * r[1] + r[2];
            src[j][0] = r[0] * ys[j];
            src[j][1] = m2 * ys[j];
            src[j][2] = r[0] * us[j];
            src[j][3] = r[0];
        }
        for (int q = 0; q < 4; ++q) {
            const double v = v_[h][q];
            const double k1 = src[0][q] - w * v;
            const double k2 = src[1][q] - w * (v + 0.5 * dt * k1);
            const double k3 = src[1][q] - w * (v + 0.5 * dt * k2);
            const double k4 = src[2][q] - w * (v + dt * k3);
            v_[h][q] = v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    t_loc_ = t0 + dt;
    y_ = y1;
    u_ = u1;
}

LinearSystem assemble_system(const VolterraBank& bank) {
    LinearSystem sys;
    for (int h = 0; h < 3; ++h) {
        const KernelTrace tr = kernel_trace(bank.params(), h, bank.t_loc());
        sys.lambda[h] = bank.v_u(h) - bank.v_ytt(h);
        sys.gamma(h, 0) = -bank.v_w(h);
        sys.gamma(h, 1) = -tr.k_tau;
        sys.gamma(h, 2) = tr.k;
    }
    return sys;
}

Estimate estimate(const LinearSystem& sys, const std::optional<Estimate>& previous) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(sys.gamma));
    const Eigen::VectorXd s = svd.singularValues();
    const double cond = s[2] > 0.0 ? s[0] / s[2] : std::numeric_limits<double>::infinity();
    Estimate e;
    e.cond_gamma = cond;
    if (!(cond <= kConditionCap) || !sys.lambda.allFinite()) {
        if (previous) {
            e = *previous;
            e.cond_gamma = cond;
        }
        e.flagged = true;
        return e;
    }
    const Eigen::Vector3d theta = sys.gamma.partialPivLu().solve(sys.lambda);
    e.f_hat = theta[0];
    e.z0_hat = theta[1];
    e.z1_hat = theta[2];
    return e;
}

std::vector<WindowSpan> schedule_windows(const std::vector<double>& t_mpc, const ObserverWindow& w, double t_start) {
    if (!(w.t_eps >= 0.0) || !(w.dt_active > 0.0)) throw std::invalid_argument("observer window lengths must be positive");
    std::vector<WindowSpan> out;
    for (std::size_t k = 0; k < t_mpc.size(); ++k) {
        if (k > 0 && t_mpc[k] - t_mpc[k - 1] < w.length() - 1e-12) {
            throw std::invalid_argument("observer windows overlap: t_eps + dt_active exceeds the controller period");
        }
        WindowSpan span{t_mpc[k] - w.length(), t_mpc[k], false};
        if (span.enable < t_start) {
            span.enable = t_start;
            span.clipped = true;
        }
        out.push_back(span);
    }
    return out;
}

}  // namespace mgrid::observer
