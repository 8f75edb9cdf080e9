#pragma once

// Non-asymptotic Volterra observer for the canonical form y'' = f + u with
// constant f over a short window. Kernels are
//   K_h(t, tau) = exp(-omega_h (t - tau)) * k(tau),  k(tau) = (1 - exp(-varpi tau))^2,
// so every Volterra integral is the state of a scalar linear ODE in t.
// Integrating by parts twice in tau gives, per kernel,
//   [V_K u] - [V_{K_tautau} y] = -f [V_K 1] - K_tau(t,t) y(t) + K(t,t) y'(t),
// three equations in (f, y, y') once three distinct omega_h are used.

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <vector>

namespace mgrid::observer {

struct KernelParams {
    std::array<double, 3> omega{1.0, 2.0, 3.0};
    double varpi = 2.5;

    void validate() const;  // positive, pairwise distinct
};

struct KernelTrace {
    double k = 0.0;      // K(t, t)
    double k_tau = 0.0;  // dK/dtau at tau = t
};

KernelTrace kernel_trace(const KernelParams& kp, int h, double t_loc);

/// Rise factor k and its first two derivatives at tau.
std::array<double, 3> rise(double varpi, double tau);

class VolterraBank {
public:
    explicit VolterraBank(KernelParams kp = {});

    /// Zero all integrals and take the window's first sample.
    void reset(double y0, double u0);

    /// Advance by dt to the next sample (y1, u1); signals are linearly
    /// interpolated between samples inside the RK4 stages.
    void advance(double y1, double u1, double dt);

    double t_loc() const { return t_loc_; }
    const KernelParams& params() const { return kp_; }

    // Running integrals per kernel.
    double v_y(int h) const { return v_[h][0]; }
    double v_ytt(int h) const { return v_[h][1]; }  // [V_{K_tautau} y]
    double v_u(int h) const { return v_[h][2]; }
    double v_w(int h) const { return v_[h][3]; }

private:
    KernelParams kp_;
    std::array<std::array<double, 4>, 3> v_{};
    double t_loc_ = 0.0;
    double y_ = 0.0;
    double u_ = 0.0;
};

struct LinearSystem {
    Eigen::Vector3d lambda;
    Eigen::Matrix3d gamma;
};

/// Rows: Lambda_h = V_u - V_{K_tautau} y; Gamma_h = [-V_w, -K_tau(t,t), K(t,t)].
LinearSystem assemble_system(const VolterraBank& bank);

struct Estimate {
    double f_hat = 0.0;
    double z0_hat = 0.0;
    double z1_hat = 0.0;
    double cond_gamma = 0.0;
    bool flagged = false;
};

inline constexpr double kConditionCap = 1e12;

/// Solves Gamma [f z0 z1]' = Lambda. Falls back to `previous` (flagged) when
/// Gamma is singular or too ill-conditioned.
Estimate estimate(const LinearSystem& sys, const std::optional<Estimate>& previous = std::nullopt);

struct ObserverWindow {
    double t_eps = 0.02;
    double dt_active = 0.02;

    double length() const { return t_eps + dt_active; }
};

struct WindowSpan {
    double enable = 0.0;
    double disable = 0.0;
    bool clipped = false;
};

/// One window [t_k - dt_active - t_eps, t_k] per controller instant, clipped
/// to start no earlier than `t_start`. Throws when windows would overlap.
std::vector<WindowSpan> schedule_windows(const std::vector<double>& t_mpc, const ObserverWindow& w, double t_start);

}  // namespace mgrid::observer
