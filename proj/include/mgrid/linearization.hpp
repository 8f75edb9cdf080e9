#pragma once

// Input-output linearization of the v_od channel: v_od'' = f(x) + g * V_n.

#include "mgrid/physics.hpp"

namespace mgrid::fl {

struct LinearizedOutput {
    double y1 = 0.0;  // v_od
    double y2 = 0.0;  // dv_od/dt
};

struct NonlinearityEval {
    double f = 0.0;
    double g = 0.0;
    double f_prime = 0.0;
};

/// Drift term of the second derivative of v_od. The ω̇·v_oq contribution is
/// neglected (v_oq is regulated to zero); the F_frame term vanishes for F=0.
double compute_f(const physics::DGState& s, const physics::DGParams& p, double v_bd, double omega_i);

/// g = K_Pc K_Pv / (C_f L_f).
double compute_g(const physics::DGParams& p);

/// V_n = (xi - f_hat) / g.
double auxiliary_to_actual(double xi, double f_hat, double g);

/// Exact output and its derivative from the true state.
LinearizedOutput linearized_output(const physics::DGState& s, const physics::DGParams& p, double omega_i);

}  // namespace mgrid::fl
