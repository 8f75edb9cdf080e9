#include "mgrid/linearization.hpp"

#include <stdexcept>

namespace mgrid::fl {

double compute_f(const physics::DGState& s, const physics::DGParams& p, double v_bd, double omega_i) {
    const double cl = p.c_f * p.l_f;
    const double cc = p.c_f * p.l_c;
    const double w = omega_i;
    double f = (-w * w - (p.k_pc * p.k_pv + 1.0) / cl - 1.0 / cc) * s.v_od;
    f += -p.omega_b * p.k_pc / p.l_f * s.v_oq;
    f += (p.r_c / cc + p.k_pc * p.f_frame / cl) * s.i_od;
    f += -2.0 * w / p.c_f * s.i_oq;
    f += -(p.r_f + p.k_pc) / cl * s.i_ld;
    f += (2.0 * w - p.omega_b) / p.c_f * s.i_lq;
    f += -p.k_pc * p.k_pv * p.n_q / cl * s.q;
    f += p.k_pc * p.k_iv / cl * s.phi_d;
    f += p.k_ic / cl * s.gamma_d;
    f += v_bd / cc;
    return f;
}

double compute_g(const physics::DGParams& p) {
    if (!(p.c_f * p.l_f > 0.0)) throw std::invalid_argument("compute_g needs C_f * L_f > 0");
    return p.k_pc * p.k_pv / (p.c_f * p.l_f);
}

double auxiliary_to_actual(double xi, double f_hat, double g) {
    if (!(g > 0.0)) throw std::invalid_argument("auxiliary_to_actual needs g > 0");
    return (xi - f_hat) / g;
}

LinearizedOutput linearized_output(const physics::DGState& s, const physics::DGParams& p, double omega_i) {
    return {s.v_od, omega_i * s.v_oq + (s.i_ld - s.i_od) / p.c_f};
}

}  // namespace mgrid::fl
