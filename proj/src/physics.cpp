#include "mgrid/physics.hpp"

#include <cmath>

namespace mgrid::physics {

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string("DGParams.") + name + " must be positive and finite");
    }
}

}  // namespace

void DGParams::validate() const {
    require_positive(m_p, "m_P");
    require_positive(n_q, "n_Q");
    require_positive(l_f, "L_f");
    require_positive(c_f, "C_f");
    require_positive(l_c, "L_c");
    require_positive(k_pv, "K_Pv");
    require_positive(k_pc, "K_Pc");
    require_positive(omega_c, "omega_c");
    require_positive(omega_b, "omega_b");
    if (r_f < 0.0 || r_c < 0.0 || k_iv < 0.0 || k_ic < 0.0) {
        throw std::invalid_argument("DGParams resistances and integral gains must be non-negative");
    }
}

DGParams dg1_params() {
    DGParams p;
    p.m_p = 6.28e-5;
    p.n_q = 0.5e-3;
    p.r_f = 0.1;
    p.l_f = 1.35e-3;
    p.c_f = 47e-6;
    p.r_c = 0.02;
    p.l_c = 2e-3;
    p.k_pv = 0.05;
    p.k_iv = 390.0;
    p.k_pc = 10.5;
    p.k_ic = 1.6e4;
    return p;
}

DGParams dg2_params() {
    DGParams p = dg1_params();
    p.m_p = 9.42e-5;
    p.n_q = 0.75e-3;
    return p;
}

DGParams dg34_params() {
    DGParams p = dg1_params();
    p.m_p = 12.56e-5;
    p.n_q = 1e-3;
    p.k_pv = 0.1;
    p.k_iv = 420.0;
    p.k_pc = 15.0;
    p.k_ic = 2e4;
    return p;
}

std::array<double, DGState::kSize> DGState::to_array() const {
    return {delta, p, q, phi_d, phi_q, gamma_d, gamma_q, i_ld, i_lq, v_od, v_oq, i_od, i_oq};
}

DGState DGState::from_array(const std::array<double, kSize>& a) {
    DGState s;
    s.delta = a[0];
    s.p = a[1];
    s.q = a[2];
    s.phi_d = a[3];
    s.phi_q = a[4];
    s.gamma_d = a[5];
    s.gamma_q = a[6];
    s.i_ld = a[7];
    s.i_lq = a[8];
    s.v_od = a[9];
    s.v_oq = a[10];
    s.i_od = a[11];
    s.i_oq = a[12];
    return s;
}

const char* state_name(std::size_t index) {
    static constexpr const char* kNames[DGState::kSize] = {"delta", "P",    "Q",    "phi_d", "phi_q",
                                                           "gamma_d", "gamma_q", "i_ld", "i_lq",  "v_od",
                                                           "v_oq",  "i_od", "i_oq"};
    return index < DGState::kSize ? kNames[index] : "?";
}

DroopOutput droop_outputs(const DGParams& p, double P, double Q, const DGInput& in) {
    return {in.omega_n - p.m_p * P, in.v_n - p.n_q * Q};
}

DGState dg_derivatives(const DGParams& p, const DGState& s, const DGInput& in, const Dq& v_b_local,
                       double omega_com) {
    const DroopOutput droop = droop_outputs(p, s.p, s.q, in);
    const double w = droop.omega;
    const double v_od_ref = droop.v_od_ref;
    const double v_oq_ref = 0.0;

    // Inner loops.
    const double i_ld_ref =
        p.f_frame * s.i_od - p.omega_b * p.c_f * s.v_oq + p.k_pv * (v_od_ref - s.v_od) + p.k_iv * s.phi_d;
    const double i_lq_ref =
        p.f_frame * s.i_oq + p.omega_b * p.c_f * s.v_od + p.k_pv * (v_oq_ref - s.v_oq) + p.k_iv * s.phi_q;
    // Ideal bridge: the inverter voltage equals its reference.
    const double v_id = -p.omega_b * p.l_f * s.i_lq + p.k_pc * (i_ld_ref - s.i_ld) + p.k_ic * s.gamma_d;
    const double v_iq = p.omega_b * p.l_f * s.i_ld + p.k_pc * (i_lq_ref - s.i_lq) + p.k_ic * s.gamma_q;

    DGState d;
    d.delta = w - omega_com;
    d.p = -p.omega_c * s.p + p.omega_c * (s.v_od * s.i_od + s.v_oq * s.i_oq);
    d.q = -p.omega_c * s.q + p.omega_c * (s.v_oq * s.i_od - s.v_od * s.i_oq);
    d.phi_d = v_od_ref - s.v_od;
    d.phi_q = v_oq_ref - s.v_oq;
    d.gamma_d = i_ld_ref - s.i_ld;
    d.gamma_q = i_lq_ref - s.i_lq;
    d.i_ld = -p.r_f / p.l_f * s.i_ld + w * s.i_lq + (v_id - s.v_od) / p.l_f;
    d.i_lq = -p.r_f / p.l_f * s.i_lq - w * s.i_ld + (v_iq - s.v_oq) / p.l_f;
    d.v_od = w * s.v_oq + (s.i_ld - s.i_od) / p.c_f;
    d.v_oq = -w * s.v_od + (s.i_lq - s.i_oq) / p.c_f;
    d.i_od = -p.r_c / p.l_c * s.i_od + w * s.i_oq + (s.v_od - v_b_local.x()) / p.l_c;
    d.i_oq = -p.r_c / p.l_c * s.i_oq - w * s.i_od + (s.v_oq - v_b_local.y()) / p.l_c;
    return d;
}

Dq frame_transform(const Dq& v, double delta, FrameDirection direction) {
    const double angle = direction == FrameDirection::ToCommon ? delta : -delta;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

DGState unloaded_equilibrium(const DGParams& p, double v_n) {
    // P = Q = 0 so omega = omega_n and the droop reference is v_n.
    const double w = p.omega_b;
    DGState s;
    s.v_od = v_n;
    s.i_lq = w * p.c_f * v_n;
    // i_ld* = i_ld = 0 and i_lq* = i_lq force both voltage integrators to zero.
    s.gamma_d = (v_n - w * p.l_f * s.i_lq + p.omega_b * p.l_f * s.i_lq) / p.k_ic;
    s.gamma_q = p.r_f * s.i_lq / p.k_ic;
    return s;
}

}  // namespace mgrid::physics
