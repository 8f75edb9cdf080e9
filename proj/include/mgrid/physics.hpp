#pragma once

// Large-signal model of a droop-controlled inverter DG: power filter, voltage
// and current PI loops, LC filter and output impedance, all expressed in the
// DG's own rotating dq frame.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mgrid::physics {

using Dq = Eigen::Vector2d;

inline constexpr double kNominalOmega = 2.0 * std::numbers::pi * 50.0;

struct DGParams {
    double m_p = 0.0;     // rad/s per W
    double n_q = 0.0;     // V per var
    double r_f = 0.0;
    double l_f = 0.0;
    double c_f = 0.0;
    double r_c = 0.0;
    double l_c = 0.0;
    double k_pv = 0.0;
    double k_iv = 0.0;
    double k_pc = 0.0;
    double k_ic = 0.0;
    double omega_c = 31.41;  // power filter cutoff
    double f_frame = 0.0;    // dq feed-forward gain on the output current
    double omega_b = kNominalOmega;

    /// Throws std::invalid_argument naming the first offending field.
    void validate() const;
};

/// Table values of the 4-DG test system.
DGParams dg1_params();
DGParams dg2_params();
DGParams dg34_params();

struct DGState {
    static constexpr std::size_t kSize = 13;

    double delta = 0.0;
    double p = 0.0;
    double q = 0.0;
    double phi_d = 0.0;
    double phi_q = 0.0;
    double gamma_d = 0.0;
    double gamma_q = 0.0;
    double i_ld = 0.0;
    double i_lq = 0.0;
    double v_od = 0.0;
    double v_oq = 0.0;
    double i_od = 0.0;
    double i_oq = 0.0;

    std::array<double, kSize> to_array() const;
    static DGState from_array(const std::array<double, kSize>& a);

    Dq v_o() const { return {v_od, v_oq}; }
    Dq i_o() const { return {i_od, i_oq}; }
};

const char* state_name(std::size_t index);

struct DGInput {
    double omega_n = kNominalOmega;
    double v_n = 311.0;
};

struct DroopOutput {
    double omega = 0.0;
    double v_od_ref = 0.0;  // q-axis reference is identically zero
};

DroopOutput droop_outputs(const DGParams& p, double P, double Q, const DGInput& in);

/// Time derivative of the 13 DG states. `v_b_local` is the connection-bus
/// voltage already rotated into this DG's frame.
DGState dg_derivatives(const DGParams& p, const DGState& s, const DGInput& in, const Dq& v_b_local,
                       double omega_com);

enum class FrameDirection { ToCommon, ToLocal };

/// Rotation by +delta (local -> common) or -delta (common -> local).
Dq frame_transform(const Dq& v, double delta, FrameDirection direction);

/// Steady operating point of an unloaded DG whose output sits at v_od = v_n,
/// v_oq = 0, with the integrators matched so every derivative vanishes.
DGState unloaded_equilibrium(const DGParams& p, double v_n);

}  // namespace mgrid::physics
