#pragma once

// RL network, bus-voltage closure and the coupled plant integrator. Line and
// load currents live in the common DQ frame rotating at omega_com (the droop
// frequency of DG 0, whose angle stays at zero).

#include "mgrid/physics.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mgrid::physics {

struct Line {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double l = 0.0;
    bool closed = true;
    std::string name;  // breakers are lines that scenarios may open
};

struct Load {
    int bus = 0;
    double r = 0.0;
    double l = 0.0;
    bool connected = true;
    std::string name;
};

enum class Closure {
    Kcl,              // stiff limit: bus voltages solved from dKCL/dt = 0
    VirtualResistor,  // v_bus = R_n * net injected current
};

struct NetworkModel {
    int n_buses = 0;
    std::vector<Line> lines;
    std::vector<Load> loads;
    Closure closure = Closure::Kcl;
    double r_n = 1000.0;

    void validate() const;
};

/// v_bus = R_n * injected current per bus.
std::vector<Dq> virtual_resistor_voltages(double r_n, const std::vector<Dq>& injected);

struct PlantState {
    std::vector<DGState> dgs;
    std::vector<Dq> line_i;
    std::vector<Dq> load_i;
    double t = 0.0;
};

/// Maps live DG quantities to the voltage setpoint. Used for feedback
/// linearization evaluated inside every Runge-Kutta stage; `t` is the stage time.
using VoltageLaw = std::function<double(const DGState& s, const Dq& v_b_local, double omega_i, double t)>;

struct DGDrive {
    double omega_n = kNominalOmega;
    double v_n = 311.0;
    VoltageLaw law;  // overrides v_n when set

    double setpoint(const DGParams& p, const DGState& s, const Dq& v_b_local, double t = 0.0) const;
};

class Plant {
public:
    Plant(std::vector<DGParams> dgs, std::vector<int> dg_bus, NetworkModel net);

    std::size_t n_dgs() const { return params_.size(); }
    const DGParams& params(std::size_t i) const { return params_[i]; }
    int dg_bus(std::size_t i) const { return dg_bus_[i]; }
    bool online(std::size_t i) const { return online_[i]; }
    const NetworkModel& network() const { return net_; }

    /// Every DG at its unloaded equilibrium and all branch currents zero.
    PlantState initial_state(double v_n) const;

    /// Bus voltages in the common frame for the given state.
    std::vector<Dq> bus_voltages(const PlantState& s) const;

    /// Connection-bus voltage in DG i's local frame.
    Dq local_bus_voltage(const PlantState& s, std::size_t i) const;

    double omega_com(const PlantState& s, const std::vector<DGDrive>& drives) const;

    /// Full derivative of the packed state.
    Eigen::VectorXd derivative(const Eigen::VectorXd& x, const std::vector<DGDrive>& drives, double t = 0.0) const;

    Eigen::VectorXd pack(const PlantState& s) const;
    PlantState unpack(const Eigen::VectorXd& x, double t) const;

    // Topology events. Each one restores current balance at every bus.
    void set_load(PlantState& s, std::size_t load, bool connected);
    void set_line(PlantState& s, std::size_t line, bool closed);
    void unplug_dg(PlantState& s, std::size_t dg);
    void plug_dg(PlantState& s, std::size_t dg);

    /// Net current flowing into each bus (zero when the branch currents are
    /// consistent with the KCL closure).
    std::vector<Dq> bus_current_imbalance(const PlantState& s) const;

    /// Minimum-magnetic-energy correction of branch currents that restores
    /// current balance at every bus.
    void project_currents(PlantState& s) const;

private:
    void refactor() const;
    void closure_voltages(const double* x, double omega_com, std::vector<Dq>& v_bus) const;

    std::vector<DGParams> params_;
    std::vector<int> dg_bus_;
    std::vector<bool> online_;
    NetworkModel net_;

    mutable bool factored_ = false;
    mutable Eigen::LDLT<Eigen::MatrixXd> nodal_;
};

/// Classical RK4 step with zero-order-hold drives. Throws PlantDivergence
/// naming the DG and state index that went non-finite.
PlantState integrate_step(const Plant& plant, const PlantState& s, const std::vector<DGDrive>& drives, double dt);

}  // namespace mgrid::physics
