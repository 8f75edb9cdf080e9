#pragma once

// Scenario description: plant, network, communication graph, controller
// settings and the timed event script. The JSON layout is documented in
// docs/scenario-schema.md.

#include "mgrid/agent.hpp"
#include "mgrid/comm.hpp"
#include "mgrid/network.hpp"
#include "mgrid/observer.hpp"
#include "mgrid/physics.hpp"
#include "mgrid/trigger.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mgrid::scenario {

enum class Mode { Etdmpc, TimeTriggered, Pi };
enum class Linearization { Continuous, Sampled };

enum class EventKind {
    LoadConnect,
    LoadDisconnect,
    DgUnplug,
    DgPlug,
    LinkDown,
    LinkUp,
    BreakerOpen,
    BreakerClose,
    SecondaryOn,
};

const char* mode_name(Mode m);
Mode parse_mode(const std::string& s);
const char* event_kind_name(EventKind k);

struct Event {
    double t = 0.0;
    EventKind kind = EventKind::SecondaryOn;
    std::string target;
    int index = -1;      // resolved load, DG or line index
    int link_from = -1;  // link events: DG ids
    int link_to = -1;
    bool bidirectional = true;
};

struct DGSpec {
    std::string name;
    physics::DGParams params;
    int bus = 0;
};

struct Scenario {
    std::string name;
    double duration = 1.0;
    double dt = 5e-5;
    double t_s = 0.01;
    double t_s_mpc = 0.05;
    int horizon = 10;
    double v_ref = 311.0;
    Mode mode = Mode::Etdmpc;

    trigger::TriggerThresholds thresholds;
    bool thresholds_pu = false;

    double rho = 1e-6;
    double v_lo_pu = 0.97;
    double v_hi_pu = 1.03;
    double slack_penalty = 1e6;

    observer::KernelParams kernels;
    observer::ObserverWindow window;

    Linearization linearization = Linearization::Continuous;
    bool reoptimize_on_receive = true;
    int com_refresh = 0;  // controller steps, 0 disables
    double gain_error = 0.0;
    double ancillary_bandwidth = 3000.0;  // rad/s, 0 disables trajectory tracking between controller instants
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;
    agent::PiGains pi;
    bool parallel = false;

    std::vector<std::string> bus_names;
    physics::NetworkModel network;
    std::vector<DGSpec> dgs;
    std::vector<std::pair<int, int>> comm_links;
    std::vector<int> pinned;
    std::vector<Event> events;

    int n_dgs() const { return static_cast<int>(dgs.size()); }
    int steps_total() const;
    int steps_per_sample() const;
    int steps_per_mpc() const;
    int ratio() const { return steps_per_mpc() / steps_per_sample(); }
    double e_opt_volts() const { return thresholds.e_opt * (thresholds_pu ? v_ref : 1.0); }
    double e_com_volts() const { return thresholds.e_com * (thresholds_pu ? v_ref : 1.0); }

    comm::CommGraph graph() const;
    comm::LinkSchedule link_schedule() const;
    std::optional<double> secondary_on_time() const;

    /// Throws ScenarioError describing the first inconsistency.
    void validate() const;
};

/// Parses and validates. Unknown keys are rejected by name.
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);

/// Table-value presets by name: dg1, dg2, dg3, dg4 (dg3 == dg4).
physics::DGParams dg_preset(const std::string& name);

}  // namespace mgrid::scenario
