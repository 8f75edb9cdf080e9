#pragma once

// Runs a scenario: plant on the fine grid, observers per window, controllers
// at every controller instant, messages exchanged in two phases.

#include "mgrid/observer.hpp"
#include "mgrid/scenario.hpp"
#include "mgrid/trigger.hpp"

#include <string>
#include <vector>

namespace mgrid::scenario {

struct SeriesRow {
    double t = 0.0;
    int dg = 0;
    double v_od = 0.0;
    double v_oq = 0.0;
    double p = 0.0;
    double q = 0.0;
    double omega = 0.0;
    double v_n = 0.0;
    double xi = 0.0;
    double f_hat = 0.0;
    double z0_hat = 0.0;
    double z1_hat = 0.0;
    bool online = true;
};

struct DeliveryRow {
    long step = 0;
    int from = 0;
    int to = 0;
    bool delivered = true;
};

struct ObserverRow {
    double t = 0.0;
    int dg = 0;
    observer::Estimate est;
};

struct QpRow {
    long step = 0;
    int dg = 0;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = true;
    bool bounds_active = false;
    double slack = 0.0;
};

struct RunOutput {
    std::string scenario;
    std::string mode;
    int n_dgs = 0;
    std::vector<std::string> dg_names;
    double t_s = 0.0;
    double v_ref = 0.0;
    double duration = 0.0;
    std::vector<double> event_times;  // events other than link toggles
    double secondary_on = -1.0;

    std::vector<SeriesRow> series;
    trigger::TriggerLog triggers;
    std::vector<DeliveryRow> deliveries;
    std::vector<ObserverRow> observer;
    std::vector<QpRow> qp;

    bool diverged = false;
    std::string diagnostic;
    double wall_seconds = 0.0;
};

RunOutput run(const Scenario& s);

}  // namespace mgrid::scenario
