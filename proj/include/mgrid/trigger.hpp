#pragma once

// Optimization and communication trigger rules, holdover of stale
// predictions and reduction accounting.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace mgrid::trigger {

struct TriggerThresholds {
    double e_opt = 0.1;
    double e_com = 0.1;

    void validate() const;  // both must be >= 0
};

enum class Reason { None, Forced, Horizon, Error, Neighbor };

const char* reason_name(Reason r);

struct TriggerRecord {
    long step = 0;
    int dg = 0;
    bool opt_fired = false;
    bool com_fired = false;
    Reason reason = Reason::None;
};

using TriggerLog = std::vector<TriggerRecord>;

/// Error clause |y_meas - y_pred| >= e_opt or horizon clause k >= k_m + H.
bool opt_trigger(double y_meas, double y_pred, long k, long k_m, int horizon, double e_opt);

/// Which clause of opt_trigger fired (error takes precedence).
Reason opt_reason(double y_meas, double y_pred, long k, long k_m, int horizon, double e_opt);

/// |Y_now - Y_holdover|_inf >= e_com.
bool comm_trigger(const Eigen::VectorXd& y_now, const Eigen::VectorXd& y_holdover, double e_com);

/// Shift left by `elapsed`, repeating the last element of the tail.
Eigen::VectorXd holdover_prediction(const Eigen::VectorXd& y_last, long elapsed);

struct Reductions {
    std::vector<double> computation;    // percent per DG
    std::vector<double> communication;  // percent per DG
    double avg_computation = 0.0;
    double avg_communication = 0.0;
};

double reduction_percent(long fires, long n_steps);

/// Reductions per DG over the steps each DG logged.
Reductions reduction_metrics(const TriggerLog& log, int n_dgs);

}  // namespace mgrid::trigger
