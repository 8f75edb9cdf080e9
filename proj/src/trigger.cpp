#include "mgrid/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mgrid::trigger {

void TriggerThresholds::validate() const {
    if (!(e_opt >= 0.0) || !(e_com >= 0.0)) throw std::invalid_argument("trigger thresholds must be non-negative");
}

const char* reason_name(Reason r) {
    switch (r) {
        case Reason::None: return "none";
        case Reason::Forced: return "forced";
        case Reason::Horizon: return "horizon";
        case Reason::Error: return "error";
        case Reason::Neighbor: return "neighbor";
    }
    return "none";
}

bool opt_trigger(double y_meas, double y_pred, long k, long k_m, int horizon, double e_opt) {
    return std::abs(y_meas - y_pred) >= e_opt || k >= k_m + horizon;
}

Reason opt_reason(double y_meas, double y_pred, long k, long k_m, int horizon, double e_opt) {
    if (std::abs(y_meas - y_pred) >= e_opt) return Reason::Error;
    if (k >= k_m + horizon) return Reason::Horizon;
    return Reason::None;
}

bool comm_trigger(const Eigen::VectorXd& y_now, const Eigen::VectorXd& y_holdover, double e_com) {
    if (y_now.size() != y_holdover.size()) throw std::invalid_argument("prediction lengths differ");
    return (y_now - y_holdover).lpNorm<Eigen::Infinity>() >= e_com;
}

Eigen::VectorXd holdover_prediction(const Eigen::VectorXd& y_last, long elapsed) {
    if (elapsed < 0) throw std::invalid_argument("elapsed steps must be non-negative");
    const long n = y_last.size();
    Eigen::VectorXd out(n);
    for (long j = 0; j < n; ++j) out[j] = y_last[std::min(j + elapsed, n - 1)];
    return out;
}

double reduction_percent(long fires, long n_steps) {
    if (n_steps <= 0) throw std::invalid_argument("reduction needs at least one step");
    return 100.0 * (1.0 - static_cast<double>(fires) / static_cast<double>(n_steps));
}

Reductions reduction_metrics(const TriggerLog& log, int n_dgs) {
    std::vector<long> steps(n_dgs, 0), opt(n_dgs, 0), com(n_dgs, 0);
    for (const TriggerRecord& r : log) {
        if (r.dg < 0 || r.dg >= n_dgs) throw std::invalid_argument("trigger record names an unknown DG");
        ++steps[r.dg];
        opt[r.dg] += r.opt_fired ? 1 : 0;
        com[r.dg] += r.com_fired ? 1 : 0;
    }
    Reductions out;
    int counted = 0;
    for (int i = 0; i < n_dgs; ++i) {
        if (steps[i] == 0) {
            out.computation.push_back(0.0);
            out.communication.push_back(0.0);
            continue;
        }
        out.computation.push_back(reduction_percent(opt[i], steps[i]));
        out.communication.push_back(reduction_percent(com[i], steps[i]));
        out.avg_computation += out.computation.back();
        out.avg_communication += out.communication.back();
        ++counted;
    }
    if (counted > 0) {
        out.avg_computation /= counted;
        out.avg_communication /= counted;
    }
    return out;
}

}  // namespace mgrid::trigger
