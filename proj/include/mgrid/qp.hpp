#pragma once

// Consensus-tracking QP over the control sequence with soft output bounds,
// solved by a dense primal active-set method.

#include "mgrid/prediction.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace mgrid::dmpc {

struct QPWeights {
    Eigen::MatrixXd q;
    Eigen::MatrixXd r;
    double v_lo = 0.97 * 311.0;
    double v_hi = 1.03 * 311.0;
    double slack_penalty = 1e6;

    /// Q = I, R = rho I.
    static QPWeights diagonal(int horizon, double rho, double v_lo, double v_hi, double slack_penalty);
    void validate() const;
};

/// Generic inequality-constrained convex QP: min 0.5 z'Hz + c'z, A z <= b.
struct DenseQP {
    Eigen::MatrixXd h;
    Eigen::VectorXd c;
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
};

struct ActiveSetResult {
    Eigen::VectorXd z;
    Eigen::VectorXd lambda;  // one multiplier per inequality, zero when inactive
    int iterations = 0;
    bool converged = false;
};

/// Primal active-set method started from a feasible z0.
ActiveSetResult solve_active_set(const DenseQP& qp, const Eigen::VectorXd& z0, int max_iterations);

/// Relative KKT residual: stationarity scaled by 1 + |c|, primal and
/// complementarity violations scaled by 1 + |b|, and negative multipliers.
double kkt_residual(const DenseQP& qp, const Eigen::VectorXd& z, const Eigen::VectorXd& lambda);

struct QPSolution {
    ControlSequence sequence;
    double slack_lo = 0.0;
    double slack_hi = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = true;  // false: fallback to the clamped unconstrained minimizer
    bool bounds_active = false;
};

/// argmin |F y + G Xi - mean_j Y_j|_Q^2 + |Xi|_R^2 with soft bounds
/// v_lo <= F y + G Xi <= v_hi.
QPSolution solve_voltage_qp(const Eigen::Vector2d& y, const std::vector<Eigen::VectorXd>& neighbor_predictions,
                            const QPWeights& w, const PredictionModel& pm,
                            const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

/// Closed-form bound-free minimizer.
Eigen::VectorXd unconstrained_minimizer(const Eigen::Vector2d& y, const Eigen::VectorXd& target, const QPWeights& w,
                                        const PredictionModel& pm);

}  // namespace mgrid::dmpc
