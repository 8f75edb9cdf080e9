#pragma once

// Two-time-scale prediction for the linearized double integrator: Euler model
// on the fine grid T_s, decisions held for r fine steps, outputs sampled every r.

#include <Eigen/Dense>

namespace mgrid::dmpc {

struct DiscreteModel {
    Eigen::Matrix2d a;
    Eigen::Vector2d b;
    Eigen::RowVector2d c;
    double t_s = 0.0;
};

DiscreteModel build_discrete_model(double t_s);

struct PredictionModel {
    DiscreteModel model;
    int horizon = 0;
    int r = 0;
    Eigen::MatrixXd f;  // H x 2
    Eigen::MatrixXd g;  // H x H

    double t_s_mpc() const { return model.t_s * r; }
};

/// Selected rows of the full Hr-step Toeplitz prediction composed with the
/// r-step input hold.
PredictionModel build_prediction_matrices(const DiscreteModel& model, int horizon, int r);

struct ControlSequence {
    Eigen::VectorXd xi;
    long issued_at = 0;
};

struct OutputPrediction {
    Eigen::VectorXd y;
    long issued_at = 0;
};

/// Y = F y + G Xi.
Eigen::VectorXd predict_outputs(const PredictionModel& pm, const Eigen::Vector2d& y, const Eigen::VectorXd& xi);

/// Reference rollout: steps the Euler model Hr times with each entry of xi
/// held for r steps and samples the output every r steps.
Eigen::VectorXd rollout_fine(const DiscreteModel& model, const Eigen::Vector2d& y, const Eigen::VectorXd& xi, int r);

/// Drops the first m entries and pads the tail with zeros.
ControlSequence shift_sequence(const ControlSequence& seq, long m);

double first_input(const ControlSequence& seq);

}  // namespace mgrid::dmpc
