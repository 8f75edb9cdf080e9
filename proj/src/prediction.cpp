#include "mgrid/prediction.hpp"

#include <stdexcept>
#include <vector>

namespace mgrid::dmpc {

DiscreteModel build_discrete_model(double t_s) {
    if (!(t_s > 0.0)) throw std::invalid_argument("T_s must be positive");
    DiscreteModel m;
    m.a << 1.0, t_s, 0.0, 1.0;
    m.b << 0.0, t_s;
    m.c << 1.0, 0.0;
    m.t_s = t_s;
    return m;
}

PredictionModel build_prediction_matrices(const DiscreteModel& model, int horizon, int r) {
    if (horizon < 1 || r < 1) throw std::invalid_argument("prediction needs H >= 1 and r >= 1");
    const int n = horizon * r;

    // Markov parameters C A^m B and output rows C A^m.
    std::vector<double> markov(n);
    std::vector<Eigen::RowVector2d> obs(n + 1);
    Eigen::RowVector2d ca = model.c;
    for (int m = 0; m <= n; ++m) {
        obs[m] = ca;
        if (m < n) markov[m] = ca * model.b;
        ca = ca * model.a;
    }

    Eigen::MatrixXd toeplitz = Eigen::MatrixXd::Zero(n, n);
    for (int row = 0; row < n; ++row) {
        for (int col = 0; col <= row; ++col) toeplitz(row, col) = markov[row - col];
    }
    Eigen::MatrixXd select = Eigen::MatrixXd::Zero(horizon, n);
    Eigen::MatrixXd hold = Eigen::MatrixXd::Zero(n, horizon);
    for (int h = 0; h < horizon; ++h) {
        select(h, (h + 1) * r - 1) = 1.0;
        for (int j = 0; j < r; ++j) hold(h * r + j, h) = 1.0;
    }

    PredictionModel pm;
    pm.model = model;
    pm.horizon = horizon;
    pm.r = r;
    pm.f.resize(horizon, 2);
    for (int h = 0; h < horizon; ++h) pm.f.row(h) = obs[(h + 1) * r];
    pm.g = select * toeplitz * hold;
    return pm;
}

Eigen::VectorXd predict_outputs(const PredictionModel& pm, const Eigen::Vector2d& y, const Eigen::VectorXd& xi) {
    if (xi.size() != pm.horizon) throw std::invalid_argument("input sequence length must equal H");
    return pm.f * y + pm.g * xi;
}

Eigen::VectorXd rollout_fine(const DiscreteModel& model, const Eigen::Vector2d& y, const Eigen::VectorXd& xi, int r) {
    Eigen::VectorXd out(xi.size());
    Eigen::Vector2d s = y;
    for (Eigen::Index h = 0; h < xi.size(); ++h) {
        for (int j = 0; j < r; ++j) s = model.a * s + model.b * xi[h];
        out[h] = model.c * s;
    }
    return out;
}

ControlSequence shift_sequence(const ControlSequence& seq, long m) {
    const long n = seq.xi.size();
    ControlSequence out;
    out.xi = Eigen::VectorXd::Zero(n);
    out.issued_at = seq.issued_at;
    if (m < 0) throw std::invalid_argument("shift must be non-negative");
    for (long j = m; j < n; ++j) out.xi[j - m] = seq.xi[j];
    return out;
}

double first_input(const ControlSequence& seq) {
    if (seq.xi.size() == 0) throw std::invalid_argument("empty control sequence");
    return seq.xi[0];
}

}  // namespace mgrid::dmpc
