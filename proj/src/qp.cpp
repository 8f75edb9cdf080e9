#include "mgrid/qp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mgrid::dmpc {

QPWeights QPWeights::diagonal(int horizon, double rho, double v_lo, double v_hi, double slack_penalty) {
    QPWeights w;
    w.q = Eigen::MatrixXd::Identity(horizon, horizon);
    w.r = rho * Eigen::MatrixXd::Identity(horizon, horizon);
    w.v_lo = v_lo;
    w.v_hi = v_hi;
    w.slack_penalty = slack_penalty;
    return w;
}

void QPWeights::validate() const {
    if (q.rows() != q.cols() || r.rows() != r.cols() || q.rows() != r.rows()) {
        throw std::invalid_argument("Q and R must be square with matching size");
    }
    if (!(v_lo < v_hi)) throw std::invalid_argument("voltage bounds need v_lo < v_hi");
    if (!(slack_penalty > 0.0)) throw std::invalid_argument("slack penalty must be positive");
    Eigen::LLT<Eigen::MatrixXd> lq(q), lr(r);
    if (lq.info() != Eigen::Success) throw std::invalid_argument("Q must be positive definite");
    if (lr.info() != Eigen::Success) throw std::invalid_argument("R must be positive definite");
}

ActiveSetResult solve_active_set(const DenseQP& qp, const Eigen::VectorXd& z0, int max_iterations) {
    const Eigen::Index n = qp.h.rows();
    const Eigen::Index m = qp.a.rows();
    ActiveSetResult res;
    res.z = z0;
    res.lambda = Eigen::VectorXd::Zero(m);

    const double scale_b = 1.0 + qp.b.lpNorm<Eigen::Infinity>();
    std::vector<Eigen::Index> work;
    for (Eigen::Index i = 0; i < m; ++i) {
        if ((qp.a.row(i) * res.z)(0) > qp.b[i] + 1e-9 * scale_b) {
            throw std::invalid_argument("active-set start point is infeasible");
        }
    }

    // After an unblocked full step the iterate is the minimizer on the current
    // working set; only the multipliers need checking then. Testing |p| against
    // a tolerance instead stalls when the KKT matrix is badly scaled.
    bool at_subspace_min = false;
    for (int it = 0; it < max_iterations; ++it) {
        res.iterations = it + 1;
        const Eigen::Index k = static_cast<Eigen::Index>(work.size());
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
        kkt.topLeftCorner(n, n) = qp.h;
        for (Eigen::Index j = 0; j < k; ++j) {
            kkt.block(n + j, 0, 1, n) = qp.a.row(work[j]);
            kkt.block(0, n + j, n, 1) = qp.a.row(work[j]).transpose();
        }
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + k);
        rhs.head(n) = -(qp.h * res.z + qp.c);
        const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
        const Eigen::VectorXd p = sol.head(n);

        if (at_subspace_min || p.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + res.z.lpNorm<Eigen::Infinity>())) {
            // The KKT solve gives multipliers for z + p, so take the (tiny) step.
            at_subspace_min = false;
            res.z += p;
            Eigen::Index worst = -1;
            double most_negative = 0.0;
            for (Eigen::Index j = 0; j < k; ++j) {
                if (sol[n + j] < most_negative) {
                    most_negative = sol[n + j];
                    worst = j;
                }
            }
            if (worst < 0) {
                res.lambda.setZero();
                for (Eigen::Index j = 0; j < k; ++j) res.lambda[work[j]] = sol[n + j];
                res.converged = true;
                return res;
            }
            work.erase(work.begin() + worst);
            continue;
        }

        double alpha = 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (std::find(work.begin(), work.end(), i) != work.end()) continue;
            const double ap = qp.a.row(i).dot(p);
            if (ap <= 1e-14 * (1.0 + qp.a.row(i).norm() * p.norm())) continue;
            const double slack = qp.b[i] - qp.a.row(i).dot(res.z);
            const double step = std::max(0.0, slack) / ap;
            if (step < alpha) {
                alpha = step;
                blocking = i;
            }
        }
        res.z += alpha * p;
        if (blocking >= 0) work.push_back(blocking);
        at_subspace_min = blocking < 0;
    }
    return res;
}

double kkt_residual(const DenseQP& qp, const Eigen::VectorXd& z, const Eigen::VectorXd& lambda) {
    const Eigen::VectorXd grad = qp.h * z + qp.c + qp.a.transpose() * lambda;
    const Eigen::VectorXd viol = qp.a * z - qp.b;
    const double scale_c = 1.0 + qp.c.lpNorm<Eigen::Infinity>();
    const double scale_b = 1.0 + qp.b.lpNorm<Eigen::Infinity>();
    double r = grad.lpNorm<Eigen::Infinity>() / scale_c;
    for (Eigen::Index i = 0; i < viol.size(); ++i) {
        r = std::max(r, std::max(0.0, viol[i]) / scale_b);
        r = std::max(r, std::max(0.0, -lambda[i]) / scale_c);
        r = std::max(r, std::abs(lambda[i] * viol[i]) / (scale_c * scale_b));
    }
    return r;
}

namespace {

Eigen::VectorXd neighbor_mean(const std::vector<Eigen::VectorXd>& preds, int horizon) {
    if (preds.empty()) throw std::invalid_argument("neighbor list must be nonempty");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(horizon);
    for (const auto& y : preds) {
        if (y.size() != horizon) throw std::invalid_argument("neighbor prediction length must equal H");
        mean += y;
    }
    return mean / static_cast<double>(preds.size());
}

}  // namespace

Eigen::VectorXd unconstrained_minimizer(const Eigen::Vector2d& y, const Eigen::VectorXd& target, const QPWeights& w,
                                        const PredictionModel& pm) {
    const Eigen::MatrixXd& g = pm.g;
    const Eigen::MatrixXd lhs = g.transpose() * w.q * g + w.r;
    return -lhs.ldlt().solve(g.transpose() * w.q * (pm.f * y - target));
}

QPSolution solve_voltage_qp(const Eigen::Vector2d& y, const std::vector<Eigen::VectorXd>& neighbor_predictions,
                            const QPWeights& w, const PredictionModel& pm,
                            const std::optional<Eigen::VectorXd>& warm_start) {
    const int h = pm.horizon;
    const Eigen::VectorXd target = neighbor_mean(neighbor_predictions, h);
    const Eigen::VectorXd free_y = pm.f * y;

    // Work in u = Xi / sigma so that unit changes in u move outputs by about 1 V.
    // G is identically zero for H = r = 1; fall back to unit scaling.
    const double g_max = pm.g.cwiseAbs().maxCoeff();
    const double sigma = g_max > 0.0 ? 1.0 / g_max : 1.0;
    const Eigen::MatrixXd gs = sigma * pm.g;

    const int n = h + 2;
    const int m = 2 * h + 2;
    DenseQP qp;
    qp.h = Eigen::MatrixXd::Zero(n, n);
    qp.h.topLeftCorner(h, h) = 2.0 * (gs.transpose() * w.q * gs + sigma * sigma * w.r);
    qp.h(h, h) = 2.0 * w.slack_penalty;
    qp.h(h + 1, h + 1) = 2.0 * w.slack_penalty;
    qp.c = Eigen::VectorXd::Zero(n);
    qp.c.head(h) = 2.0 * gs.transpose() * w.q * (free_y - target);
    qp.a = Eigen::MatrixXd::Zero(m, n);
    qp.b = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < h; ++i) {
        qp.a.block(i, 0, 1, h) = -gs.row(i);
        qp.a(i, h) = -1.0;
        qp.b[i] = free_y[i] - w.v_lo;
        qp.a.block(h + i, 0, 1, h) = gs.row(i);
        qp.a(h + i, h + 1) = -1.0;
        qp.b[h + i] = w.v_hi - free_y[i];
    }
    qp.a(2 * h, h) = -1.0;
    qp.a(2 * h + 1, h + 1) = -1.0;

    Eigen::VectorXd z0 = Eigen::VectorXd::Zero(n);
    if (warm_start && warm_start->size() == h) z0.head(h) = *warm_start / sigma;
    const Eigen::VectorXd y0 = free_y + gs * z0.head(h);
    z0[h] = std::max(0.0, (w.v_lo - y0.array()).maxCoeff());
    z0[h + 1] = std::max(0.0, (y0.array() - w.v_hi).maxCoeff());

    const ActiveSetResult as = solve_active_set(qp, z0, 50 * h);

    QPSolution out;
    out.iterations = as.iterations;
    out.sequence.xi = sigma * as.z.head(h);
    out.slack_lo = as.z[h];
    out.slack_hi = as.z[h + 1];
    out.kkt_residual = kkt_residual(qp, as.z, as.lambda);
    out.converged = as.converged;
    out.bounds_active = (as.lambda.head(2 * h).array() > 0.0).any();
    if (!as.converged) {
        out.sequence.xi = unconstrained_minimizer(y, target, w, pm);
        out.slack_lo = out.slack_hi = 0.0;
    }
    return out;
}

}  // namespace mgrid::dmpc
