#include "mgrid/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mgrid::agent {

DmpcAgent::DmpcAgent(AgentConfig cfg, const dmpc::PredictionModel* pm, const dmpc::QPWeights* weights)
    : cfg_(std::move(cfg)), pm_(pm), w_(weights) {
    if (pm_ == nullptr || w_ == nullptr) throw std::invalid_argument("agent needs a prediction model and weights");
    if (cfg_.neighbors.empty()) throw std::invalid_argument("agent " + std::to_string(cfg_.id + 1) + " has no neighbors");
    seq_.xi = Eigen::VectorXd::Zero(pm_->horizon);
    y_pred_ = Eigen::VectorXd::Constant(pm_->horizon, cfg_.v_ref);
}

void DmpcAgent::initialize(double v0, long k) {
    const Eigen::VectorXd flat = Eigen::VectorXd::Constant(pm_->horizon, v0);
    for (int j : cfg_.neighbors) {
        if (j == comm::kLeader) continue;
        store_[j] = {flat, k};
    }
    sent_ = {flat, k};
    y_pred_ = flat;
    seq_.xi.setZero();
    seq_.issued_at = k;
    k_m_ = k;
    fresh_data_ = false;
    forced_ = true;
}

std::vector<Eigen::VectorXd> DmpcAgent::neighbor_view(long k) const {
    std::vector<Eigen::VectorXd> out;
    for (int j : cfg_.neighbors) {
        if (j == comm::kLeader) {
            out.push_back(comm::leader_sequence(cfg_.v_ref, pm_->horizon));
            continue;
        }
        const StoredPrediction& sp = store_.at(j);
        out.push_back(trigger::holdover_prediction(sp.payload, std::max(0L, k - sp.issued_at)));
    }
    return out;
}

StepResult DmpcAgent::step(long k, const Eigen::Vector2d& y, double y_meas) {
    StepResult res;
    const int h = pm_->horizon;

    if (cfg_.always_fire || forced_) {
        res.opt_fired = true;
        res.reason = trigger::Reason::Forced;
    } else {
        const long idx = std::clamp(k - k_m_ - 1, 0L, static_cast<long>(h - 1));
        res.reason = trigger::opt_reason(y_meas, y_pred_[idx], k, k_m_, h, cfg_.thresholds.e_opt);
        if (res.reason != trigger::Reason::None) {
            res.opt_fired = true;
        } else if (cfg_.reoptimize_on_receive && fresh_data_) {
            res.opt_fired = true;
            res.reason = trigger::Reason::Neighbor;
        }
    }

    const bool forced = res.reason == trigger::Reason::Forced;
    Eigen::VectorXd y_now;
    if (res.opt_fired) {
        const dmpc::ControlSequence warm = dmpc::shift_sequence(seq_, k - k_m_);
        res.solution = dmpc::solve_voltage_qp(y, neighbor_view(k), *w_, *pm_, warm.xi);
        seq_ = res.solution->sequence;
        seq_.issued_at = k;
        k_m_ = k;
        y_pred_ = dmpc::predict_outputs(*pm_, y, seq_.xi);
        fresh_data_ = false;
        forced_ = false;
        y_now = y_pred_;
    } else {
        y_now = trigger::holdover_prediction(y_pred_, k - k_m_);
    }

    const Eigen::VectorXd held = trigger::holdover_prediction(sent_.payload, std::max(0L, k - sent_.issued_at));
    const bool stale = cfg_.com_refresh > 0 && k - sent_.issued_at >= cfg_.com_refresh;
    res.com_fired =
        cfg_.always_fire || forced || resend_ || stale || trigger::comm_trigger(y_now, held, cfg_.thresholds.e_com);
    resend_ = false;
    if (res.com_fired) {
        sent_ = {y_now, k};
        res.message = comm::PredictionMessage{cfg_.id, k, y_now};
    }

    res.xi = dmpc::first_input(dmpc::shift_sequence(seq_, k - k_m_));
    return res;
}

void DmpcAgent::receive(const comm::PredictionMessage& msg) {
    auto it = store_.find(msg.sender);
    if (it == store_.end()) return;  // not a neighbor
    it->second = {msg.payload, msg.issued_at};
    fresh_data_ = true;
}

PiAgent::PiAgent(PiGains gains, double v_ref, double t_step) : gains_(gains), v_ref_(v_ref), t_step_(t_step) {
    if (!(t_step > 0.0)) throw std::invalid_argument("PI step must be positive");
}

double PiAgent::correction(double error) const {
    const double limit = 0.2 * v_ref_;
    return std::clamp(gains_.k_p * error + gains_.k_i * integral_, -limit, limit);
}

void PiAgent::integrate(double error) {
    const double limit = 0.2 * v_ref_;
    double integral = integral_ + error * t_step_;
    if (gains_.k_i > 0.0) {
        // Integrate up to the clamp boundary, never further out.
        const double hi = (limit - gains_.k_p * error) / gains_.k_i;
        const double lo = (-limit - gains_.k_p * error) / gains_.k_i;
        if (error > 0.0 && integral > hi) integral = std::max(integral_, hi);
        if (error < 0.0 && integral < lo) integral = std::min(integral_, lo);
    }
    integral_ = integral;
}

double PiAgent::step(double error) {
    integrate(error);
    correction_ = correction(error);
    return output();
}

std::vector<double> pi_baseline_step(std::vector<PiAgent>& agents, const std::vector<double>& errors) {
    if (agents.size() != errors.size()) throw std::invalid_argument("one error per PI agent required");
    std::vector<double> out;
    out.reserve(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i) out.push_back(agents[i].step(errors[i]));
    return out;
}

}  // namespace mgrid::agent
