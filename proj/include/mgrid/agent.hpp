#pragma once

// Per-DG secondary controller: event-triggered DMPC (one agent per DG) and
// the distributed PI baseline.

#include "mgrid/comm.hpp"
#include "mgrid/prediction.hpp"
#include "mgrid/qp.hpp"
#include "mgrid/trigger.hpp"

#include <map>
#include <optional>
#include <vector>

namespace mgrid::agent {

struct AgentConfig {
    int id = 0;
    std::vector<int> neighbors;  // may contain comm::kLeader
    double v_ref = 311.0;
    trigger::TriggerThresholds thresholds;
    bool always_fire = false;  // time-triggered baseline
    bool reoptimize_on_receive = true;
    long com_refresh = 0;  // steps; resend once the last sent prediction is this old (0 = never)
};

struct StoredPrediction {
    Eigen::VectorXd payload;
    long issued_at = 0;
};

struct StepResult {
    double xi = 0.0;
    bool opt_fired = false;
    bool com_fired = false;
    trigger::Reason reason = trigger::Reason::None;
    std::optional<comm::PredictionMessage> message;
    std::optional<dmpc::QPSolution> solution;
};

class DmpcAgent {
public:
    DmpcAgent(AgentConfig cfg, const dmpc::PredictionModel* pm, const dmpc::QPWeights* weights);

    /// Seeds every neighbor slot with a flat sequence at `v0` issued at step k.
    void initialize(double v0, long k);

    /// Forces an optimization and a transmission at the next step (start-up
    /// or reconnection).
    void force_next() { forced_ = true; }

    /// Forces a transmission at the next step without forcing an optimization
    /// (a restored link: the sender cannot know what the outage swallowed).
    void force_transmit() { resend_ = true; }

    /// One controller instant: y = [output estimate, derivative estimate],
    /// y_meas = sampled output used by the prediction-error test.
    StepResult step(long k, const Eigen::Vector2d& y, double y_meas);

    /// Stores a delivered neighbor message (applied after all agents stepped).
    void receive(const comm::PredictionMessage& msg);

    /// Neighbor predictions as seen at step k (holdover of the stored payloads).
    std::vector<Eigen::VectorXd> neighbor_view(long k) const;

    const AgentConfig& config() const { return cfg_; }
    const dmpc::ControlSequence& sequence() const { return seq_; }
    const StoredPrediction& stored(int neighbor) const { return store_.at(neighbor); }
    const StoredPrediction& last_sent() const { return sent_; }

private:
    AgentConfig cfg_;
    const dmpc::PredictionModel* pm_;
    const dmpc::QPWeights* w_;

    std::map<int, StoredPrediction> store_;
    bool fresh_data_ = false;
    bool forced_ = true;
    bool resend_ = false;

    dmpc::ControlSequence seq_;  // as issued at k_m_
    Eigen::VectorXd y_pred_;     // prediction made at k_m_
    long k_m_ = 0;
    StoredPrediction sent_;
};

struct PiGains {
    double k_p = 0.5;
    double k_i = 20.0;
};

/// Distributed PI on the neighbor-averaged voltage error, with the correction
/// clamped to +-0.2 p.u. and integration stopped while clamped.
class PiAgent {
public:
    PiAgent(PiGains gains, double v_ref, double t_step);

    /// e = mean_j(v_j) - v_own. Integrates e over one step, then returns the
    /// new setpoint.
    double step(double error);

    /// Clamped k_p*e + k_i*integral for the current integral; no state change.
    double correction(double error) const;

    /// Advances the integral by e*t_step, stopping where the raw output
    /// reaches the clamp.
    void integrate(double error);

    double output() const { return v_ref_ + correction_; }
    double integral() const { return integral_; }

private:
    PiGains gains_;
    double v_ref_;
    double t_step_;
    double integral_ = 0.0;
    double correction_ = 0.0;
};

/// pi_baseline_step over all DGs: errors in, setpoints out.
std::vector<double> pi_baseline_step(std::vector<PiAgent>& agents, const std::vector<double>& errors);

}  // namespace mgrid::agent
