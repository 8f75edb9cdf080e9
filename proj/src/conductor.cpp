#include "mgrid/conductor.hpp"

#include "mgrid/agent.hpp"
#include "mgrid/errors.hpp"
#include "mgrid/linearization.hpp"
#include "mgrid/log.hpp"
#include "mgrid/network.hpp"
#include "mgrid/prediction.hpp"
#include "mgrid/qp.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <random>

namespace mgrid::scenario {

namespace {

long event_step(double t, double dt) { return static_cast<long>(std::ceil(t / dt - 1e-9)); }

long ceil_div(long a, long b) { return (a + b - 1) / b; }

struct DgControl {
    double xi = 0.0;
    double f_hat = 0.0;    // estimate in effect over the current controller interval
    double v_n_hold = 0.0; // setpoint for sampled linearization and the PI baseline
    double g0 = 0.0;       // controller's nominal input gain
    observer::Estimate est;
    std::optional<observer::Estimate> last_valid;
    bool bank_live = false;
    bool window_clipped = false;
    bool paused = false;
    long plug_step = -1;
    // Trajectory the controller planned from its last instant: the
    // continuous law tracks y1 = y1a + y2a*tau + xi*tau^2/2 between instants.
    double anchor_t = 0.0;
    double anchor_y1 = 0.0;
    double anchor_y2 = 0.0;
};

// Commanded v_od acceleration: the planned xi - f_hat plus a PD pull toward the
// planned trajectory, which absorbs fast electrical disturbances (load
// switching steps i_od and hence dv_od/dt) that a 1/T_s_mpc loop cannot.
double commanded_accel(const DgControl& c, const fl::LinearizedOutput& y, double t, double wn) {
    const double tau = t - c.anchor_t;
    const double e1 = y.y1 - (c.anchor_y1 + c.anchor_y2 * tau + 0.5 * c.xi * tau * tau);
    const double e2 = y.y2 - (c.anchor_y2 + c.xi * tau);
    return c.xi - c.f_hat - wn * wn * e1 - 2.0 * wn * e2;
}

}  // namespace

RunOutput run(const Scenario& s) {
    const auto wall0 = std::chrono::steady_clock::now();
    s.validate();
    log::init_from_env();

    const int nd = s.n_dgs();
    const long n_total = s.steps_total();
    const long ns = s.steps_per_sample();
    const long nm = s.steps_per_mpc();
    const int r = s.ratio();
    const double dt = s.dt;
    const long window_len = std::lround(s.window.length() / dt);

    RunOutput out;
    out.scenario = s.name;
    out.mode = mode_name(s.mode);
    out.n_dgs = nd;
    out.t_s = s.t_s;
    out.v_ref = s.v_ref;
    out.duration = s.duration;
    for (const auto& d : s.dgs) out.dg_names.push_back(d.name);
    for (const Event& e : s.events) {
        if (e.kind == EventKind::SecondaryOn) out.secondary_on = e.t;
        if (e.kind != EventKind::LinkDown && e.kind != EventKind::LinkUp) out.event_times.push_back(e.t);
    }

    std::vector<physics::DGParams> params;
    std::vector<int> buses;
    for (const auto& d : s.dgs) {
        params.push_back(d.params);
        buses.push_back(d.bus);
    }
    physics::Plant plant(params, buses, s.network);
    physics::PlantState st = plant.initial_state(s.v_ref);

    const dmpc::PredictionModel pm =
        dmpc::build_prediction_matrices(dmpc::build_discrete_model(s.t_s), s.horizon, r);
    const dmpc::QPWeights weights =
        dmpc::QPWeights::diagonal(s.horizon, s.rho, s.v_lo_pu * s.v_ref, s.v_hi_pu * s.v_ref, s.slack_penalty);
    const comm::CommGraph graph = s.graph();
    const comm::LinkSchedule links = s.link_schedule();

    std::vector<agent::DmpcAgent> agents;
    std::vector<agent::PiAgent> pis;
    std::vector<std::vector<double>> pi_store(nd, std::vector<double>(nd, s.v_ref));
    for (int i = 0; i < nd; ++i) {
        agent::AgentConfig cfg;
        cfg.id = i;
        cfg.neighbors = graph.neighbors(i);
        cfg.v_ref = s.v_ref;
        cfg.thresholds = {s.e_opt_volts(), s.e_com_volts()};
        cfg.always_fire = s.mode == Mode::TimeTriggered;
        cfg.reoptimize_on_receive = s.reoptimize_on_receive;
        cfg.com_refresh = s.com_refresh;
        agents.emplace_back(cfg, &pm, &weights);
        pis.emplace_back(s.pi, s.v_ref, dt);
    }

    std::vector<observer::VolterraBank> banks(nd, observer::VolterraBank(s.kernels));
    std::vector<DgControl> ctl(nd);
    for (int i = 0; i < nd; ++i) {
        ctl[i].v_n_hold = s.v_ref;
        ctl[i].g0 = fl::compute_g(params[i]) * (1.0 + s.gain_error);
    }

    std::mt19937_64 rng(s.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> sample(nd, 0.0);

    std::vector<physics::DGDrive> drives(nd);
    for (auto& d : drives) d.v_n = s.v_ref;

    bool active = false;
    long n_on = -1;
    std::size_t next_event = 0;

    auto dmpc_mode = s.mode != Mode::Pi;
    auto pi_mean = [&](int i) {
        double mean = 0.0;
        const auto nb = graph.neighbors(i);
        for (int j : nb) mean += j == comm::kLeader ? s.v_ref : pi_store[i][j];
        return mean / static_cast<double>(nb.size());
    };

    const double wn = s.ancillary_bandwidth;
    auto true_output = [&](int i) {
        const physics::DGState& x = st.dgs[i];
        return fl::linearized_output(x, params[i], physics::kNominalOmega - params[i].m_p * x.p);
    };
    // The prediction model is an Euler chain on the T_s grid, whose velocity
    // is the forward difference: continuous velocity + T_s*xi/2. Starting the
    // reference at v + T_s*(xi_prev - xi)/2 with constant acceleration xi puts
    // it exactly on the Euler positions at every grid point, and the agent is
    // handed z1 + T_s*xi_prev/2 as its velocity state.
    auto set_anchor = [&](int i, double xi_prev) {
        const fl::LinearizedOutput y = true_output(i);
        ctl[i].anchor_t = st.t;
        ctl[i].anchor_y1 = y.y1;
        ctl[i].anchor_y2 = y.y2 + 0.5 * s.t_s * (xi_prev - ctl[i].xi);
    };

    auto observer_input = [&](int i) {
        if (s.mode == Mode::Pi || s.linearization == Linearization::Sampled) return ctl[i].g0 * ctl[i].v_n_hold;
        return commanded_accel(ctl[i], true_output(i), st.t, wn);
    };

    auto rebuild_drive = [&](int i) {
        physics::DGDrive& d = drives[i];
        d.omega_n = physics::kNominalOmega;
        d.law = nullptr;
        d.v_n = s.v_ref;
        if (!active || ctl[i].paused) return;
        if (s.mode == Mode::Pi) {
            // Proportional part on the live v_od; neighbor values are the
            // last received ones and the integral moves once per plant step.
            const agent::PiAgent pi = pis[i];
            const double mean = pi_mean(i);
            d.law = [pi, mean, v_ref = s.v_ref](const physics::DGState& x, const physics::Dq&, double, double) {
                return v_ref + pi.correction(mean - x.v_od);
            };
            return;
        }
        if (s.linearization == Linearization::Sampled) {
            d.v_n = ctl[i].v_n_hold;
            return;
        }
        const physics::DGParams p = params[i];
        const DgControl c = ctl[i];
        d.law = [p, c, wn](const physics::DGState& x, const physics::Dq& vb, double w, double t) {
            const double a = commanded_accel(c, fl::linearized_output(x, p, w), t, wn);
            return (a - fl::compute_f(x, p, vb.x(), w)) / c.g0;
        };
    };

    for (long n = 0; n < n_total; ++n) {
        const double t = static_cast<double>(n) * dt;
        bool drives_dirty = false;

        // Events due at this step. Activation happens before the controllers
        // run; physical switching is applied after them so the state sampled
        // at a coinciding controller instant is the pre-event one.
        std::vector<const Event*> due;
        while (next_event < s.events.size() && event_step(s.events[next_event].t, dt) <= n) {
            const Event& e = s.events[next_event++];
            log::get().info("t={:.4f} {} {}", t, event_kind_name(e.kind), e.target);
            if (e.kind == EventKind::SecondaryOn) {
                active = true;
                n_on = n;
                for (int i = 0; i < nd; ++i) {
                    set_anchor(i, 0.0);
                    agents[i].initialize(st.dgs[i].v_od, 0);
                    for (int j = 0; j < nd; ++j) pi_store[i][j] = st.dgs[j].v_od;
                }
                drives_dirty = true;
            } else {
                due.push_back(&e);
            }
        }

        // Sampled outputs; the noise stream advances every step for every DG.
        for (int i = 0; i < nd; ++i) {
            const double eps = s.noise_sigma > 0.0 ? s.noise_sigma * noise(rng) : 0.0;
            sample[i] = st.dgs[i].v_od + eps;
        }

        const bool mpc_instant = active && (n - n_on) % nm == 0;
        const long k = active ? (n - n_on) / nm : 0;

        // Observers: one window ending at every controller instant.
        if (active) {
            for (int i = 0; i < nd; ++i) {
                DgControl& c = ctl[i];
                if (c.paused) continue;
                const long n_k = n_on + ceil_div(n - n_on, nm) * nm;
                const long nominal = n_k - window_len;
                const long start = std::max({nominal, n_on, c.plug_step});
                const double u = observer_input(i);
                if (n == start) {
                    banks[i].reset(sample[i], u);
                    c.bank_live = true;
                    c.window_clipped = start != nominal;
                } else if (n > start && c.bank_live) {
                    banks[i].advance(sample[i], u, dt);
                }
                if (mpc_instant) {
                    observer::Estimate e;
                    if (c.bank_live && !c.window_clipped && banks[i].t_loc() > 0.0) {
                        e = observer::estimate(observer::assemble_system(banks[i]), c.last_valid);
                    } else {
                        e.f_hat = c.last_valid ? c.last_valid->f_hat : 0.0;
                        e.z0_hat = sample[i];
                        e.z1_hat = 0.0;
                        e.flagged = true;
                    }
                    if (!e.flagged) c.last_valid = e;
                    c.est = e;
                    c.bank_live = false;
                    out.observer.push_back({t, i, e});
                }
            }
        }

        // PI baseline: integral once per plant step, exchange every T_s.
        const bool pi_instant = !dmpc_mode && active && (n - n_on) % ns == 0;
        if (!dmpc_mode && active) {
            for (int i = 0; i < nd; ++i) {
                if (!ctl[i].paused) pis[i].integrate(pi_mean(i) - sample[i]);
            }
            drives_dirty = true;
        }

        // Controllers, then two-phase message exchange.
        if (dmpc_mode ? mpc_instant : pi_instant) {
            const long k_msg = dmpc_mode ? k : (n - n_on) / ns;
            std::vector<comm::PredictionMessage> msgs;
            if (dmpc_mode) {
                std::vector<std::optional<agent::StepResult>> results(nd);
                auto step_one = [&](int i) {
                    const Eigen::Vector2d y(ctl[i].est.z0_hat, ctl[i].est.z1_hat + 0.5 * s.t_s * ctl[i].xi);
                    return agents[i].step(k, y, sample[i]);
                };
                if (s.parallel) {
                    std::vector<std::future<agent::StepResult>> fut(nd);
                    for (int i = 0; i < nd; ++i) {
                        if (!ctl[i].paused) fut[i] = std::async(std::launch::async, step_one, i);
                    }
                    for (int i = 0; i < nd; ++i) {
                        if (!ctl[i].paused) results[i] = fut[i].get();
                    }
                } else {
                    for (int i = 0; i < nd; ++i) {
                        if (!ctl[i].paused) results[i] = step_one(i);
                    }
                }
                for (int i = 0; i < nd; ++i) {
                    if (!results[i]) continue;
                    const agent::StepResult& res = *results[i];
                    DgControl& c = ctl[i];
                    const double xi_prev = c.xi;
                    c.xi = res.xi;
                    c.f_hat = c.est.f_hat;
                    c.v_n_hold = fl::auxiliary_to_actual(c.xi, c.f_hat, c.g0);
                    set_anchor(i, xi_prev);
                    out.triggers.push_back({k, i, res.opt_fired, res.com_fired, res.reason});
                    if (res.solution) {
                        const auto& q = *res.solution;
                        out.qp.push_back({k, i, q.kkt_residual, q.iterations, q.converged, q.bounds_active,
                                          std::max(q.slack_lo, q.slack_hi)});
                        if (!q.converged) log::get().warn("QP for DG{} at step {} hit the iteration cap", i + 1, k);
                    }
                    if (res.message) msgs.push_back(*res.message);
                }
            } else {
                for (int i = 0; i < nd; ++i) {
                    if (ctl[i].paused) continue;
                    Eigen::VectorXd payload(1);
                    payload[0] = sample[i];
                    msgs.push_back({i, k_msg, payload});
                }
            }
            for (const comm::Delivery& d : comm::deliver(graph, msgs, links, t)) {
                out.deliveries.push_back({k_msg, d.from, d.to, d.delivered});
                if (!d.delivered) continue;
                if (dmpc_mode) {
                    agents[d.to].receive(d.message);
                } else {
                    pi_store[d.to][d.from] = d.message.payload[0];
                }
            }
            drives_dirty = true;
        }

        for (const Event* ev : due) {
            const Event& e = *ev;
            switch (e.kind) {
                case EventKind::LoadConnect: plant.set_load(st, e.index, true); break;
                case EventKind::LoadDisconnect: plant.set_load(st, e.index, false); break;
                case EventKind::BreakerOpen: plant.set_line(st, e.index, false); break;
                case EventKind::BreakerClose: plant.set_line(st, e.index, true); break;
                case EventKind::DgUnplug:
                    plant.unplug_dg(st, e.index);
                    ctl[e.index].paused = true;
                    ctl[e.index].bank_live = false;
                    break;
                case EventKind::DgPlug:
                    plant.plug_dg(st, e.index);
                    ctl[e.index].paused = false;
                    ctl[e.index].plug_step = n + 1;
                    ctl[e.index].bank_live = false;
                    ctl[e.index].xi = 0.0;
                    ctl[e.index].f_hat = 0.0;
                    set_anchor(e.index, 0.0);
                    agents[e.index].force_next();
                    pis[e.index] = agent::PiAgent(s.pi, s.v_ref, dt);
                    break;
                case EventKind::LinkUp:
                    // Both ends resend so that whatever the outage swallowed
                    // is replaced; delivery itself follows the link schedule.
                    agents[e.link_from].force_transmit();
                    if (e.bidirectional) agents[e.link_to].force_transmit();
                    break;
                case EventKind::SecondaryOn:
                case EventKind::LinkDown: break;
            }
            drives_dirty = true;
        }

        if (drives_dirty) {
            for (int i = 0; i < nd; ++i) rebuild_drive(i);
        }

        if (n % ns == 0) {
            const std::vector<physics::Dq> vb = plant.bus_voltages(st);
            for (int i = 0; i < nd; ++i) {
                const physics::DGState& x = st.dgs[i];
                const physics::Dq vl =
                    physics::frame_transform(vb[plant.dg_bus(i)], x.delta, physics::FrameDirection::ToLocal);
                SeriesRow row;
                row.t = t;
                row.dg = i;
                row.v_od = x.v_od;
                row.v_oq = x.v_oq;
                row.p = x.p;
                row.q = x.q;
                row.omega = drives[i].omega_n - params[i].m_p * x.p;
                row.v_n = drives[i].setpoint(params[i], x, vl);
                row.xi = ctl[i].xi;
                row.f_hat = ctl[i].est.f_hat;
                row.z0_hat = ctl[i].est.z0_hat;
                row.z1_hat = ctl[i].est.z1_hat;
                row.online = plant.online(i);
                out.series.push_back(row);
            }
        }

        try {
            st = physics::integrate_step(plant, st, drives, dt);
        } catch (const PlantDivergence& e) {
            out.diverged = true;
            out.diagnostic = e.what();
            log::get().error("{}", e.what());
            break;
        }
    }

    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return out;
}

}  // namespace mgrid::scenario
