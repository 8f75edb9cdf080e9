#include "mgrid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace mgrid::scenario {

namespace {

constexpr double kTimeEps = 1e-9;

}  // namespace

double max_error_pct(const RunOutput& out, double t0, double t1) {
    double worst = 0.0;
    for (const SeriesRow& r : out.series) {
        if (!r.online || r.t < t0 - kTimeEps || r.t >= t1 - kTimeEps) continue;
        worst = std::max(worst, std::abs(r.v_od - out.v_ref));
    }
    return 100.0 * worst / out.v_ref;
}

double settle_time(const RunOutput& out, double t0, double t1, double band) {
    // Last sample in [t0, t1) outside the band; settled right after it.
    double last_bad = -1.0;
    bool any = false;
    for (const SeriesRow& r : out.series) {
        if (!r.online || r.t < t0 - kTimeEps || r.t >= t1 - kTimeEps) continue;
        any = true;
        if (std::abs(r.v_od - out.v_ref) > band * out.v_ref) last_bad = std::max(last_bad, r.t);
    }
    if (!any) return -1.0;
    if (last_bad < 0.0) return 0.0;
    const double settled_at = last_bad + out.t_s;
    if (settled_at >= t1 - kTimeEps) return -1.0;
    return settled_at - t0;
}

double longest_excursion(const RunOutput& out, int dg, double lo, double hi, double t0) {
    double longest = 0.0;
    long run = 0;
    for (const SeriesRow& r : out.series) {
        if (r.dg != dg || r.t < t0 - kTimeEps) continue;
        if (r.online && (r.v_od < lo || r.v_od > hi)) {
            ++run;
            longest = std::max(longest, static_cast<double>(run) * out.t_s);
        } else {
            run = 0;
        }
    }
    return longest;
}

Metrics compute_metrics(const RunOutput& out, double band_lo, double band_hi) {
    Metrics m;
    m.diverged = out.diverged;
    m.wall_seconds = out.wall_seconds;
    m.reductions = trigger::reduction_metrics(out.triggers, out.n_dgs);
    m.trigger_rows = static_cast<long>(out.triggers.size());
    for (const auto& r : out.triggers) {
        m.opt_count += r.opt_fired ? 1 : 0;
        m.com_count += r.com_fired ? 1 : 0;
    }

    const double t_end = out.series.empty() ? 0.0 : out.series.back().t + out.t_s;
    const double tail0 = std::max(0.0, t_end - 0.5);
    m.rms_error.assign(out.n_dgs, 0.0);
    std::vector<long> counts(out.n_dgs, 0);
    double worst_mean = 0.0;
    std::vector<double> mean(out.n_dgs, 0.0);
    for (const SeriesRow& r : out.series) {
        if (!r.online || r.t < tail0 - kTimeEps) continue;
        const double e = r.v_od - out.v_ref;
        m.rms_error[r.dg] += e * e;
        mean[r.dg] += e;
        ++counts[r.dg];
    }
    for (int i = 0; i < out.n_dgs; ++i) {
        if (counts[i] == 0) continue;
        m.rms_error[i] = std::sqrt(m.rms_error[i] / counts[i]);
        worst_mean = std::max(worst_mean, std::abs(mean[i] / counts[i]));
    }
    m.steady_state_error_pct = 100.0 * worst_mean / out.v_ref;

    const double t_on = out.secondary_on >= 0.0 ? out.secondary_on : out.duration;
    m.longest_excursion.assign(out.n_dgs, 0.0);
    for (int i = 0; i < out.n_dgs; ++i) {
        m.longest_excursion[i] = longest_excursion(out, i, band_lo * out.v_ref, band_hi * out.v_ref, t_on);
        m.max_excursion = std::max(m.max_excursion, m.longest_excursion[i]);
    }
    m.excursion_within_limit = m.max_excursion < kExcursionLimit;

    std::vector<double> times;
    for (double t : out.event_times) {
        if (out.secondary_on >= 0.0 && t >= out.secondary_on - kTimeEps) times.push_back(t);
    }
    for (std::size_t e = 0; e < times.size(); ++e) {
        EventSettle ev;
        ev.t = times[e];
        ev.t_next = e + 1 < times.size() ? times[e + 1] : t_end;
        if (ev.t_next - ev.t < kTimeEps) continue;
        ev.settle_2pct = settle_time(out, ev.t, ev.t_next, 0.02);
        ev.settle_1pct = settle_time(out, ev.t, ev.t_next, 0.01);
        ev.final_error_pct = max_error_pct(out, std::max(ev.t, ev.t_next - 0.1), ev.t_next);
        ev.peak_error_pct = max_error_pct(out, ev.t, ev.t_next);
        m.events.push_back(ev);
    }

    for (const QpRow& q : out.qp) {
        ++m.qp_solves;
        m.qp_unconverged += q.converged ? 0 : 1;
        m.qp_max_kkt = std::max(m.qp_max_kkt, q.kkt_residual);
    }
    for (const ObserverRow& o : out.observer) {
        ++m.observer_windows;
        m.observer_flagged += o.est.flagged ? 1 : 0;
    }
    return m;
}

namespace {

double sig9(double v) {
    if (!std::isfinite(v)) return v;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

nlohmann::json sig9(const std::vector<double>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(sig9(x));
    return a;
}

}  // namespace

nlohmann::json metrics_json(const RunOutput& out, const Metrics& m) {
    nlohmann::json j;
    j["scenario"] = out.scenario;
    j["mode"] = out.mode;
    j["dgs"] = out.dg_names;
    j["diverged"] = out.diverged;
    if (out.diverged) j["diagnostic"] = out.diagnostic;
    j["reductions"] = {
        {"computation_pct", sig9(m.reductions.computation)},
        {"communication_pct", sig9(m.reductions.communication)},
        {"avg_computation_pct", sig9(m.reductions.avg_computation)},
        {"avg_communication_pct", sig9(m.reductions.avg_communication)},
        {"optimizations", m.opt_count},
        {"transmissions", m.com_count},
        {"controller_steps", m.trigger_rows},
    };
    j["tracking"] = {
        {"rms_error_final_V", sig9(m.rms_error)},
        {"steady_state_error_pct", sig9(m.steady_state_error_pct)},
    };
    j["excursion"] = {
        {"longest_s", sig9(m.longest_excursion)},
        {"max_s", sig9(m.max_excursion)},
        {"limit_s", kExcursionLimit},
        {"within_limit", m.excursion_within_limit},
    };
    nlohmann::json ev = nlohmann::json::array();
    for (const auto& e : m.events) {
        ev.push_back({{"t", sig9(e.t)},
                      {"t_next", sig9(e.t_next)},
                      {"settle_2pct_s", sig9(e.settle_2pct)},
                      {"settle_1pct_s", sig9(e.settle_1pct)},
                      {"final_error_pct", sig9(e.final_error_pct)},
                      {"peak_error_pct", sig9(e.peak_error_pct)}});
    }
    j["events"] = ev;
    j["qp"] = {{"solves", m.qp_solves}, {"unconverged", m.qp_unconverged}, {"max_kkt_residual", sig9(m.qp_max_kkt)}};
    j["observer"] = {{"windows", m.observer_windows}, {"flagged", m.observer_flagged}};
    return j;
}

}  // namespace mgrid::scenario
