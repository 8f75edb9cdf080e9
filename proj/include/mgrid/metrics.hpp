#pragma once

// Summary statistics of a run: trigger reductions, tracking error, band
// excursions and per-event settling.

#include "mgrid/conductor.hpp"
#include "mgrid/trigger.hpp"

#include <json.hpp>

#include <vector>

namespace mgrid::scenario {

struct EventSettle {
    double t = 0.0;
    double t_next = 0.0;
    double settle_2pct = -1.0;  // seconds after the event, -1 when never settled
    double settle_1pct = -1.0;
    double final_error_pct = 0.0;  // worst |v_od - v_ref| over the last 0.1 s of the interval
    double peak_error_pct = 0.0;
};

struct Metrics {
    trigger::Reductions reductions;
    long opt_count = 0;
    long com_count = 0;
    long trigger_rows = 0;

    std::vector<double> rms_error;  // V, over the final 0.5 s
    double steady_state_error_pct = 0.0;
    std::vector<double> longest_excursion;  // s outside [v_lo, v_hi] after activation
    double max_excursion = 0.0;
    bool excursion_within_limit = true;

    std::vector<EventSettle> events;

    long qp_solves = 0;
    long qp_unconverged = 0;
    double qp_max_kkt = 0.0;
    long observer_windows = 0;
    long observer_flagged = 0;

    double wall_seconds = 0.0;
    bool diverged = false;
};

inline constexpr double kExcursionLimit = 0.166;

/// `band_lo`/`band_hi` in p.u. for the excursion statistic.
Metrics compute_metrics(const RunOutput& out, double band_lo = 0.97, double band_hi = 1.03);

/// Worst |v_od - v_ref| in percent of v_ref over online DGs, t in [t0, t1).
double max_error_pct(const RunOutput& out, double t0, double t1);

/// Smallest delay after t0 from which every online DG stays within
/// band * v_ref until t1; -1 if none.
double settle_time(const RunOutput& out, double t0, double t1, double band);

/// Longest contiguous stretch (s) of DG `dg` outside [lo, hi] for t >= t0.
double longest_excursion(const RunOutput& out, int dg, double lo, double hi, double t0);

nlohmann::json metrics_json(const RunOutput& out, const Metrics& m);

}  // namespace mgrid::scenario
