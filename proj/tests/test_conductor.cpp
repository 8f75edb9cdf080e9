#include "mgrid/conductor.hpp"
#include "mgrid/export.hpp"
#include "mgrid/metrics.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mgrid::scenario;
namespace fs = std::filesystem;

namespace {

const std::string kDir = std::string(MGRID_SOURCE_DIR) + "/scenarios/";

// Scenario 1 cut after the first load step.
Scenario short_run(Mode mode = Mode::Etdmpc) {
    Scenario s = load_scenario(kDir + "4dg_scenario1.json");
    s.duration = 2.5;
    s.events.resize(2);
    s.mode = mode;
    s.validate();
    return s;
}

bool same_series(const RunOutput& a, const RunOutput& b, double t_end = 1e300) {
    std::size_t n = 0;
    for (; n < a.series.size() && n < b.series.size(); ++n) {
        const SeriesRow& x = a.series[n];
        const SeriesRow& y = b.series[n];
        if (x.t >= t_end) break;
        if (x.t != y.t || x.dg != y.dg || x.v_od != y.v_od || x.v_oq != y.v_oq || x.p != y.p || x.q != y.q ||
            x.v_n != y.v_n || x.xi != y.xi || x.online != y.online) {
            return false;
        }
    }
    return n > 0;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("one row per DG per sample and stable tracking") {
    const Scenario s = short_run();
    const RunOutput out = run(s);
    REQUIRE_FALSE(out.diverged);
    CHECK(out.series.size() == static_cast<std::size_t>(s.n_dgs() * std::lround(s.duration / s.t_s)));
    CHECK(out.triggers.size() ==
          static_cast<std::size_t>(s.n_dgs() * std::lround((s.duration - 1.0) / s.t_s_mpc)));
    const Metrics m = compute_metrics(out);
    CHECK(m.qp_unconverged == 0);
    CHECK(m.qp_max_kkt < 1e-8);
    CHECK(max_error_pct(out, 2.4, 2.5) < 1.0);
}

TEST_CASE("repeated runs export byte-identical files") {
    const Scenario s = short_run();
    const fs::path a = fs::temp_directory_path() / "mgrid_det_a";
    const fs::path b = fs::temp_directory_path() / "mgrid_det_b";
    for (const fs::path& d : {a, b}) {
        fs::remove_all(d);
        const RunOutput out = run(s);
        export_csv(out, compute_metrics(out), d.string());
    }
    for (const char* f : {"timeseries.csv", "triggers.csv", "delivery.csv", "observer.csv", "metrics.json"}) {
        CAPTURE(f);
        const std::string x = slurp(a / f);
        CHECK_FALSE(x.empty());
        CHECK(x == slurp(b / f));
    }
}

TEST_CASE("noisy runs are reproducible per seed") {
    Scenario s = short_run();
    s.duration = 1.5;
    s.events.resize(1);
    s.noise_sigma = 0.01;
    const RunOutput a = run(s);
    const RunOutput b = run(s);
    CHECK(same_series(a, b));
    s.seed = 99;
    const RunOutput c = run(s);
    CHECK_FALSE(same_series(a, c));
}

TEST_CASE("zero thresholds reproduce the time-triggered run") {
    Scenario et = short_run();
    et.thresholds = {0.0, 0.0};
    const RunOutput a = run(et);
    const RunOutput b = run(short_run(Mode::TimeTriggered));
    CHECK(same_series(a, b));
    const Metrics ma = compute_metrics(a);
    CHECK(ma.reductions.avg_computation == 0.0);
    CHECK(ma.reductions.avg_communication == 0.0);
}

TEST_CASE("time-triggered mode fires at every controller instant") {
    const RunOutput out = run(short_run(Mode::TimeTriggered));
    const Metrics m = compute_metrics(out);
    CHECK(m.opt_count == m.trigger_rows);
    CHECK(m.com_count == m.trigger_rows);
    CHECK(m.reductions.avg_computation == 0.0);
}

TEST_CASE("event-triggered mode saves computation and communication") {
    const Metrics m = compute_metrics(run(short_run()));
    CHECK(m.reductions.avg_computation > 0.0);
    CHECK(m.reductions.avg_communication > 0.0);
    CHECK(m.opt_count < m.trigger_rows);
}

TEST_CASE("an event never changes anything before its timestamp") {
    const Scenario with = short_run();
    Scenario without = with;
    without.events.pop_back();  // the load step at t = 2
    const RunOutput a = run(with);
    const RunOutput b = run(without);
    CHECK(same_series(a, b, 2.0));
    CHECK_FALSE(same_series(a, b));
}

TEST_CASE("parallel controller phase equals the sequential one") {
    Scenario s = short_run();
    const RunOutput seq = run(s);
    s.parallel = true;
    const RunOutput par = run(s);
    CHECK(same_series(seq, par));
    REQUIRE(seq.triggers.size() == par.triggers.size());
    for (std::size_t i = 0; i < seq.triggers.size(); ++i) {
        CHECK(seq.triggers[i].opt_fired == par.triggers[i].opt_fired);
        CHECK(seq.triggers[i].com_fired == par.triggers[i].com_fired);
    }
}

TEST_CASE("zero-length run exports headers only") {
    Scenario s = short_run();
    s.duration = 0.0;
    s.events.clear();
    const RunOutput out = run(s);
    CHECK(out.series.empty());
    const fs::path d = fs::temp_directory_path() / "mgrid_empty";
    fs::remove_all(d);
    export_csv(out, compute_metrics(out), d.string());
    const std::string ts = slurp(d / "timeseries.csv");
    CHECK(std::count(ts.begin(), ts.end(), '\n') == 1);
}

TEST_CASE("metrics helpers on a synthetic trace") {
    RunOutput out;
    out.n_dgs = 1;
    out.v_ref = 311.0;
    out.t_s = 0.01;
    out.duration = 1.0;
    for (int k = 0; k < 100; ++k) {
        SeriesRow r;
        r.t = k * 0.01;
        r.v_od = k >= 20 && k < 40 ? 290.0 : 311.0;
        out.series.push_back(r);
    }
    CHECK(longest_excursion(out, 0, 0.97 * 311.0, 1.03 * 311.0, 0.0) == doctest::Approx(0.2));
    CHECK(max_error_pct(out, 0.0, 1.0) == doctest::Approx(100.0 * 21.0 / 311.0));
    CHECK(settle_time(out, 0.1, 1.0, 0.01) == doctest::Approx(0.3));
    CHECK(settle_time(out, 0.5, 1.0, 0.01) == 0.0);
    for (auto& r : out.series) r.v_od = 311.0;
    CHECK(longest_excursion(out, 0, 0.97 * 311.0, 1.03 * 311.0, 0.0) == 0.0);
}
