#include "mgrid/errors.hpp"
#include "mgrid/scenario.hpp"

#include <doctest.h>

#include <fstream>

using namespace mgrid::scenario;
using nlohmann::json;

namespace {

const std::string kDir = std::string(MGRID_SOURCE_DIR) + "/scenarios/";

json base() {
    std::ifstream in(kDir + "4dg_scenario1.json");
    return json::parse(in);
}

void check_rejects(const json& j, const std::string& fragment) {
    CHECK_THROWS_WITH_AS(parse_scenario(j), doctest::Contains(fragment.c_str()), mgrid::ScenarioError);
}

}  // namespace

TEST_CASE("built-in scenario 1 loads with its event script") {
    const Scenario s = load_scenario(kDir + "4dg_scenario1.json");
    CHECK(s.n_dgs() == 4);
    CHECK(s.network.n_buses == 4);
    CHECK(s.mode == Mode::Etdmpc);
    CHECK(s.ratio() == 5);
    CHECK(s.steps_per_sample() == 200);
    REQUIRE(s.events.size() == 5);
    CHECK(s.events[0].kind == EventKind::SecondaryOn);
    CHECK(s.events[0].t == 1.0);
    CHECK(s.events[1].kind == EventKind::LoadConnect);
    CHECK(s.events[1].t == 2.0);
    CHECK(s.events[2].kind == EventKind::LoadDisconnect);
    CHECK(s.events[2].t == 3.0);
    CHECK(s.events[3].kind == EventKind::DgUnplug);
    CHECK(s.events[3].index == 3);
    CHECK(s.events[4].kind == EventKind::DgPlug);
    CHECK(s.events[4].t == 5.0);
    CHECK(s.secondary_on_time() == 1.0);
    CHECK(s.graph().neighbors(0) == std::vector<int>{1, mgrid::comm::kLeader});
}

TEST_CASE("every shipped scenario parses") {
    for (const char* f : {"4dg_scenario1.json", "4dg_scenario4.json", "4dg_voltage_sag.json",
                          "ieee13_scalability.json", "ieee13_reconfiguration.json"}) {
        CAPTURE(f);
        CHECK_NOTHROW(load_scenario(kDir + f));
    }
}

TEST_CASE("link events resolve both directions and one-way targets") {
    json j = base();
    j["events"] = json::array({{{"t", 2.0}, {"kind", "link_down"}, {"target", "DG3-DG4"}},
                               {{"t", 3.0}, {"kind", "link_up"}, {"target", "DG4->DG3"}}});
    const Scenario s = parse_scenario(j);
    CHECK(s.events[0].link_from == 2);
    CHECK(s.events[0].link_to == 3);
    CHECK(s.events[0].bidirectional);
    CHECK(s.events[1].link_from == 3);
    CHECK_FALSE(s.events[1].bidirectional);
    const mgrid::comm::LinkSchedule sched = s.link_schedule();
    CHECK(sched.is_down(2, 3, 2.5));
    CHECK(sched.is_down(3, 2, 2.5));
    CHECK(sched.is_down(2, 3, 3.5));  // only DG4->DG3 came back
    CHECK_FALSE(sched.is_down(3, 2, 3.5));
}

TEST_CASE("empty event list is a valid primary-only run") {
    json j = base();
    j["events"] = json::array();
    j["duration"] = 1.0;
    const Scenario s = parse_scenario(j);
    CHECK(s.events.empty());
    CHECK_FALSE(s.secondary_on_time().has_value());
}

TEST_CASE("schema violations are rejected by name") {
    json j = base();
    j["rho"] = 1e-6;
    check_rejects(j, "rho");

    j = base();
    j["events"][0]["kind"] = "meteor_strike";
    check_rejects(j, "meteor_strike");

    j = base();
    j["events"][1]["target"] = "Load9";
    check_rejects(j, "Load9");

    j = base();
    j["events"] = json::array({{{"t", 2.0}, {"kind", "link_down"}, {"target", "DG1-DG4"}}});
    check_rejects(j, "no configured link");

    j = base();
    j["events"] = json::array({{{"t", 2.0}, {"kind", "link_down"}, {"target", "DG1DG2"}}});
    check_rejects(j, "A-B");

    j = base();
    j["comm"]["links"] = json::array({{"DG1", "DG2"}, {"DG2", "DG3"}});
    check_rejects(j, "comm");

    j = base();
    j["T_s_mpc"] = 0.055;
    check_rejects(j, "multiple");

    j = base();
    j["events"][0]["t"] = 2.5;
    check_rejects(j, "sorted");

    j = base();
    j["events"][4]["t"] = 9.0;
    check_rejects(j, "outside the run");

    j = base();
    j["events"] = json::array({{{"t", 2.0}, {"kind", "dg_unplug"}, {"target", "DG1"}}});
    check_rejects(j, "reference DG");

    j = base();
    j["network"]["lines"][0]["X"] = 1.0;
    check_rejects(j, "'X'");

    j = base();
    j["thresholds"]["e_opt"] = -0.1;
    check_rejects(j, "thresholds");

    j = base();
    j["observer"] = {{"t_eps", 0.04}, {"dt_active", 0.02}};
    check_rejects(j, "observer");

    j = base();
    j["mode"] = "fuzzy";
    check_rejects(j, "fuzzy");

    j = base();
    j["duration"] = "long";
    check_rejects(j, "duration");

    CHECK_THROWS_AS(load_scenario(kDir + "missing.json"), mgrid::ScenarioError);
}

TEST_CASE("optional sections override defaults") {
    json j = base();
    j["qp"] = {{"rho", 1e-5}, {"v_lo_pu", 0.95}, {"v_hi_pu", 1.05}, {"slack_weight", 1e4}};
    j["observer"] = {{"omega", {1.0, 2.0, 4.0}}, {"varpi", 3.0}, {"t_eps", 0.01}, {"dt_active", 0.03}};
    j["pi"] = {{"k_p", 0.2}, {"k_i", 5.0}};
    j["thresholds"] = {{"e_opt", 0.001}, {"e_com", 0.002}, {"units", "pu"}};
    j["linearization"] = "sampled";
    j["reoptimize_on_receive"] = false;
    const Scenario s = parse_scenario(j);
    CHECK(s.rho == 1e-5);
    CHECK(s.v_lo_pu == 0.95);
    CHECK(s.slack_penalty == 1e4);
    CHECK(s.kernels.omega[2] == 4.0);
    CHECK(s.kernels.varpi == 3.0);
    CHECK(s.window.dt_active == 0.03);
    CHECK(s.pi.k_i == 5.0);
    CHECK(s.e_opt_volts() == doctest::Approx(0.311));
    CHECK(s.e_com_volts() == doctest::Approx(0.622));
    CHECK(s.linearization == Linearization::Sampled);
    CHECK_FALSE(s.reoptimize_on_receive);
}

TEST_CASE("presets match the table gains") {
    CHECK(dg_preset("dg1").m_p == 6.28e-5);
    CHECK(dg_preset("dg1").n_q == 0.5e-3);
    CHECK(dg_preset("dg3").k_pv == dg_preset("dg4").k_pv);
    CHECK_THROWS_AS(dg_preset("dg9"), mgrid::ScenarioError);
}
