#include "mgrid/agent.hpp"

#include <doctest.h>

using namespace mgrid;
using agent::PiAgent;

namespace {

struct Rig {
    dmpc::PredictionModel pm = dmpc::build_prediction_matrices(dmpc::build_discrete_model(0.01), 10, 5);
    dmpc::QPWeights w = dmpc::QPWeights::diagonal(10, 1e-6, 0.97 * 311.0, 1.03 * 311.0, 1e6);

    agent::DmpcAgent make(bool always_fire = false, bool reopt = true) {
        agent::AgentConfig cfg;
        cfg.id = 1;
        cfg.neighbors = {0, 2};
        cfg.always_fire = always_fire;
        cfg.reoptimize_on_receive = reopt;
        agent::DmpcAgent a(cfg, &pm, &w);
        a.initialize(311.0, 0);
        return a;
    }
};

const Eigen::Vector2d kFlat(311.0, 0.0);

}  // namespace

TEST_CASE("PI: zero error leaves the output unchanged") {
    PiAgent pi({0.5, 20.0}, 311.0, 1e-3);
    for (int i = 0; i < 100; ++i) CHECK(pi.step(0.0) == 311.0);
    CHECK(pi.integral() == 0.0);
}

TEST_CASE("PI: constant error ramps at k_i * e") {
    const double kp = 0.5, ki = 20.0, dt = 1e-3, e = 0.4;
    PiAgent pi({kp, ki}, 311.0, dt);
    double prev = pi.step(e);
    for (int i = 0; i < 50; ++i) {
        const double out = pi.step(e);
        CHECK((out - prev) / dt == doctest::Approx(ki * e).epsilon(1e-9));
        prev = out;
    }
    CHECK(pi.output() == prev);
    CHECK(pi.correction(0.0) == doctest::Approx(ki * pi.integral()));
}

TEST_CASE("PI: correction clamps at 0.2 p.u. and stops integrating") {
    PiAgent pi({0.5, 20.0}, 311.0, 1e-2);
    for (int i = 0; i < 10000; ++i) pi.step(100.0);
    CHECK(pi.output() == doctest::Approx(1.2 * 311.0));
    const double frozen = pi.integral();
    pi.step(100.0);
    CHECK(pi.integral() == frozen);
    // Unwinds immediately once the error reverses.
    pi.step(-100.0);
    CHECK(pi.output() < 1.2 * 311.0);

    PiAgent low({0.5, 20.0}, 311.0, 1e-2);
    for (int i = 0; i < 10000; ++i) low.step(-100.0);
    CHECK(low.output() == doctest::Approx(0.8 * 311.0));
}

TEST_CASE("PI baseline step maps errors to setpoints per DG") {
    std::vector<PiAgent> agents(3, PiAgent({0.5, 20.0}, 311.0, 1e-3));
    const auto out = agent::pi_baseline_step(agents, {0.0, 1.0, -1.0});
    REQUIRE(out.size() == 3);
    CHECK(out[0] == 311.0);
    CHECK(out[1] > 311.0);
    CHECK(out[2] < 311.0);
    CHECK(out[1] - 311.0 == doctest::Approx(311.0 - out[2]));
}

TEST_CASE("DMPC agent: forced start, quiet consensus, neighbor-triggered reoptimization") {
    Rig rig;
    agent::DmpcAgent a = rig.make();
    const agent::StepResult first = a.step(0, kFlat, 311.0);
    CHECK(first.opt_fired);
    CHECK(first.com_fired);
    CHECK(first.reason == trigger::Reason::Forced);
    REQUIRE(first.message);
    CHECK(first.message->sender == 1);

    for (long k = 1; k < 5; ++k) {
        const agent::StepResult r = a.step(k, kFlat, 311.0);
        CHECK_FALSE(r.opt_fired);
        CHECK_FALSE(r.com_fired);
        CHECK_FALSE(r.message);
    }

    a.receive({2, 5, Eigen::VectorXd::Constant(10, 312.0)});
    const agent::StepResult n = a.step(5, kFlat, 311.0);
    CHECK(n.opt_fired);
    CHECK(n.reason == trigger::Reason::Neighbor);
    CHECK(n.xi > 0.0);  // pulled toward the higher neighbor

    // Horizon clause fires H steps after the last optimization.
    long k = 6;
    agent::StepResult r;
    for (; k < 30; ++k) {
        r = a.step(k, kFlat, 311.0);
        if (r.opt_fired) break;
    }
    CHECK(r.opt_fired);
}

TEST_CASE("DMPC agent: reoptimization on receive can be disabled") {
    Rig rig;
    agent::DmpcAgent a = rig.make(false, false);
    a.step(0, kFlat, 311.0);
    a.step(1, kFlat, 311.0);
    a.receive({2, 1, Eigen::VectorXd::Constant(10, 312.0)});
    const agent::StepResult r = a.step(2, kFlat, 311.0);
    CHECK_FALSE(r.opt_fired);
}

TEST_CASE("DMPC agent: prediction error fires the optimization trigger") {
    Rig rig;
    agent::DmpcAgent a = rig.make();
    a.step(0, kFlat, 311.0);
    const agent::StepResult r = a.step(1, Eigen::Vector2d(309.0, 0.0), 309.0);
    CHECK(r.opt_fired);
    CHECK(r.reason == trigger::Reason::Error);
}

TEST_CASE("DMPC agent: force_transmit resends without optimizing") {
    Rig rig;
    agent::DmpcAgent a = rig.make();
    a.step(0, kFlat, 311.0);
    a.step(1, kFlat, 311.0);
    a.force_transmit();
    const agent::StepResult r = a.step(2, kFlat, 311.0);
    CHECK_FALSE(r.opt_fired);
    CHECK(r.com_fired);
    REQUIRE(r.message);
    CHECK(r.message->issued_at == 2);
    const agent::StepResult after = a.step(3, kFlat, 311.0);
    CHECK_FALSE(after.com_fired);
}

TEST_CASE("DMPC agent: time-triggered mode fires every step") {
    Rig rig;
    agent::DmpcAgent a = rig.make(true);
    for (long k = 0; k < 20; ++k) {
        const agent::StepResult r = a.step(k, kFlat, 311.0);
        CHECK(r.opt_fired);
        CHECK(r.com_fired);
    }
}

TEST_CASE("DMPC agent: neighbor view is the holdover of stored payloads") {
    Rig rig;
    agent::DmpcAgent a = rig.make();
    Eigen::VectorXd p = Eigen::VectorXd::LinSpaced(10, 300.0, 309.0);
    a.receive({0, 3, p});
    const auto view = a.neighbor_view(5);
    REQUIRE(view.size() == 2);
    CHECK(view[0] == trigger::holdover_prediction(p, 2));
    CHECK(view[1] == Eigen::VectorXd::Constant(10, 311.0));
}

TEST_CASE("DMPC agent: optional refresh resends a prediction once it is old enough") {
    Rig rig;
    agent::AgentConfig cfg;
    cfg.id = 1;
    cfg.neighbors = {0, 2};
    cfg.com_refresh = 4;
    agent::DmpcAgent a(cfg, &rig.pm, &rig.w);
    a.initialize(311.0, 0);
    std::vector<long> sent;
    for (long k = 0; k < 13; ++k) {
        if (a.step(k, kFlat, 311.0).com_fired) sent.push_back(k);
    }
    CHECK(sent == std::vector<long>{0, 4, 8, 12});
}
