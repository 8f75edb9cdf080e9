#include "mgrid/trigger.hpp"

#include <doctest.h>

#include <random>

using namespace mgrid::trigger;

namespace {

TriggerLog synthetic_log(const std::vector<int>& fires, int n_steps) {
    TriggerLog log;
    for (int k = 0; k < n_steps; ++k) {
        for (int i = 0; i < static_cast<int>(fires.size()); ++i) {
            TriggerRecord rec;
            rec.step = k;
            rec.dg = i;
            rec.opt_fired = k < fires[i];
            rec.com_fired = k < fires[i] / 2;
            rec.reason = rec.opt_fired ? Reason::Horizon : Reason::None;
            log.push_back(rec);
        }
    }
    return log;
}

}  // namespace

TEST_CASE("optimization trigger clauses") {
    CHECK_FALSE(opt_trigger(311.05, 311.0, 3, 0, 10, 0.1));
    CHECK(opt_trigger(311.05, 311.0, 10, 0, 10, 0.1));
    CHECK(opt_trigger(311.25, 311.15, 1, 0, 10, 0.1) == (std::abs(311.25 - 311.15) >= 0.1));
    CHECK(opt_trigger(0.1, 0.0, 1, 0, 10, 0.1));  // inclusive at the threshold
    CHECK(opt_trigger(-0.2, 0.0, 1, 0, 10, 0.1));
    CHECK(opt_reason(0.05, 0.0, 3, 0, 10, 0.1) == Reason::None);
    CHECK(opt_reason(0.05, 0.0, 10, 0, 10, 0.1) == Reason::Horizon);
    CHECK(opt_reason(0.5, 0.0, 10, 0, 10, 0.1) == Reason::Error);
    // Zero threshold fires every step.
    CHECK(opt_trigger(311.0, 311.0, 1, 0, 10, 0.0));
}

TEST_CASE("communication trigger uses the infinity norm") {
    const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(10, 310.0, 312.0);
    CHECK_FALSE(comm_trigger(y, y, 0.1));
    Eigen::VectorXd one = y;
    one[4] += 0.2;
    CHECK(comm_trigger(one, y, 0.1));
    const Eigen::VectorXd all = y.array() + 0.099;
    CHECK_FALSE(comm_trigger(all, y, 0.1));
    CHECK(comm_trigger(y, y, 0.0));
    CHECK_THROWS_AS((void)comm_trigger(y, y.head(3), 0.1), std::invalid_argument);
}

TEST_CASE("holdover prediction") {
    const Eigen::Vector3d y(1.0, 2.0, 3.0);
    CHECK(holdover_prediction(y, 0) == y);
    CHECK(holdover_prediction(y, 1) == Eigen::Vector3d(2.0, 3.0, 3.0));
    CHECK(holdover_prediction(y, 3) == Eigen::Vector3d::Constant(3.0));
    CHECK(holdover_prediction(y, 100) == Eigen::Vector3d::Constant(3.0));

    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(311.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd v(10);
        for (auto& x : v) x = n(rng);
        for (long a = 0; a < 12; ++a) {
            for (long b = 0; b < 12; ++b) {
                CHECK(holdover_prediction(holdover_prediction(v, a), b) == holdover_prediction(v, a + b));
            }
        }
    }
}

TEST_CASE("reductions") {
    CHECK(reduction_percent(100, 100) == 0.0);
    CHECK(reduction_percent(0, 100) == 100.0);
    CHECK(reduction_percent(23, 100) == doctest::Approx(77.0));

    const Reductions r = reduction_metrics(synthetic_log({23, 20, 32, 34}, 100), 4);
    REQUIRE(r.computation.size() == 4);
    CHECK(r.computation[0] == doctest::Approx(77.0));
    CHECK(r.computation[1] == doctest::Approx(80.0));
    CHECK(r.computation[2] == doctest::Approx(68.0));
    CHECK(r.computation[3] == doctest::Approx(66.0));
    CHECK(r.avg_computation == doctest::Approx(72.75));
    CHECK(r.communication[0] == doctest::Approx(89.0));

    const Reductions all = reduction_metrics(synthetic_log({100, 100}, 100), 2);
    CHECK(all.avg_computation == 0.0);
    const Reductions none = reduction_metrics(synthetic_log({0, 0}, 100), 2);
    CHECK(none.avg_computation == 100.0);
    CHECK(none.avg_communication == 100.0);
}

TEST_CASE("threshold validation") {
    CHECK_NOTHROW((TriggerThresholds{0.0, 0.0}.validate()));
    CHECK_THROWS_AS((TriggerThresholds{-0.1, 0.1}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((TriggerThresholds{0.1, -0.1}.validate()), std::invalid_argument);
}
