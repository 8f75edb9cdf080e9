#include "mgrid/comm.hpp"
#include "mgrid/trigger.hpp"

#include <doctest.h>

#include <algorithm>

using namespace mgrid::comm;

namespace {

CommGraph chain4() { return CommGraph::undirected(4, {{0, 1}, {1, 2}, {2, 3}}, {0}); }

}  // namespace

TEST_CASE("chain neighbors, leader last") {
    const CommGraph g = chain4();
    CHECK(g.neighbors(0) == std::vector<int>{1, kLeader});
    CHECK(g.neighbors(1) == std::vector<int>{0, 2});
    CHECK(g.neighbors(2) == std::vector<int>{1, 3});
    CHECK(g.neighbors(3) == std::vector<int>{2});
    CHECK_THROWS(g.neighbors(4));
    CHECK_THROWS(g.neighbors(-2));
}

TEST_CASE("graphs without a spanning tree from the leader are rejected") {
    CHECK_THROWS_AS(CommGraph::undirected(4, {{0, 1}, {1, 2}}, {0}), std::invalid_argument);
    CHECK_THROWS_AS(CommGraph::undirected(2, {{0, 1}}, {}), std::invalid_argument);
    // Directed: DG2 hears DG1 but nobody hears DG2's neighbor DG3.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
    a(1, 0) = 1.0;
    a(1, 2) = 1.0;
    CHECK_THROWS_AS(CommGraph(a, Eigen::Vector3d(1.0, 0.0, 0.0)), std::invalid_argument);
}

TEST_CASE("pinned Laplacian of a spanning graph is nonsingular with positive spectrum") {
    const CommGraph g = chain4();
    const Eigen::MatrixXd l = g.laplacian();
    CHECK(l(0, 0) == 2.0);  // one neighbor plus the pin
    CHECK(l(3, 3) == 1.0);
    CHECK(l(1, 0) == -1.0);
    const Eigen::VectorXcd ev = l.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) CHECK(ev[i].real() > 1e-9);
    // Row sums equal the pins.
    const Eigen::VectorXd rows = l.rowwise().sum();
    CHECK((rows - g.pinning()).norm() < 1e-15);
}

TEST_CASE("delivery respects half-open down intervals") {
    const CommGraph g = chain4();
    const LinkSchedule sched({{2, 3, {{2.0, 6.0}}}});  // DG3 -> DG4
    const std::vector<PredictionMessage> msgs = {
        {0, 0, Eigen::VectorXd::Constant(3, 1.0)},
        {2, 0, Eigen::VectorXd::Constant(3, 3.0)},
    };
    auto dropped = [](const std::vector<Delivery>& d) {
        return std::count_if(d.begin(), d.end(), [](const Delivery& x) { return !x.delivered; });
    };

    const auto empty = deliver(g, msgs, LinkSchedule{}, 3.0);
    CHECK(empty.size() == 3);  // DG1 -> DG2, DG3 -> DG2, DG3 -> DG4
    CHECK(dropped(empty) == 0);

    const auto mid = deliver(g, msgs, sched, 3.0);
    CHECK(dropped(mid) == 1);
    for (const Delivery& d : mid) CHECK(d.delivered == !(d.from == 2 && d.to == 3));
    CHECK(dropped(deliver(g, msgs, sched, 6.0)) == 0);
    CHECK(dropped(deliver(g, msgs, sched, 2.0)) == 1);
    CHECK(dropped(deliver(g, msgs, sched, 1.999)) == 0);
    // The reverse direction is unaffected.
    CHECK_FALSE(sched.is_down(3, 2, 3.0));
}

TEST_CASE("leader sequence is constant and fixed under holdover") {
    const Eigen::VectorXd l = leader_sequence(311.0, 10);
    CHECK(l.size() == 10);
    CHECK((l.array() == 311.0).all());
    CHECK(leader_sequence(311.0, 1).size() == 1);
    for (long e : {0L, 1L, 5L, 10L, 50L}) CHECK(mgrid::trigger::holdover_prediction(l, e) == l);
}
