#include "mgrid/prediction.hpp"

#include <doctest.h>

#include <random>

using namespace mgrid::dmpc;

namespace {

// Plain Euler double integrator, inputs held r steps, sampled every r steps.
Eigen::VectorXd euler_rollout(double t_s, Eigen::Vector2d x, const Eigen::VectorXd& xi, int r) {
    Eigen::VectorXd y(xi.size());
    for (Eigen::Index h = 0; h < xi.size(); ++h) {
        for (int j = 0; j < r; ++j) {
            const double pos = x[0] + t_s * x[1];
            x[1] += t_s * xi[h];
            x[0] = pos;
        }
        y[h] = x[0];
    }
    return y;
}

}  // namespace

TEST_CASE("discrete double integrator") {
    const DiscreteModel m = build_discrete_model(0.01);
    CHECK(m.a(0, 0) == 1.0);
    CHECK(m.a(0, 1) == 0.01);
    CHECK(m.a(1, 0) == 0.0);
    CHECK(m.a(1, 1) == 1.0);
    CHECK(m.b[0] == 0.0);
    CHECK(m.b[1] == 0.01);
    CHECK(m.c[0] == 1.0);
    CHECK(m.c[1] == 0.0);

    Eigen::Matrix2d a5 = Eigen::Matrix2d::Identity();
    for (int i = 0; i < 5; ++i) a5 *= m.a;
    CHECK(a5(0, 1) == doctest::Approx(0.05).epsilon(1e-15));

    CHECK((build_discrete_model(1e-12).a - Eigen::Matrix2d::Identity()).norm() < 1e-11);
    CHECK_THROWS_AS((void)build_discrete_model(0.0), std::invalid_argument);
}

TEST_CASE("H=1, r=2 by hand") {
    const PredictionModel pm = build_prediction_matrices(build_discrete_model(0.01), 1, 2);
    CHECK(pm.f(0, 0) == 1.0);
    CHECK(pm.f(0, 1) == doctest::Approx(0.02).epsilon(1e-15));
    // C A B + C B = T_s^2 + 0 for the Euler chain.
    CHECK(pm.g(0, 0) == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(pm.t_s_mpc() == doctest::Approx(0.02));
}

TEST_CASE("r=1 gives the plain H-step matrices") {
    const double t = 0.01;
    const PredictionModel pm = build_prediction_matrices(build_discrete_model(t), 6, 1);
    for (int h = 0; h < 6; ++h) {
        CHECK(pm.f(h, 0) == 1.0);
        CHECK(pm.f(h, 1) == doctest::Approx((h + 1) * t).epsilon(1e-14));
        for (int j = 0; j < 6; ++j) {
            // y(h+1) picks up input j through (h - j) steps of position integration.
            const double expect = j <= h ? (h - j) * t * t : 0.0;
            CHECK(pm.g(h, j) == doctest::Approx(expect).epsilon(1e-12).scale(1e-8));
        }
    }
}

TEST_CASE("G is lower triangular; positive diagonal once inputs reach position within a block") {
    for (int r = 1; r <= 6; ++r) {
        const PredictionModel pm = build_prediction_matrices(build_discrete_model(0.01), 8, r);
        for (int h = 0; h < 8; ++h) {
            for (int j = h + 1; j < 8; ++j) CHECK(pm.g(h, j) == 0.0);
            if (r >= 2) CHECK(pm.g(h, h) > 0.0);
            else CHECK(pm.g(h, h) == 0.0);
        }
    }
}

TEST_CASE("prediction equals the fine-grid rollout for every H and r") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    const double t_s = 0.01;
    const DiscreteModel m = build_discrete_model(t_s);
    double worst = 0.0;
    for (int h = 1; h <= 10; ++h) {
        for (int r = 1; r <= 6; ++r) {
            const PredictionModel pm = build_prediction_matrices(m, h, r);
            for (int trial = 0; trial < 5; ++trial) {
                const Eigen::Vector2d y(311.0 + n(rng), 10.0 * n(rng));
                Eigen::VectorXd xi(h);
                for (int i = 0; i < h; ++i) xi[i] = 1000.0 * n(rng);
                const Eigen::VectorXd want = euler_rollout(t_s, y, xi, r);
                const Eigen::VectorXd got = predict_outputs(pm, y, xi);
                const Eigen::VectorXd lib = rollout_fine(m, y, xi, r);
                worst = std::max(worst, (got - want).lpNorm<Eigen::Infinity>() / want.lpNorm<Eigen::Infinity>());
                worst = std::max(worst, (lib - want).lpNorm<Eigen::Infinity>() / want.lpNorm<Eigen::Infinity>());
            }
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("predict outputs: constant hold and ramp") {
    const PredictionModel pm = build_prediction_matrices(build_discrete_model(0.01), 10, 5);
    const Eigen::VectorXd y0 = predict_outputs(pm, Eigen::Vector2d(311.0, 0.0), Eigen::VectorXd::Zero(10));
    for (int h = 0; h < 10; ++h) CHECK(y0[h] == doctest::Approx(311.0).epsilon(1e-15));
    const Eigen::VectorXd ramp = predict_outputs(pm, Eigen::Vector2d(0.0, 1.0), Eigen::VectorXd::Zero(10));
    for (int h = 0; h < 10; ++h) CHECK(ramp[h] == doctest::Approx(0.05 * (h + 1)).epsilon(1e-13));
    CHECK_THROWS_AS((void)predict_outputs(pm, Eigen::Vector2d::Zero(), Eigen::VectorXd::Zero(3)),
                    std::invalid_argument);
}

TEST_CASE("shift and first input") {
    ControlSequence s{Eigen::Vector3d(1.0, 2.0, 3.0), 7};
    CHECK(first_input(s) == 1.0);
    const ControlSequence one = shift_sequence(s, 1);
    CHECK(one.xi == Eigen::Vector3d(2.0, 3.0, 0.0));
    CHECK(first_input(one) == 2.0);
    CHECK(shift_sequence(s, 2).xi == Eigen::Vector3d(3.0, 0.0, 0.0));
    CHECK(shift_sequence(s, 3).xi == Eigen::Vector3d::Zero());
    CHECK(shift_sequence(s, 50).xi == Eigen::Vector3d::Zero());
    CHECK(shift_sequence(s, 0).xi == s.xi);
    CHECK(first_input(ControlSequence{Eigen::VectorXd::Zero(4), 0}) == 0.0);
    CHECK_THROWS_AS((void)first_input(ControlSequence{}), std::invalid_argument);
}
