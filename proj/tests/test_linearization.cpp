#include "mgrid/linearization.hpp"
#include "mgrid/network.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace mgrid;
using physics::DGState;

namespace {

// Single DG feeding an RL load through a line.
physics::Plant one_dg_plant(const physics::DGParams& p) {
    physics::NetworkModel net;
    net.n_buses = 2;
    net.lines.push_back({0, 1, 0.23, 318e-6, true, "Line"});
    net.loads.push_back({1, 6.0, 12.8e-3, true, "Load"});
    return physics::Plant({p}, {0}, net);
}

}  // namespace

TEST_CASE("g from table gains") {
    CHECK(fl::compute_g(physics::dg1_params()) == doctest::Approx(8.274e6).epsilon(1e-3));
    CHECK(fl::compute_g(physics::dg34_params()) == doctest::Approx(2.364e7).epsilon(1e-3));
}

TEST_CASE("auxiliary to actual input") {
    CHECK(fl::auxiliary_to_actual(5.0, 5.0, 8.274e6) == 0.0);
    const double g = 8.274e6, f = -2.1e9;
    CHECK(fl::auxiliary_to_actual(f + g * 311.0, f, g) == doctest::Approx(311.0).epsilon(1e-14));
    CHECK(fl::auxiliary_to_actual(9.9e9, 7.35e9, 8.274e6) == doctest::Approx(308.2).epsilon(1e-4));
    CHECK_THROWS_AS((void)fl::auxiliary_to_actual(1.0, 0.0, 0.0), std::invalid_argument);

    for (double xi : {-3e9, 0.0, 1e7, 4.4e9}) {
        const double vn = fl::auxiliary_to_actual(xi, f, g);
        CHECK(f + g * vn == doctest::Approx(xi).epsilon(1e-14));
    }
}

TEST_CASE("f vanishes at the origin") {
    CHECK(fl::compute_f(DGState{}, physics::dg1_params(), 0.0, 0.0) == 0.0);
}

TEST_CASE("f at a loaded operating point has the normalization magnitude") {
    physics::Plant plant = one_dg_plant(physics::dg1_params());
    physics::PlantState s = plant.initial_state(311.0);
    std::vector<physics::DGDrive> drives(1);
    for (int i = 0; i < 20000; ++i) s = physics::integrate_step(plant, s, drives, 5e-5);
    const double w = plant.omega_com(s, drives);
    const double f = fl::compute_f(s.dgs[0], plant.params(0), plant.local_bus_voltage(s, 0).x(), w);
    CHECK(std::abs(f) > 7.35e9 / 10.0);
    CHECK(std::abs(f) < 7.35e9 * 10.0);
}

TEST_CASE("f matches central differences of the simulated v_od") {
    for (const auto& p : {physics::dg1_params(), physics::dg34_params()}) {
        physics::Plant plant = one_dg_plant(p);
        physics::PlantState s = plant.initial_state(311.0);
        std::vector<physics::DGDrive> drives(1);
        drives[0].v_n = 311.0;
        // Settle, then step the setpoint so the loop is in a transient.
        for (int i = 0; i < 4000; ++i) s = physics::integrate_step(plant, s, drives, 5e-5);
        drives[0].v_n = 300.0;
        const double h = 1e-6;
        const double g = fl::compute_g(p);
        int checked = 0;
        for (int k = 0; k < 200; ++k) {
            const physics::PlantState s0 = s;
            const physics::PlantState s1 = physics::integrate_step(plant, s0, drives, h);
            const physics::PlantState s2 = physics::integrate_step(plant, s1, drives, h);
            const double vdd = (s2.dgs[0].v_od - 2.0 * s1.dgs[0].v_od + s0.dgs[0].v_od) / (h * h);
            const double w = plant.omega_com(s1, drives);
            const double f = fl::compute_f(s1.dgs[0], p, plant.local_bus_voltage(s1, 0).x(), w);
            const double f_fd = vdd - g * drives[0].v_n;
            if (k % 20 == 0) {
                CHECK(std::abs(f - f_fd) <= 0.01 * std::abs(f_fd));
                ++checked;
            }
            s = physics::integrate_step(plant, s, drives, 5e-6);
        }
        CHECK(checked == 10);
    }
}

TEST_CASE("continuous linearizing law makes v_od'' track the commanded acceleration") {
    const physics::DGParams p = physics::dg1_params();
    physics::Plant plant = one_dg_plant(p);
    physics::PlantState s = plant.initial_state(311.0);
    std::vector<physics::DGDrive> drives(1);
    for (int i = 0; i < 4000; ++i) s = physics::integrate_step(plant, s, drives, 5e-5);

    const double xi = 2000.0;  // V/s^2
    const double g = fl::compute_g(p);
    drives[0].law = [&](const DGState& x, const physics::Dq& vb, double w, double) {
        return fl::auxiliary_to_actual(xi, fl::compute_f(x, p, vb.x(), w), g);
    };
    const double h = 1e-6;
    for (int k = 0; k < 5; ++k) {
        const physics::PlantState s1 = physics::integrate_step(plant, s, drives, h);
        const physics::PlantState s2 = physics::integrate_step(plant, s1, drives, h);
        const double vdd = (s2.dgs[0].v_od - 2.0 * s1.dgs[0].v_od + s.dgs[0].v_od) / (h * h);
        CHECK(vdd == doctest::Approx(xi).epsilon(0.02));
        s = physics::integrate_step(plant, s, drives, 1e-4);
    }
}

TEST_CASE("linearized output is v_od and its exact derivative") {
    const physics::DGParams p = physics::dg1_params();
    physics::Plant plant = one_dg_plant(p);
    physics::PlantState s = plant.initial_state(311.0);
    std::vector<physics::DGDrive> drives(1);
    for (int i = 0; i < 200; ++i) s = physics::integrate_step(plant, s, drives, 5e-5);
    const double w = plant.omega_com(s, drives);
    const fl::LinearizedOutput y = fl::linearized_output(s.dgs[0], p, w);
    CHECK(y.y1 == s.dgs[0].v_od);
    const double h = 1e-7;
    const physics::PlantState a = physics::integrate_step(plant, s, drives, h);
    const double fd = (a.dgs[0].v_od - s.dgs[0].v_od) / h;
    CHECK(y.y2 == doctest::Approx(fd).epsilon(1e-3).scale(1.0));
}
