#pragma once

// Classical fourth-order Runge-Kutta step for any vector type with the usual
// arithmetic (Eigen vectors, double).

namespace mgrid::physics {

/// x(t + dt) from x(t) for x' = f(x, t).
template <class Vec, class F>
Vec rk4_step(const F& f, const Vec& x, double t, double dt) {
    const Vec k1 = f(x, t);
    const Vec k2 = f(Vec(x + 0.5 * dt * k1), t + 0.5 * dt);
    const Vec k3 = f(Vec(x + 0.5 * dt * k2), t + 0.5 * dt);
    const Vec k4 = f(Vec(x + dt * k3), t + dt);
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace mgrid::physics
