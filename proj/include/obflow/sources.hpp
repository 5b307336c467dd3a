#pragma once

#include <cmath>

#include "obflow/config.hpp"
#include "obflow/vec.hpp"

// Driving program: prescribed wall temperature, interior heating and the
// buoyancy curl that forces the vorticity transport.
namespace obflow {

// Wall temperature: a centered Gaussian bump ramped linearly until t = 80,
// then held at amplitude 20.
inline double theta_b(const SimConfig& c, double x1, double t) {
    if (!c.heating_on) return 0.0;
    const double amp = (t < 80.0) ? 0.25 * t : 20.0;
    return amp * std::exp(-0.5 * x1 * x1 / (c.L * c.L));
}

// Tangential wall-temperature gradient (closed form of d(theta_b)/dx1).
inline double theta_b_dx1(const SimConfig& c, double x1, double t) {
    if (!c.heating_on) return 0.0;
    const double amp = (t < 80.0) ? 0.25 * t : 20.0;
    return -amp * x1 / (c.L * c.L) * std::exp(-0.5 * x1 * x1 / (c.L * c.L));
}

// Interior heating g(x,t) = (theta0 + 0.05 t) exp(-|x|^2 / (2 L^2)).
inline double heating_g(const SimConfig& c, const Vec2& x, double t) {
    if (!c.heating_on) return 0.0;
    return (c.theta0 + 0.05 * t) * std::exp(-0.5 * norm2(x) / (c.L * c.L));
}

inline Vec2 heating_grad_g(const SimConfig& c, const Vec2& x, double t) {
    if (!c.heating_on) return {0.0, 0.0};
    const double f = -(c.theta0 + 0.05 * t) / (c.L * c.L) * std::exp(-0.5 * norm2(x) / (c.L * c.L));
    return {f * x.x, f * x.y};
}

// Curl of the buoyancy force (0, alpha (theta - theta_b)).
inline double buoyancy_curl(double alpha, double theta1_at_x, double theta_b_dx1_at_x1) {
    return alpha * (theta1_at_x - theta_b_dx1_at_x1);
}

}  // namespace obflow
