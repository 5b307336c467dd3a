#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "obflow/vec.hpp"

// Green functions, Biot-Savart kernels and boundary Poisson kernels for the
// upper half-space in d = 2, 3, built from the free-space fundamental
// solution by odd reflection across the wall {x_d = 0}.
namespace obflow {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kFourPi = 4.0 * std::numbers::pi;

inline Vec2 mirror(const Vec2& x) { return {x.x, -x.y}; }
inline Vec3 mirror(const Vec3& x) { return {x.x, x.y, -x.z}; }

// Free-space Green function: (1/2pi) ln|y-x| in 2-D, -1/(4pi|y-x|) in 3-D.
inline double green_free(const Vec2& y, const Vec2& x) {
    const double r2 = norm2(y - x);
    if (r2 == 0.0) throw std::domain_error("green_free: evaluation at the singular point y = x");
    return 0.5 * std::log(r2) / kTwoPi;
}

inline double green_free(const Vec3& y, const Vec3& x) {
    const double r2 = norm2(y - x);
    if (r2 == 0.0) throw std::domain_error("green_free: evaluation at the singular point y = x");
    return -1.0 / (kFourPi * std::sqrt(r2));
}

// Half-space Green function G(y,x) = Gamma(y,x) - Gamma(y,xbar), zero Dirichlet on the wall.
template <class V>
inline double green_half(const V& y, const V& x) {
    return green_free(y, x) - green_free(y, mirror(x));
}

// Gradient in y of green_half; the half-space Biot-Savart kernel.
inline Vec2 biot_savart(const Vec2& y, const Vec2& x) {
    const Vec2 p = y - x;
    const Vec2 q = y - mirror(x);
    const double p2 = norm2(p), q2 = norm2(q);
    if (p2 == 0.0 || q2 == 0.0)
        throw std::domain_error("biot_savart: evaluation at a singular point");
    return p * (1.0 / (kTwoPi * p2)) - q * (1.0 / (kTwoPi * q2));
}

inline Vec3 biot_savart(const Vec3& y, const Vec3& x) {
    const Vec3 p = y - x;
    const Vec3 q = y - mirror(x);
    const double p2 = norm2(p), q2 = norm2(q);
    if (p2 == 0.0 || q2 == 0.0)
        throw std::domain_error("biot_savart: evaluation at a singular point");
    return p * (1.0 / (kFourPi * p2 * std::sqrt(p2))) +
           -1.0 * q * (1.0 / (kFourPi * q2 * std::sqrt(q2)));
}

// Mollified 2-D kernel: (1 - exp(-|y-x|^2/eps_b)) * biot_savart(y,x).
// The shared factor removes the y = x pole; the kernel extends continuously by 0 there.
inline Vec2 biot_savart_mollified(const Vec2& y, const Vec2& x, double eps_b) {
    const Vec2 p = y - x;
    const Vec2 q = y - mirror(x);
    const double p2 = norm2(p), q2 = norm2(q);
    if (q2 == 0.0)
        throw std::domain_error("biot_savart_mollified: evaluation at the image pole");
    const double f = -std::expm1(-p2 / eps_b);
    // f/p2 -> 1/eps_b as p2 -> 0, so the pole term vanishes linearly.
    const double cp = (p2 > 0.0) ? f / (kTwoPi * p2) : 0.0;
    return p * cp - q * (f / (kTwoPi * q2));
}

// Boundary Poisson kernels of the half-space (unit total mass over the wall).
inline double poisson_half(const Vec2& x, double y1) {
    if (x.y <= 0.0) throw std::domain_error("poisson_half: evaluation point must satisfy x2 > 0");
    const double dx = y1 - x.x;
    return (x.y / kPi) / (dx * dx + x.y * x.y);
}

inline double poisson_half(const Vec3& x, double y1, double y2) {
    if (x.z <= 0.0) throw std::domain_error("poisson_half: evaluation point must satisfy x3 > 0");
    const double d1 = y1 - x.x, d2 = y2 - x.y;
    const double s = d1 * d1 + d2 * d2 + x.z * x.z;
    return x.z / (kTwoPi * s * std::sqrt(s));
}

// Exact mass of the 2-D wall Poisson kernel over the segment [y1_lo, y1_hi].
// Quadratures built from these masses keep the kernel's positivity and unit
// total even when x2 is far below the wall mesh, where pointwise sampling
// would misread the near-singular peak. Contiguous segments telescope to the
// closed-form truncated mass.
inline double poisson_half_mass(const Vec2& x, double y1_lo, double y1_hi) {
    if (x.y <= 0.0)
        throw std::domain_error("poisson_half_mass: evaluation point must satisfy x2 > 0");
    return (std::atan((y1_hi - x.x) / x.y) - std::atan((y1_lo - x.x) / x.y)) / kPi;
}

// 2-D wedge a ^ w = (a2*w, -a1*w); makes the kernel sum against a scalar
// vorticity reproduce the classical Biot-Savart law.
inline Vec2 wedge2(const Vec2& a, double w) { return {a.y * w, -a.x * w}; }

// Runtime-dimension dispatchers for the dimension-generic contracts.
inline double green_free(int d, const double* y, const double* x) {
    if (d == 2) return green_free(Vec2{y[0], y[1]}, Vec2{x[0], x[1]});
    if (d == 3) return green_free(Vec3{y[0], y[1], y[2]}, Vec3{x[0], x[1], x[2]});
    throw std::invalid_argument("green_free: dimension must be 2 or 3");
}

inline double green_half(int d, const double* y, const double* x) {
    if (d == 2) return green_half(Vec2{y[0], y[1]}, Vec2{x[0], x[1]});
    if (d == 3) return green_half(Vec3{y[0], y[1], y[2]}, Vec3{x[0], x[1], x[2]});
    throw std::invalid_argument("green_half: dimension must be 2 or 3");
}

}  // namespace obflow
