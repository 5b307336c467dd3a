#pragma once

#include "obflow/vec.hpp"

// Wall cut-off: psi == 1 on [0,1/3), a settling cubic on [1/3,2/3], 0 beyond.
// Boundary-layer corrections enter the interior equations through
// coeff * eps^-2 * psi''(x2/eps) * (boundary value), supported in x2 in [eps/3, 2eps/3].
namespace obflow {

inline double psi(double r) {
    if (r < 1.0 / 3.0) return 1.0;
    if (r > 2.0 / 3.0) return 0.0;
    const double t = r - 0.5;
    return 54.0 * t * t * t - 4.5 * t + 0.5;
}

inline double psi_prime(double r) {
    if (r < 1.0 / 3.0 || r > 2.0 / 3.0) return 0.0;
    const double t = r - 0.5;
    return 162.0 * t * t - 4.5;
}

inline double psi_double_prime(double r) {
    if (r < 1.0 / 3.0 || r > 2.0 / 3.0) return 0.0;
    return 324.0 * (r - 0.5);
}

// Scalar correction (the vorticity and expansion-rate kinds).
inline double cutoff_error_term(double coeff, double eps, double x2, double boundary_value) {
    return coeff / (eps * eps) * psi_double_prime(x2 / eps) * boundary_value;
}

// Vector correction (the temperature-gradient kind).
inline Vec2 cutoff_error_term(double coeff, double eps, double x2, const Vec2& boundary_value) {
    return boundary_value * (coeff / (eps * eps) * psi_double_prime(x2 / eps));
}

}  // namespace obflow
