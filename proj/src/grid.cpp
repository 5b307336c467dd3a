#include "obflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "obflow/sources.hpp"

namespace obflow {

namespace {

// Three-point first-derivative weights on arbitrary spacings, exact on quadratics.
inline double deriv_mid(double fl, double fm, double fr, double h1, double h2) {
    return -h2 / (h1 * (h1 + h2)) * fl + (h2 - h1) / (h1 * h2) * fm +
           h1 / (h2 * (h1 + h2)) * fr;
}

inline double deriv_left(double fl, double fm, double fr, double h1, double h2) {
    return -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * fl + (h1 + h2) / (h1 * h2) * fm -
           h1 / (h2 * (h1 + h2)) * fr;
}

inline double deriv_right(double fl, double fm, double fr, double h1, double h2) {
    return h2 / (h1 * (h1 + h2)) * fl - (h1 + h2) / (h1 * h2) * fm +
           (h1 + 2.0 * h2) / (h2 * (h1 + h2)) * fr;
}

}  // namespace

FieldGrid make_grid(const SimConfig& c) {
    FieldGrid g;
    g.L = c.L;
    g.s = c.s;
    g.s_b = c.s_b;
    g.nx = c.nx_cells() + 1;
    const int sub = c.wall_subdivisions();
    g.wall_rows = sub - 1;
    g.x2_levels.reserve(sub + c.ny_cells());
    for (int k = 0; k < sub; ++k) g.x2_levels.push_back(k * c.s_b);
    for (int j = 1; j <= c.ny_cells(); ++j) g.x2_levels.push_back(j * c.s);

    const std::size_t n = g.nodes();
    for (auto* f : {&g.u1, &g.u2, &g.theta, &g.rho, &g.omega, &g.phi, &g.Theta1, &g.Theta2,
                    &g.S11, &g.S12, &g.S21, &g.S22})
        f->assign(n, 0.0);
    return g;
}

void derive_grid_fields(FieldGrid& g) {
    if (g.nx < 3 || g.nlev() < 3)
        throw std::runtime_error("derive_grid_fields: grid too small (< 3 nodes per axis)");

    const int nl = g.nlev();
    auto d1 = [&](const std::vector<double>& f, int i, int lev) {
        const std::size_t o = g.idx(0, lev);
        if (i == 0) return deriv_left(f[o], f[o + 1], f[o + 2], g.s, g.s);
        if (i == g.nx - 1)
            return deriv_right(f[o + i - 2], f[o + i - 1], f[o + i], g.s, g.s);
        return (f[o + i + 1] - f[o + i - 1]) / (2.0 * g.s);
    };
    auto d2 = [&](const std::vector<double>& f, int i, int lev) {
        auto at = [&](int l) { return f[g.idx(i, l)]; };
        if (lev == 0) {
            const double h1 = g.x2(1) - g.x2(0), h2 = g.x2(2) - g.x2(1);
            return deriv_left(at(0), at(1), at(2), h1, h2);
        }
        if (lev == nl - 1) {
            const double h1 = g.x2(nl - 2) - g.x2(nl - 3), h2 = g.x2(nl - 1) - g.x2(nl - 2);
            return deriv_right(at(nl - 3), at(nl - 2), at(nl - 1), h1, h2);
        }
        const double h1 = g.x2(lev) - g.x2(lev - 1), h2 = g.x2(lev + 1) - g.x2(lev);
        return deriv_mid(at(lev - 1), at(lev), at(lev + 1), h1, h2);
    };

    for (int lev = 0; lev < nl; ++lev) {
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t k = g.idx(i, lev);
            g.S11[k] = d1(g.u1, i, lev);
            g.S12[k] = d2(g.u1, i, lev);
            g.S21[k] = d1(g.u2, i, lev);
            g.S22[k] = d2(g.u2, i, lev);
            g.omega[k] = g.S21[k] - g.S12[k];
            g.phi[k] = g.S11[k] + g.S22[k];
            g.Theta1[k] = d1(g.theta, i, lev);
            g.Theta2[k] = d2(g.theta, i, lev);
        }
    }
}

BoundaryData estimate_boundary_values(const FieldGrid& g, const SimConfig& c, double t) {
    BoundaryData b;
    b.time = t;
    b.omega_b.resize(g.nx);
    b.phi_b.resize(g.nx);
    b.theta_b.resize(g.nx);
    b.Theta_b1.resize(g.nx);
    b.Theta_b2.resize(g.nx);
    const double h = g.s_b;
    for (int i = 0; i < g.nx; ++i) {
        const double u1a = g.u1[g.idx(i, 1)], u1b = g.u1[g.idx(i, 2)];
        const double u2a = g.u2[g.idx(i, 1)], u2b = g.u2[g.idx(i, 2)];
        b.omega_b[i] = -(4.0 * u1a - u1b) / (2.0 * h);
        b.phi_b[i] = (4.0 * u2a - u2b) / (2.0 * h);
        b.theta_b[i] = theta_b(c, g.x1(i), t);
        b.Theta_b1[i] = theta_b_dx1(c, g.x1(i), t);
        if (c.theta_b2_mode == ThetaB2Mode::zero) {
            b.Theta_b2[i] = 0.0;
        } else {
            const double th0 = b.theta_b[i];
            const double tha = g.theta[g.idx(i, 1)], thb = g.theta[g.idx(i, 2)];
            b.Theta_b2[i] = (-3.0 * th0 + 4.0 * tha - thb) / (2.0 * h);
        }
    }
    return b;
}

double update_density(FieldGrid& g, const BoundaryData& b, double dt) {
    double umax = 0.0;
    for (std::size_t k = 0; k < g.nodes(); ++k)
        umax = std::max({umax, std::abs(g.u1[k]), std::abs(g.u2[k])});
    const double cfl = dt * umax / std::min(g.s, g.s_b);
    if (cfl > 1.0)
        throw std::runtime_error("update_density: CFL violation (dt*max|u| exceeds grid spacing)");

    const int nl = g.nlev();
    std::vector<double> out(g.nodes());

    for (int lev = 1; lev < nl - 1; ++lev) {
        for (int i = 1; i < g.nx - 1; ++i) {
            const std::size_t k = g.idx(i, lev);
            const double v1 = g.u1[k], v2 = g.u2[k];
            const double dr1 = (v1 > 0.0) ? (g.rho[k] - g.rho[k - 1]) / g.s
                                          : (g.rho[k + 1] - g.rho[k]) / g.s;
            const double hlo = g.x2(lev) - g.x2(lev - 1), hhi = g.x2(lev + 1) - g.x2(lev);
            const double dr2 = (v2 > 0.0) ? (g.rho[k] - g.rho[g.idx(i, lev - 1)]) / hlo
                                          : (g.rho[g.idx(i, lev + 1)] - g.rho[k]) / hhi;
            out[k] = g.rho[k] - dt * (v1 * dr1 + v2 * dr2 + g.phi[k] * g.rho[k]);
        }
    }
    for (int i = 0; i < g.nx; ++i) out[g.idx(i, 0)] = g.rho[g.idx(i, 0)] * (1.0 - dt * b.phi_b[i]);
    for (int lev = 1; lev < nl - 1; ++lev) {
        out[g.idx(0, lev)] = out[g.idx(1, lev)];
        out[g.idx(g.nx - 1, lev)] = out[g.idx(g.nx - 2, lev)];
    }
    for (int i = 0; i < g.nx; ++i) out[g.idx(i, nl - 1)] = out[g.idx(i, nl - 2)];

    for (double r : out)
        if (!(r > 0.0)) throw std::runtime_error("update_density: non-positive density");
    g.rho.swap(out);
    return cfl;
}

namespace {

// Locate the x2 cell in the refined-then-coarse level list.
inline int locate_level(const FieldGrid& g, double x2) {
    if (x2 < g.s) {
        const int k = static_cast<int>(x2 / g.s_b);
        return std::min(k, g.wall_rows);
    }
    const int j = static_cast<int>(x2 / g.s);
    return std::min(g.wall_rows + j, g.nlev() - 2);
}

}  // namespace

PointFields interpolate(const FieldGrid& g, Vec2 x, std::atomic<std::uint64_t>* clamp_count) {
    double sign2 = 1.0;  // applied to the odd-parity fields u2, phi, Theta2, S12, S21
    if (x.y < 0.0) {
        x.y = -x.y;
        sign2 = -1.0;
    }
    bool clamped = false;
    if (x.x < -g.L) { x.x = -g.L; clamped = true; }
    if (x.x > g.L) { x.x = g.L; clamped = true; }
    if (x.y > g.L) { x.y = g.L; clamped = true; }
    if (clamped && clamp_count) clamp_count->fetch_add(1, std::memory_order_relaxed);

    int i = static_cast<int>((x.x + g.L) / g.s);
    i = std::clamp(i, 0, g.nx - 2);
    const int lev = locate_level(g, x.y);
    const double xl = g.x1(i);
    const double tl = std::clamp((x.x - xl) / g.s, 0.0, 1.0);
    const double y0 = g.x2(lev), y1 = g.x2(lev + 1);
    const double tv = std::clamp((x.y - y0) / (y1 - y0), 0.0, 1.0);

    const std::size_t k00 = g.idx(i, lev), k10 = k00 + 1;
    const std::size_t k01 = g.idx(i, lev + 1), k11 = k01 + 1;
    const double w00 = (1.0 - tl) * (1.0 - tv), w10 = tl * (1.0 - tv);
    const double w01 = (1.0 - tl) * tv, w11 = tl * tv;
    auto lerp = [&](const std::vector<double>& f) {
        return w00 * f[k00] + w10 * f[k10] + w01 * f[k01] + w11 * f[k11];
    };

    PointFields p;
    p.u = {lerp(g.u1), sign2 * lerp(g.u2)};
    p.theta = lerp(g.theta);
    p.rho = lerp(g.rho);
    p.phi = sign2 * lerp(g.phi);
    p.omega = lerp(g.omega);
    p.Theta = {lerp(g.Theta1), sign2 * lerp(g.Theta2)};
    p.S = {lerp(g.S11), sign2 * lerp(g.S12), sign2 * lerp(g.S21), lerp(g.S22)};
    return p;
}

BoundaryPointData interpolate_boundary(const FieldGrid& g, const BoundaryData& b, double x1,
                                       std::atomic<std::uint64_t>* clamp_count) {
    bool clamped = false;
    if (x1 < -g.L) { x1 = -g.L; clamped = true; }
    if (x1 > g.L) { x1 = g.L; clamped = true; }
    if (clamped && clamp_count) clamp_count->fetch_add(1, std::memory_order_relaxed);

    int i = static_cast<int>((x1 + g.L) / g.s);
    i = std::clamp(i, 0, g.nx - 2);
    const double t = std::clamp((x1 - g.x1(i)) / g.s, 0.0, 1.0);
    auto lerp = [&](const std::vector<double>& f) { return (1.0 - t) * f[i] + t * f[i + 1]; };

    BoundaryPointData out;
    out.omega_b = lerp(b.omega_b);
    out.phi_b = lerp(b.phi_b);
    out.theta_b = lerp(b.theta_b);
    out.Theta_b = {lerp(b.Theta_b1), lerp(b.Theta_b2)};
    return out;
}

}  // namespace obflow
