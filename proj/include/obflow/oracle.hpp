#pragma once

#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "obflow/vec.hpp"

// Self-contained reference solvers used to validate the stochastic
// representations and the kernel quadrature: an explicit finite-difference
// integrator, a forward Feynman-Kac path estimator, and an analytic vorticity
// patch with high-resolution Biot-Savart quadrature.
namespace obflow::oracle {

// Compact C^3 radial profile amp * (1 - (r/radius)^2)^4.
struct Bump {
    Vec2 center{0.0, 0.0};
    double radius = 1.0;
    double amp = 0.0;

    double value(const Vec2& x) const {
        const double q2 = norm2(x - center) / (radius * radius);
        if (q2 >= 1.0) return 0.0;
        const double u = 1.0 - q2;
        const double u2 = u * u;
        return amp * u2 * u2;
    }
    Vec2 grad(const Vec2& x) const {
        const double q2 = norm2(x - center) / (radius * radius);
        if (q2 >= 1.0) return {0.0, 0.0};
        const double u = 1.0 - q2;
        const double f = -8.0 * amp * u * u * u / (radius * radius);
        return (x - center) * f;
    }
};

struct GaussianSpot {
    Vec2 center{0.0, 0.0};
    double sigma = 1.0;
    double amp = 1.0;
    double value(const Vec2& x) const {
        return amp * std::exp(-0.5 * norm2(x - center) / (sigma * sigma));
    }
};

inline double bump_sum(const std::vector<Bump>& bs, const Vec2& x) {
    double v = 0.0;
    for (const Bump& b : bs) v += b.value(x);
    return v;
}
inline Vec2 bump_sum_grad(const std::vector<Bump>& bs, const Vec2& x) {
    Vec2 g{0.0, 0.0};
    for (const Bump& b : bs) g = g + b.grad(x);
    return g;
}

// d(psi)/dt = a Lap psi + b . grad psi + (q + c I) psi + f on a truncated box,
// Dirichlet 0 on every edge; on the half-plane the lower edge is the wall.
// Coefficients are sums of compact bumps plus optional constants, so values
// and truncation behaviour are unambiguous on the whole plane.
struct OracleProblem {
    int ncomp = 1;
    bool half_plane = true;
    double a = 0.5;
    double T = 0.4;
    double box_x1 = 4.8;             // box is [-box_x1, box_x1] x [box_x2_lo, box_x2_hi]
    double box_x2_lo = 0.0;
    double box_x2_hi = 4.8;

    std::vector<Bump> b1, b2;        // drift components
    std::vector<Bump> c;             // scalar zeroth-order term
    std::vector<Bump> q[2][2];       // multiplier matrix entries
    std::vector<Bump> f[2];          // source components
    std::vector<Bump> psi0[2];       // initial data
    std::vector<GaussianSpot> psi0_gauss[2];
    double q_const[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    double c_const = 0.0;
    double f_const[2] = {0.0, 0.0};
    double psi0_const[2] = {0.0, 0.0};

    Vec2 drift(const Vec2& x) const { return {bump_sum(b1, x), bump_sum(b2, x)}; }
    double div_b(const Vec2& x) const { return bump_sum_grad(b1, x).x + bump_sum_grad(b2, x).y; }
    // q + c I, the zeroth-order coupling of the system.
    Mat2 multiplier_matrix(const Vec2& x) const {
        const double cc = c_const + bump_sum(c, x);
        return {q_const[0][0] + bump_sum(q[0][0], x) + cc,
                q_const[0][1] + bump_sum(q[0][1], x),
                q_const[1][0] + bump_sum(q[1][0], x),
                q_const[1][1] + bump_sum(q[1][1], x) + cc};
    }
    Vec2 source(const Vec2& x) const {
        return {f_const[0] + bump_sum(f[0], x), f_const[1] + bump_sum(f[1], x)};
    }
    Vec2 initial(const Vec2& x) const {
        Vec2 v{psi0_const[0] + bump_sum(psi0[0], x), psi0_const[1] + bump_sum(psi0[1], x)};
        for (const GaussianSpot& s : psi0_gauss[0]) v.x += s.value(x);
        for (const GaussianSpot& s : psi0_gauss[1]) v.y += s.value(x);
        return v;
    }
};

// Normalized Gaussian test functional centred at a target point; both the
// path estimator and the grid solver integrate against the same probe, so the
// comparison carries no smoothing mismatch.
struct GaussianProbe {
    Vec2 center{0.0, 0.0};
    double sigma = 0.3;
    double value(const Vec2& x) const {
        const double r2 = norm2(x - center);
        if (r2 > 36.0 * sigma * sigma) return 0.0;
        return std::exp(-0.5 * r2 / (sigma * sigma)) /
               (2.0 * std::numbers::pi * sigma * sigma);
    }
};

struct FdSolution {
    int ncomp = 1;
    int n1 = 0, n2 = 0;              // cells per axis; nodes are (n1+1) x (n2+1)
    double h = 0.0;
    double x1lo = 0.0, x2lo = 0.0;
    std::vector<double> comp[2];     // row-major node values, j * (n1+1) + i

    double at(int cidx, int i, int j) const { return comp[cidx][static_cast<std::size_t>(j) * (n1 + 1) + i]; }
    double interp(int cidx, const Vec2& x) const;       // bilinear
    double functional(int cidx, const GaussianProbe& probe) const;  // h^2-weighted sum
};

// Explicit central-difference march; dt must satisfy dt <= h^2 / (4 a).
FdSolution fd_solve(const OracleProblem& p, double h, double dt);

struct FkOptions {
    double eta_x1 = 4.0;             // start lattice spans [-eta_x1, eta_x1] ...
    double eta_y_lo = 0.0;           // ... x (eta_y_lo, eta_y_hi]
    double eta_y_hi = 4.0;
    double s_eta = 0.25;
    int copies = 20;
    double dt = 1.0e-3;
    double probe_sigma = 0.3;
    std::uint64_t seed = 777;
    bool shared_increments = false;  // one Brownian path per copy, common to all sites
    bool bridge_killing = true;      // exact exit sampling for the constant-a half-plane
};

struct FkEstimate {
    double value[2] = {0.0, 0.0};
    double se[2] = {0.0, 0.0};
    std::int64_t paths = 0;
};

// Forward one-copy estimate of <probe_xi, psi(.,T)> for each target xi:
// lattice starts, drift -b, divergence weight exp(-int div b), the
// first-exit indicator on the initial term and last-touch reset on the
// source accumulator, and the inverse-ordered multiplier carried forward.
std::vector<FkEstimate> feynman_kac_estimate(const OracleProblem& p,
                                             const std::vector<Vec2>& targets,
                                             const FkOptions& opt);

// One step of the ordered multiplier U(t): U <- expm(M dt) U, exact for M
// frozen over the step.
Mat2 multiplier_step(const Mat2& U, const Mat2& M, double dt);
// 2x2 matrix exponential via scaling and squaring.
Mat2 expm2(const Mat2& M);

struct SuiteRow {
    int problem = 0;
    int target = 0;
    int comp = 0;
    Vec2 xi{0.0, 0.0};
    double mc = 0.0, mc_se = 0.0;
    double fd = 0.0, fd_sigma = 0.0;
    double combined = 0.0;
    bool pass = false;
};

// Randomized half-plane problems with bounded smooth coefficients; each target
// compares the path estimate against the grid solution within 3 combined
// standard errors (MC SE plus the h-refinement defect). Targets and the
// initial/source bumps cluster around a shared anchor so the probe functional
// is well inside the range forward paths sample.
std::vector<SuiteRow> run_equivalence_suite(std::uint64_t seed, int n_problems = 5,
                                            int n_targets = 3);
std::string suite_csv(const std::vector<SuiteRow>& rows);

struct ConstQResult {
    double estimate = 0.0;
    double exact = 0.0;
    double rel_err = 0.0;
};
// Constant multiplier on unit initial data over the full plane: the estimator
// must reproduce e^{qT} with the lattice sum collapsing under copy-shared
// increments.
ConstQResult constant_q_check(double q, double T, std::uint64_t seed);

struct SurvivalResult {
    double estimate = 0.0;
    double se = 0.0;
    double exact = 0.0;
};
// Fraction of bridge-killed Brownian paths from height h0 still alive at T
// against the closed-form erf mass.
SurvivalResult survival_mass_check(double a, double h0, double T, double dt, int n_paths,
                                   std::uint64_t seed);

// Smooth radial vorticity patch (1 - (r/r0)^2)^3 in the half-plane; velocity
// by high-resolution midpoint quadrature of the wall-corrected kernel, with
// the closed-form circulation field as an independent cross-check.
struct TestVortex {
    Vec2 center{0.0, std::numbers::pi};
    double r0 = 1.0;

    double omega(const Vec2& x) const {
        const double q2 = norm2(x - center) / (r0 * r0);
        if (q2 >= 1.0) return 0.0;
        const double u = 1.0 - q2;
        return u * u * u;
    }
    // Circulation enclosed within radius r of the patch centre.
    double circulation(double r) const {
        const double q2 = std::min(1.0, r * r / (r0 * r0));
        const double v = 1.0 - q2;
        const double v2 = v * v;
        return 0.25 * std::numbers::pi * r0 * r0 * (1.0 - v2 * v2);
    }
    Vec2 velocity_closed(const Vec2& x) const;
    Vec2 velocity_quadrature(const Vec2& x, int cells_per_axis = 1024) const;
};

struct VortexSample {
    Vec2 u{0.0, 0.0};
    double omega = 0.0;
};
// Reference (u, omega) of the radius-1 patch at x, velocity by quadrature.
VortexSample analytic_test_vortex(const Vec2& x);

}  // namespace obflow::oracle
