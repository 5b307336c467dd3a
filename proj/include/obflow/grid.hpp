#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "obflow/config.hpp"
#include "obflow/vec.hpp"

namespace obflow {

// Tensor-product observation grid on [-L,L] x [0,L]: uniform x1 nodes at
// spacing s; x2 levels start with refined wall rows at spacing s_b up to the
// first coarse row, then continue at spacing s up to L.
struct FieldGrid {
    double L = 0.0, s = 0.0, s_b = 0.0;
    int nx = 0;                      // x1 node count
    int wall_rows = 0;               // refined levels strictly below x2 = s
    std::vector<double> x2_levels;

    std::vector<double> u1, u2, theta, rho;
    std::vector<double> omega, phi, Theta1, Theta2;
    std::vector<double> S11, S12, S21, S22;

    int nlev() const { return static_cast<int>(x2_levels.size()); }
    std::size_t nodes() const { return static_cast<std::size_t>(nx) * x2_levels.size(); }
    std::size_t idx(int i, int lev) const {
        return static_cast<std::size_t>(lev) * nx + i;
    }
    double x1(int i) const { return -L + i * s; }
    double x2(int lev) const { return x2_levels[lev]; }
};

// Wall traces at the x1 nodes.
struct BoundaryData {
    double time = 0.0;
    std::vector<double> omega_b, phi_b, theta_b, Theta_b1, Theta_b2;
};

// Fields sampled at one point, extended below the wall by reflection
// (u1, theta, rho, omega, Theta1 even; u2, phi, Theta2 odd; S -> J S J).
struct PointFields {
    Vec2 u;
    double theta = 0.0, rho = 0.0, phi = 0.0, omega = 0.0;
    Vec2 Theta;
    Mat2 S;
};

struct BoundaryPointData {
    double omega_b = 0.0, phi_b = 0.0, theta_b = 0.0;
    Vec2 Theta_b;
};

FieldGrid make_grid(const SimConfig& c);

// Central differences interior, one-sided second-order stencils at edges;
// vertical stencils honor the non-uniform wall refinement.
void derive_grid_fields(FieldGrid& g);

// Wall traces: omega_b = -d2 u1|0 and phi_b = d2 u2|0 from the one-sided
// three-point stencil over {0, s_b, 2 s_b} with the no-slip value pinned to 0;
// theta_b and Theta_b1 from the heating program; Theta_b2 per config.
BoundaryData estimate_boundary_values(const FieldGrid& g, const SimConfig& c, double t);

// First-order upwind transport d(rho)/dt = -(u . grad rho) - phi rho.
// Wall row uses rho *= (1 - dt phi_b); lateral and top edges copy the nearest
// interior value. Returns the step's advective CFL number dt*max|u|/min(s,s_b).
double update_density(FieldGrid& g, const BoundaryData& b, double dt);

// Bilinear sample with reflection below the wall. Lateral or above-top points
// are clamped onto the grid and counted.
PointFields interpolate(const FieldGrid& g, Vec2 x, std::atomic<std::uint64_t>* clamp_count);

BoundaryPointData interpolate_boundary(const FieldGrid& g, const BoundaryData& b, double x1,
                                       std::atomic<std::uint64_t>* clamp_count);

}  // namespace obflow
