#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "obflow/config.hpp"
#include "obflow/grid.hpp"
#include "obflow/vec.hpp"

namespace obflow {

// Particle families carried by the simulation. Each family diffuses with its
// own viscosity and feeds one term group of the field reconstruction:
//   X -> vorticity, Y -> temperature gradient, Z -> expansion rate.
enum class Kind : std::uint8_t { X = 0, Y = 1, Z = 2 };

struct Particle {
    Vec2 pos{};
    Vec2 init_weight{};   // lattice weight at t=0 (x component for scalar kinds)
    Vec2 force_accum{};   // running force sum; reset whenever the wall is touched
    Mat2 W = Mat2::identity();  // gradient multiplier (Y only; identity otherwise)
    double phi_integral = 0.0;  // time integral of the expansion rate along the path
    std::int32_t site_i1 = 0;
    std::int32_t site_i2 = 0;
    std::int32_t copy = 0;
    Kind kind = Kind::X;
    bool alive = true;          // false once the path has ever left the half plane
};

struct Ensembles {
    std::vector<Particle> x;
    std::vector<Particle> y;
    std::vector<Particle> z;
    int sites_x = 0;
    int sites_y = 0;
    int copies = 1;
    double cell = 0.0;  // lattice spacing s; per-site quadrature weight is cell^2
};

enum class Exec { serial, parallel };

// One particle of each kind per lattice cell center per copy, zero weights.
Ensembles init_lattice(const SimConfig& c);

// Fills init_weight from cut-off-corrected fields sampled on the grid:
// omega - psi(x2/eps)*omega_b for X, Theta - psi*Theta_b for Y,
// phi - psi*phi_b for Z, each times cell^2.
void set_initial_weights(Ensembles& ens, const FieldGrid& g, const BoundaryData& b,
                         const SimConfig& c, std::atomic<std::uint64_t>* clamp_count);

// Advances every particle by one Euler-Maruyama step at time t (the start of
// the step): interpolates the carried fields at the pre-step position, updates
// phi_integral / W / force_accum, moves the particle, then refreshes the
// alive flag and applies the wall-touch reset. step_index seeds the
// counter-based noise, so the result is independent of the execution policy.
void advance_particles(Ensembles& ens, const FieldGrid& g, const BoundaryData& b,
                       const SimConfig& c, double t, std::uint64_t step_index,
                       Exec policy, std::atomic<std::uint64_t>* clamp_count);

}  // namespace obflow
