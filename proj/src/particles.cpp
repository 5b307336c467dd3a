#include "obflow/particles.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "obflow/cutoff.hpp"
#include "obflow/rng.hpp"
#include "obflow/sources.hpp"

namespace obflow {

namespace {

Vec2 site_center(const SimConfig& c, int i1, int i2) {
    return {-c.L + (i1 + 0.5) * c.s, (i2 + 0.5) * c.s};
}

}  // namespace

Ensembles init_lattice(const SimConfig& c) {
    Ensembles ens;
    ens.sites_x = c.nx_cells();
    ens.sites_y = c.ny_cells();
    ens.copies = c.n_copies;
    ens.cell = c.s;

    const std::size_t n =
        static_cast<std::size_t>(ens.sites_x) * ens.sites_y * ens.copies;
    for (auto* fam : {&ens.x, &ens.y, &ens.z}) fam->reserve(n);

    for (int copy = 0; copy < ens.copies; ++copy) {
        for (int i2 = 0; i2 < ens.sites_y; ++i2) {
            for (int i1 = 0; i1 < ens.sites_x; ++i1) {
                Particle p;
                p.pos = site_center(c, i1, i2);
                p.site_i1 = i1;
                p.site_i2 = i2;
                p.copy = copy;
                p.kind = Kind::X;
                ens.x.push_back(p);
                p.kind = Kind::Y;
                ens.y.push_back(p);
                p.kind = Kind::Z;
                ens.z.push_back(p);
            }
        }
    }
    return ens;
}

void set_initial_weights(Ensembles& ens, const FieldGrid& g, const BoundaryData& b,
                         const SimConfig& c, std::atomic<std::uint64_t>* clamp_count) {
    const double s2 = ens.cell * ens.cell;
    auto corrected = [&](const Particle& p, auto pick_field, auto pick_trace) {
        const PointFields f = interpolate(g, p.pos, clamp_count);
        const BoundaryPointData bp = interpolate_boundary(g, b, p.pos.x, clamp_count);
        const double cut = psi(p.pos.y / c.eps_cutoff);
        return (pick_field(f) - pick_trace(bp) * cut) * s2;
    };
    for (auto& p : ens.x)
        p.init_weight = {corrected(
                             p, [](const PointFields& f) { return f.omega; },
                             [](const BoundaryPointData& bp) { return bp.omega_b; }),
                         0.0};
    for (auto& p : ens.y)
        p.init_weight = corrected(
            p, [](const PointFields& f) { return f.Theta; },
            [](const BoundaryPointData& bp) { return bp.Theta_b; });
    for (auto& p : ens.z)
        p.init_weight = {corrected(
                             p, [](const PointFields& f) { return f.phi; },
                             [](const BoundaryPointData& bp) { return bp.phi_b; }),
                         0.0};
}

namespace {

enum class AdvanceError : int { none = 0, bad_density = 1, bad_velocity = 2 };

// One Euler-Maruyama step for a single particle. Accumulators are updated at
// the pre-step position and time, then the position moves, then the
// wall-touch indicators fire.
inline AdvanceError step_particle(Particle& p, const FieldGrid& g, const BoundaryData& b,
                                  const SimConfig& c, double t, std::uint64_t step_index,
                                  std::atomic<std::uint64_t>* clamp_count) {
    const PointFields f = interpolate(g, p.pos, clamp_count);
    if (!(f.rho > 0.0) || !std::isfinite(f.rho)) return AdvanceError::bad_density;
    if (!std::isfinite(f.u.x) || !std::isfinite(f.u.y)) return AdvanceError::bad_velocity;

    const bool inside = p.pos.y > 0.0;
    const double eps = c.eps_cutoff;

    if (inside) {
        // The error terms live in the band x2/eps in [1/3, 2/3]; skip the
        // wall-trace interpolation outside it.
        const bool in_band = p.pos.y >= eps / 3.0 && p.pos.y <= 2.0 * eps / 3.0;
        switch (p.kind) {
            case Kind::X: {
                double chi = 0.0;
                if (in_band) {
                    const BoundaryPointData bp = interpolate_boundary(g, b, p.pos.x, clamp_count);
                    chi = cutoff_error_term(c.mu / f.rho, eps, p.pos.y, bp.omega_b);
                }
                const double curl_f =
                    buoyancy_curl(c.alpha, f.Theta.x, theta_b_dx1(c, p.pos.x, t));
                p.force_accum.x += std::exp(p.phi_integral) * (curl_f + chi) * c.dt;
                break;
            }
            case Kind::Y: {
                Vec2 fv = heating_grad_g(c, p.pos, t);
                if (in_band) {
                    const BoundaryPointData bp = interpolate_boundary(g, b, p.pos.x, clamp_count);
                    fv = fv + cutoff_error_term(c.kappa / c.rho0, eps, p.pos.y, bp.Theta_b);
                }
                p.force_accum = p.force_accum + (p.W * fv) * c.dt;
                // Gradient multiplier dW/ds = W * Sbar with Sbar the transposed
                // Jacobian, frozen over the step; only active inside the domain.
                p.W = p.W * (Mat2::identity() + c.dt * transpose(f.S));
                break;
            }
            case Kind::Z: {
                if (in_band) {
                    const BoundaryPointData bp = interpolate_boundary(g, b, p.pos.x, clamp_count);
                    p.force_accum.x +=
                        cutoff_error_term((c.mu + c.lambda) / f.rho, eps, p.pos.y, bp.phi_b) *
                        c.dt;
                }
                break;
            }
        }
    }
    // The exponential weight integrates the divergence of the mirror-extended
    // velocity along the whole path, which is the even extension of phi; the
    // sampled value follows the odd interpolation rule, so restore the sign
    // below the wall.
    p.phi_integral += (p.pos.y < 0.0 ? -f.phi : f.phi) * c.dt;

    double nu;
    switch (p.kind) {
        case Kind::X: nu = c.mu / f.rho; break;
        case Kind::Y: nu = c.kappa / c.rho0; break;
        default: nu = (c.mu + c.lambda) / f.rho; break;
    }
    const std::uint32_t stream_id =
        static_cast<std::uint32_t>(p.site_i2) * static_cast<std::uint32_t>(c.nx_cells()) +
        static_cast<std::uint32_t>(p.site_i1);
    const std::uint32_t salt =
        static_cast<std::uint32_t>(p.kind) + 4u * static_cast<std::uint32_t>(p.copy);
    const Vec2 noise =
        normal_pair(c.seed, static_cast<std::uint32_t>(step_index), stream_id, salt);
    p.pos = p.pos + f.u * c.dt + noise * std::sqrt(2.0 * nu * c.dt);

    if (p.pos.y <= 0.0) {
        p.alive = false;          // first-exit indicator, permanent
        p.force_accum = {0.0, 0.0};  // last-touch reset; accumulation resumes on re-entry
    }
    return AdvanceError::none;
}

void advance_family(std::vector<Particle>& fam, const FieldGrid& g, const BoundaryData& b,
                    const SimConfig& c, double t, std::uint64_t step_index, Exec policy,
                    std::atomic<std::uint64_t>* clamp_count, std::atomic<int>& err) {
    const auto n = static_cast<std::int64_t>(fam.size());
    if (policy == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            const AdvanceError e = step_particle(fam[i], g, b, c, t, step_index, clamp_count);
            if (e != AdvanceError::none) err.store(static_cast<int>(e), std::memory_order_relaxed);
        }
    } else {
        for (std::int64_t i = 0; i < n; ++i) {
            const AdvanceError e = step_particle(fam[i], g, b, c, t, step_index, clamp_count);
            if (e != AdvanceError::none) err.store(static_cast<int>(e), std::memory_order_relaxed);
        }
    }
}

}  // namespace

void advance_particles(Ensembles& ens, const FieldGrid& g, const BoundaryData& b,
                       const SimConfig& c, double t, std::uint64_t step_index,
                       Exec policy, std::atomic<std::uint64_t>* clamp_count) {
    std::atomic<int> err{0};
    advance_family(ens.x, g, b, c, t, step_index, policy, clamp_count, err);
    advance_family(ens.y, g, b, c, t, step_index, policy, clamp_count, err);
    advance_family(ens.z, g, b, c, t, step_index, policy, clamp_count, err);
    if (const int e = err.load(); e != 0) {
        throw std::runtime_error(
            e == static_cast<int>(AdvanceError::bad_density)
                ? "particle advance: non-positive or non-finite density under a particle"
                : "particle advance: non-finite velocity under a particle");
    }
}

}  // namespace obflow
