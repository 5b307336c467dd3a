#include "obflow/fields_eval.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "obflow/cutoff.hpp"
#include "obflow/kernels.hpp"
#include "obflow/sources.hpp"

namespace obflow {

namespace {
constexpr int kStripSubRows = 10;
}

PoissonLine poisson_line_nodes(const SimConfig& c) {
    PoissonLine line;
    const double span = 2.0 * c.truncation;
    const int m = static_cast<int>(std::ceil(span / c.s));
    line.width = span / m;
    line.y1.resize(m);
    for (int j = 0; j < m; ++j) line.y1[j] = -c.truncation + (j + 0.5) * line.width;
    return line;
}

EvalContext build_eval_context(const Ensembles& ens, const BoundaryData& b,
                               const SimConfig& c, double t) {
    EvalContext ctx;
    ctx.cfg = &c;
    ctx.t = t;

    const int nx_nodes = c.nx_cells() + 1;
    const double dxi2 = c.eps_cutoff / kStripSubRows;
    for (int k = 0; k < kStripSubRows; ++k) {
        const double xi2 = (k + 0.5) * dxi2;
        const double cut = psi(xi2 / c.eps_cutoff);
        if (cut == 0.0) continue;
        const double w = cut * c.s * dxi2;
        for (int i = 0; i < nx_nodes; ++i) {
            const double wo = w * b.omega_b[i];
            const double wp = w * b.phi_b[i];
            const Vec2 wt{w * b.Theta_b1[i], w * b.Theta_b2[i]};
            if (wo == 0.0 && wp == 0.0 && wt.x == 0.0 && wt.y == 0.0) continue;
            ctx.strip_pos.push_back({-c.L + i * c.s, xi2});
            ctx.strip_w_omega.push_back(wo);
            ctx.strip_w_phi.push_back(wp);
            ctx.strip_w_theta.push_back(wt);
        }
    }

    const PoissonLine line = poisson_line_nodes(c);
    ctx.poisson_halfwidth = 0.5 * line.width;
    for (double y1 : line.y1) {
        const double w = theta_b(c, y1, t);
        if (w == 0.0) continue;
        ctx.poisson_y1.push_back(y1);
        ctx.poisson_w.push_back(w);
    }

    const double s2 = ens.cell * ens.cell;
    const double inv_copies = 1.0 / ens.copies;

    for (const auto& p : ens.x) {
        if (!(p.pos.y > 0.0)) continue;
        const double w = ((p.alive ? p.init_weight.x : 0.0) + s2 * p.force_accum.x) * inv_copies;
        if (w == 0.0) continue;
        ctx.x_pos.push_back(p.pos);
        ctx.x_w.push_back(w);
    }
    for (const auto& p : ens.z) {
        if (!(p.pos.y > 0.0)) continue;
        const double base = (p.alive ? p.init_weight.x : 0.0) + s2 * p.force_accum.x;
        if (base == 0.0) continue;
        ctx.z_pos.push_back(p.pos);
        ctx.z_w.push_back(std::exp(p.phi_integral) * base * inv_copies);
    }
    const bool temp_weight = c.weight_convention == WeightConvention::as_printed;
    for (const auto& p : ens.y) {
        if (!(p.pos.y > 0.0)) continue;
        const Vec2 base{(p.alive ? p.init_weight.x : 0.0) + s2 * p.force_accum.x,
                        (p.alive ? p.init_weight.y : 0.0) + s2 * p.force_accum.y};
        if (base.x == 0.0 && base.y == 0.0) continue;
        const double w = temp_weight ? std::exp(p.phi_integral) : 1.0;
        ctx.y_pos.push_back(p.pos);
        ctx.y_w.push_back((inverse(p.W) * base) * (w * inv_copies));
    }
    return ctx;
}

Vec2 eval_velocity_at(const EvalContext& ctx, const Vec2& x) {
    const double eps_b = ctx.cfg->eps_b;
    Vec2 u{0.0, 0.0};
    const std::size_t ns = ctx.strip_pos.size();
    for (std::size_t i = 0; i < ns; ++i) {
        const Vec2 lam = biot_savart_mollified(ctx.strip_pos[i], x, eps_b);
        u += wedge2(lam, ctx.strip_w_omega[i]) - lam * ctx.strip_w_phi[i];
    }
    const std::size_t nxp = ctx.x_pos.size();
    for (std::size_t i = 0; i < nxp; ++i)
        u += wedge2(biot_savart_mollified(ctx.x_pos[i], x, eps_b), ctx.x_w[i]);
    const std::size_t nzp = ctx.z_pos.size();
    for (std::size_t i = 0; i < nzp; ++i)
        u -= biot_savart_mollified(ctx.z_pos[i], x, eps_b) * ctx.z_w[i];
    return u;
}

double eval_temperature_at(const EvalContext& ctx, const Vec2& x) {
    const double eps_b = ctx.cfg->eps_b;
    double th = 0.0;
    const double hw = ctx.poisson_halfwidth;
    const std::size_t np = ctx.poisson_y1.size();
    for (std::size_t j = 0; j < np; ++j) {
        const double y1 = ctx.poisson_y1[j];
        th += poisson_half_mass(x, y1 - hw, y1 + hw) * ctx.poisson_w[j];
    }
    const std::size_t ns = ctx.strip_pos.size();
    for (std::size_t i = 0; i < ns; ++i)
        th -= dot(biot_savart_mollified(ctx.strip_pos[i], x, eps_b), ctx.strip_w_theta[i]);
    const std::size_t nyp = ctx.y_pos.size();
    for (std::size_t i = 0; i < nyp; ++i)
        th -= dot(biot_savart_mollified(ctx.y_pos[i], x, eps_b), ctx.y_w[i]);
    return th;
}

void evaluate_fields(const EvalContext& ctx, const BoundaryData& b, FieldGrid& g, Exec policy) {
    const auto nx = static_cast<std::int64_t>(g.nx);
    const auto nlev = static_cast<std::int64_t>(g.nlev());
    const auto total = nx * nlev;
    auto eval_node = [&](std::int64_t k) {
        const auto lev = static_cast<int>(k / nx);
        const auto i = static_cast<int>(k % nx);
        const std::size_t id = g.idx(i, lev);
        if (lev == 0) {
            g.u1[id] = 0.0;
            g.u2[id] = 0.0;
            g.theta[id] = b.theta_b[i];
            return;
        }
        const Vec2 x{g.x1(i), g.x2(lev)};
        const Vec2 u = eval_velocity_at(ctx, x);
        g.u1[id] = u.x;
        g.u2[id] = u.y;
        g.theta[id] = eval_temperature_at(ctx, x);
    };
    if (policy == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t k = 0; k < total; ++k) eval_node(k);
    } else {
        for (std::int64_t k = 0; k < total; ++k) eval_node(k);
    }
}

void evaluate_at_points(const EvalContext& ctx, const std::vector<Vec2>& pts,
                        std::vector<Vec2>& u_out, std::vector<double>& theta_out, Exec policy) {
    for (const auto& p : pts)
        if (!(p.y > 0.0))
            throw std::invalid_argument("evaluate_at_points: targets must satisfy x2 > 0");
    const auto n = static_cast<std::int64_t>(pts.size());
    u_out.resize(pts.size());
    theta_out.resize(pts.size());
    if (policy == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            u_out[i] = eval_velocity_at(ctx, pts[i]);
            theta_out[i] = eval_temperature_at(ctx, pts[i]);
        }
    } else {
        for (std::int64_t i = 0; i < n; ++i) {
            u_out[i] = eval_velocity_at(ctx, pts[i]);
            theta_out[i] = eval_temperature_at(ctx, pts[i]);
        }
    }
}

}  // namespace obflow
