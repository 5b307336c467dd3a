#pragma once

#include <vector>

#include "obflow/config.hpp"
#include "obflow/grid.hpp"
#include "obflow/particles.hpp"
#include "obflow/vec.hpp"

namespace obflow {

// Midpoint nodes tiling [-truncation, truncation] for the wall Poisson
// integral; the width divides the interval exactly.
struct PoissonLine {
    std::vector<double> y1;
    double width = 0.0;
};
PoissonLine poisson_line_nodes(const SimConfig& c);

// Everything the per-target evaluation loops stream over, reduced once per
// step: strip quadrature nodes with premultiplied trace weights, Poisson line
// nodes carrying the boundary temperature (the kernel mass of each node's
// interval is target-dependent and applied at evaluation time), and
// per-particle effective weights (initial term + force term fused,
// exponential and multiplier factors applied, 1/n_copies folded in).
// Particles outside the half plane or with exactly zero weight are dropped;
// dropped terms contribute exact zeros to the sums.
struct EvalContext {
    const SimConfig* cfg = nullptr;
    double t = 0.0;

    std::vector<Vec2> strip_pos;
    std::vector<double> strip_w_omega;
    std::vector<double> strip_w_phi;
    std::vector<Vec2> strip_w_theta;

    std::vector<double> poisson_y1;
    std::vector<double> poisson_w;
    double poisson_halfwidth = 0.0;

    std::vector<Vec2> x_pos;
    std::vector<double> x_w;
    std::vector<Vec2> z_pos;
    std::vector<double> z_w;
    std::vector<Vec2> y_pos;
    std::vector<Vec2> y_w;
};

// b supplies the wall traces used in the strip and Poisson terms; its
// analytic entries must already be refreshed at time t.
EvalContext build_eval_context(const Ensembles& ens, const BoundaryData& b,
                               const SimConfig& c, double t);

Vec2 eval_velocity_at(const EvalContext& ctx, const Vec2& x);
double eval_temperature_at(const EvalContext& ctx, const Vec2& x);

// Writes u1, u2, theta on every grid node; the wall row gets the no-slip
// values u = 0, theta = theta_b.
void evaluate_fields(const EvalContext& ctx, const BoundaryData& b, FieldGrid& g, Exec policy);

// Evaluation at arbitrary interior points (x2 > 0 required).
void evaluate_at_points(const EvalContext& ctx, const std::vector<Vec2>& pts,
                        std::vector<Vec2>& u_out, std::vector<double>& theta_out, Exec policy);

}  // namespace obflow
