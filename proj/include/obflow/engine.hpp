#pragma once

#include <cstdint>
#include <functional>

#include "obflow/config.hpp"
#include "obflow/fields_eval.hpp"
#include "obflow/grid.hpp"
#include "obflow/particles.hpp"

namespace obflow {

struct SimState {
    SimConfig cfg;
    FieldGrid grid;
    BoundaryData bdata;  // wall-trace estimates carried between steps
    Ensembles ens;
    long step_index = 0;
    double t = 0.0;
    std::uint64_t clamp_events = 0;   // off-grid interpolation clamps so far
    std::uint64_t cfl_warnings = 0;   // steps whose advective CFL number exceeded 0.9
};

// Rest start: u = 0, theta = theta0, rho = rho0, ensembles on the cell-center
// lattice with cut-off-corrected initial weights.
SimState initialize(const SimConfig& c);

// One time step: evaluate u and theta from the current ensembles with the
// boundary programs at t + dt (wall vorticity/expansion traces lagged one
// step), derive gradients, refresh the trace estimates (picard_iterations
// fixed-point sweeps), transport the density, then advance the particles.
// Failures are rethrown with the step index and time prepended.
void step(SimState& st, Exec policy);

using SnapshotFn = std::function<void(const SimState&)>;

// Runs the configured schedule, invoking on_snapshot whenever the step
// counter lands on a configured snapshot time (including t = 0).
void run(SimState& st, Exec policy, const SnapshotFn& on_snapshot);

struct CostEstimate {
    std::uint64_t steps = 0;
    std::uint64_t particles = 0;
    std::uint64_t targets = 0;
    double kernel_evals = 0.0;    // predicted mollified-kernel evaluations
    double kernel_rate = 0.0;     // measured single-thread evaluations per second
    double seconds = 0.0;         // predicted single-thread wall-clock
};

// Cost model for `run --dry-run`: counts the kernel work of the evaluation
// loops and scales by a measured throughput microbenchmark.
CostEstimate dry_run(const SimConfig& c);

}  // namespace obflow
