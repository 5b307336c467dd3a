#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace obflow {

enum class WeightConvention { as_printed, none_on_temperature };
enum class ThetaB2Mode { one_sided, zero };

// Full simulation parameter set. Defaults reproduce the reference convection
// experiment on [-L,L] x [0,L] with the unit-Rayleigh heating program.
struct SimConfig {
    double mu = 0.15;          // shear viscosity
    double lambda = 0.15;      // bulk viscosity
    double kappa = 1.0;        // thermal diffusivity
    double alpha = 0.005;      // buoyancy coupling
    double rho0 = 1.0;         // reference density
    double theta0 = 0.01;      // initial temperature level
    double eps_b = 0.05;       // kernel mollification scale (squared-distance units)
    double eps_cutoff = 0.05 * std::numbers::pi;  // wall cut-off width, default = s
    double L = 2.0 * std::numbers::pi;
    double s = 0.05 * std::numbers::pi;   // coarse mesh size
    double s_b = 0.005 * std::numbers::pi;  // refined wall-row spacing, default = s/10
    double dt = 0.1;
    double T = 120.0;
    double truncation = 100.0;  // boundary-integral truncation half-width
    std::vector<double> snapshot_times = {0.0, 40.0, 80.0, 120.0};
    int n_copies = 1;
    int picard_iterations = 1;
    uint64_t seed = 12345;
    bool freeze_rho = false;
    bool heating_on = true;
    WeightConvention weight_convention = WeightConvention::as_printed;
    // Wall-normal temperature gradient: treat the tangential wall layer as
    // insulated (zero) or estimate the trace with the one-sided stencil. The
    // stencil couples measured fields back into the wall-layer forcing and is
    // only stable well below the default time step.
    ThetaB2Mode theta_b2_mode = ThetaB2Mode::zero;

    int nx_cells() const { return static_cast<int>(std::llround(2.0 * L / s)); }
    int ny_cells() const { return static_cast<int>(std::llround(L / s)); }
    int wall_subdivisions() const { return static_cast<int>(std::llround(s / s_b)); }
    long steps() const { return std::lround(T / dt); }

    void validate() const {
        auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
        if (!(mu > 0.0)) fail("mu must be positive");
        if (!(kappa > 0.0)) fail("kappa must be positive");
        if (!(rho0 > 0.0)) fail("rho0 must be positive");
        if (!(mu + lambda > 0.0)) fail("mu + lambda must be positive");
        if (!(s > 0.0)) fail("s must be positive");
        if (!(s_b > 0.0)) fail("s_b must be positive");
        if (!(s_b < s)) fail("s_b must be smaller than s");
        if (!(dt > 0.0)) fail("dt must be positive");
        if (!(T >= 0.0)) fail("T must be non-negative");
        if (!(L > 0.0)) fail("L must be positive");
        if (!(eps_b > 0.0)) fail("eps_b must be positive");
        if (!(truncation > 0.0)) fail("truncation must be positive");
        if (!(eps_cutoff > 0.0) || eps_cutoff > L / 4.0 + 1e-12)
            fail("eps_cutoff must lie in (0, L/4]");
        if (n_copies < 1) fail("n_copies must be at least 1");
        if (picard_iterations < 1) fail("picard_iterations must be at least 1");
        if (std::abs(T / dt - std::round(T / dt)) > 1e-9)
            fail("T must be an integer multiple of dt");
        if (std::abs(2.0 * L / s - std::round(2.0 * L / s)) > 1e-9 ||
            std::abs(L / s - std::round(L / s)) > 1e-9)
            fail("L must be an integer multiple of s in both axes");
        if (std::abs(s / s_b - std::round(s / s_b)) > 1e-9)
            fail("s must be an integer multiple of s_b");
        if (nx_cells() < 3 || ny_cells() < 3) fail("grid too small (< 3 nodes per axis)");
        if (wall_subdivisions() < 2) fail("wall refinement needs at least 2 sub-rows");
        for (double ts : snapshot_times) {
            if (ts < -1e-9 || ts > T + 1e-9) fail("snapshot time outside [0, T]");
            if (std::abs(ts / dt - std::round(ts / dt)) > 1e-9)
                fail("snapshot times must be integer multiples of dt");
        }
    }
};

}  // namespace obflow
