#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "obflow/config.hpp"
#include "obflow/fields_eval.hpp"
#include "obflow/grid.hpp"
#include "obflow/io.hpp"
#include "obflow/particles.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

// Times the two hot loops (field evaluation over the grid, particle advance)
// under the serial and the OpenMP execution policies and checks that both
// produce bitwise-identical results.
namespace {

using namespace obflow;

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    const int nx = (argc > 1) ? std::atoi(argv[1]) : 40;
    if (nx < 6 || nx % 2 != 0) {
        std::fprintf(stderr, "usage: bench_kernels [nx], nx even and >= 6\n");
        return 2;
    }

    SimConfig c = parse_config_text("", "<defaults>");
    c.s = 2.0 * c.L / nx;
    c.s_b = c.s / 10.0;
    c.eps_cutoff = c.s;
    c.validate();

    FieldGrid g = make_grid(c);
    const double t = 40.0;
    for (int lev = 0; lev < g.nlev(); ++lev) {
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t k = g.idx(i, lev);
            const double x1 = g.x1(i), x2 = g.x2(lev);
            const double e = std::exp(-0.1 * (x1 * x1 + (x2 - 2.0) * (x2 - 2.0)));
            g.u1[k] = 0.3 * e * x2;
            g.u2[k] = 0.2 * e * x1 * x2;
            g.theta[k] = c.theta0 + e;
            g.rho[k] = c.rho0;
        }
    }
    derive_grid_fields(g);
    const BoundaryData bd = estimate_boundary_values(g, c, t);

    Ensembles ens = init_lattice(c);
    std::atomic<std::uint64_t> clamps{0};
    set_initial_weights(ens, g, bd, c, &clamps);

    const EvalContext ctx = build_eval_context(ens, bd, c, t);
    const int reps = 3;

    FieldGrid gs = g, gp = g;
    auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) evaluate_fields(ctx, bd, gs, Exec::serial);
    const double eval_serial = seconds_since(t0) / reps;
    t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) evaluate_fields(ctx, bd, gp, Exec::parallel);
    const double eval_parallel = seconds_since(t0) / reps;
    const bool eval_same =
        same_bits(gs.u1, gp.u1) && same_bits(gs.u2, gp.u2) && same_bits(gs.theta, gp.theta);

    Ensembles es = ens, ep = ens;
    t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r)
        advance_particles(es, g, bd, c, t + r * c.dt, 1000 + r, Exec::serial, &clamps);
    const double adv_serial = seconds_since(t0) / reps;
    t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r)
        advance_particles(ep, g, bd, c, t + r * c.dt, 1000 + r, Exec::parallel, &clamps);
    const double adv_parallel = seconds_since(t0) / reps;
    bool adv_same = es.x.size() == ep.x.size();
    for (std::size_t i = 0; adv_same && i < es.x.size(); ++i) {
        adv_same = es.x[i].pos.x == ep.x[i].pos.x && es.x[i].pos.y == ep.x[i].pos.y &&
                   es.y[i].phi_integral == ep.y[i].phi_integral &&
                   es.z[i].force_accum.x == ep.z[i].force_accum.x;
    }

    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::printf("grid %d x %d, %zu particles per family, %d thread(s)\n", g.nx, g.nlev(),
                ens.x.size(), threads);
    std::printf("%-18s serial %8.4f s   parallel %8.4f s   speedup %.2fx   bitwise %s\n",
                "field evaluation", eval_serial, eval_parallel, eval_serial / eval_parallel,
                eval_same ? "equal" : "DIFFERENT");
    std::printf("%-18s serial %8.4f s   parallel %8.4f s   speedup %.2fx   bitwise %s\n",
                "particle advance", adv_serial, adv_parallel, adv_serial / adv_parallel,
                adv_same ? "equal" : "DIFFERENT");
    return (eval_same && adv_same) ? 0 : 1;
}
