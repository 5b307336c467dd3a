#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "obflow/config.hpp"
#include "obflow/cutoff.hpp"
#include "obflow/engine.hpp"
#include "obflow/io.hpp"
#include "obflow/kernels.hpp"
#include "obflow/oracle.hpp"
#include "obflow/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

constexpr const char* kVersion = "0.1.0";

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Rescales the snapshot schedule with a total-time override, snapping each
// time back onto the step grid.
void override_total_time(obflow::SimConfig& cfg, double T_new) {
    std::vector<double> ts;
    if (cfg.T > 0.0) {
        const double ratio = T_new / cfg.T;
        for (double v : cfg.snapshot_times) ts.push_back(v * ratio);
    } else if (T_new > 0.0) {
        ts = {0.0, T_new / 3.0, 2.0 * T_new / 3.0, T_new};
    } else {
        ts = {0.0};
    }
    for (double& v : ts) v = std::clamp(std::round(v / cfg.dt) * cfg.dt, 0.0, T_new);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    cfg.T = T_new;
    cfg.snapshot_times = ts;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool have_seed,
            std::uint64_t seed, bool have_T, double T_new, bool dry, bool dump_particles) {
    using obflow::SimConfig;
    SimConfig cfg = config_path.empty() ? obflow::parse_config_text("", "<defaults>")
                                        : obflow::parse_config(config_path);
    if (have_seed) cfg.seed = seed;
    if (have_T) override_total_time(cfg, T_new);
    cfg.validate();

    if (dry) {
        const obflow::CostEstimate est = obflow::dry_run(cfg);
        std::printf("steps            %llu\n", static_cast<unsigned long long>(est.steps));
        std::printf("particles        %llu\n", static_cast<unsigned long long>(est.particles));
        std::printf("eval targets     %llu\n", static_cast<unsigned long long>(est.targets));
        std::printf("kernel evals     %.4g\n", est.kernel_evals);
        std::printf("kernel rate      %.4g /s\n", est.kernel_rate);
        std::printf("predicted time   %.1f s (single thread)\n", est.seconds);
        return 0;
    }

    std::filesystem::create_directories(out_dir);

    obflow::RunManifest man;
    man.version = kVersion;
    man.seed = cfg.seed;
    man.config_echo = obflow::serialize_config(cfg);
    man.start_time = obflow::iso8601_utc_now();
    man.threads = max_threads();

    const auto t0 = std::chrono::steady_clock::now();
    obflow::SimState st = obflow::initialize(cfg);
    bool ok = true;
    std::string err;
    try {
        obflow::run(st, obflow::Exec::parallel, [&](const obflow::SimState& s) {
            const obflow::WrittenFile wf = obflow::write_snapshot(s.grid, s.t, out_dir);
            man.snapshots.push_back({s.t, wf.name, wf.checksum});
            std::fprintf(stderr, "t = %8.3f  ->  %s\n", s.t, wf.name.c_str());
        });
    } catch (const std::exception& e) {
        ok = false;
        err = e.what();
    }
    const auto t1 = std::chrono::steady_clock::now();

    man.end_time = obflow::iso8601_utc_now();
    man.wallclock_seconds = std::chrono::duration<double>(t1 - t0).count();
    man.complete = ok;
    man.interpolation_clamps = st.clamp_events;
    man.cfl_warnings = st.cfl_warnings;

    if (dump_particles)
        obflow::write_particles(st.ens, (std::filesystem::path(out_dir) / "particles.csv").string());
    obflow::write_manifest(man, (std::filesystem::path(out_dir) / "manifest.json").string());
    if (ok) obflow::emit_plot_scripts(man, out_dir);

    if (!ok) {
        std::fprintf(stderr, "error: %s\n", err.c_str());
        std::fprintf(stderr, "partial outputs kept in %s (manifest marked incomplete)\n",
                     out_dir.c_str());
        return 1;
    }
    std::printf("run complete: %ld steps, %zu snapshots, %.2f s, %d thread(s)\n", st.step_index,
                man.snapshots.size(), man.wallclock_seconds, man.threads);
    if (st.cfl_warnings > 0)
        std::printf("note: %llu step(s) ran above 0.9 advective CFL\n",
                    static_cast<unsigned long long>(st.cfl_warnings));
    return 0;
}

struct CheckList {
    int failed = 0;
    void check(const char* name, bool ok) {
        std::printf("  %-44s %s\n", name, ok ? "ok" : "FAIL");
        if (!ok) ++failed;
    }
};

// Fast self-contained identities over the kernel, cut-off, RNG and config
// layers; independent of any run directory.
int invariant_suite() {
    using namespace obflow;
    CheckList cl;

    const Vec2 y{1.3, 2.1};
    const Vec2 xw{0.4, 0.0};
    const Vec2 bs = biot_savart(y, xw);
    cl.check("velocity kernel vanishes on the wall", bs.x == 0.0 && bs.y == 0.0);
    cl.check("half-space Green function vanishes on the wall",
             green_half(y, xw) == 0.0);

    const Vec2 a{0.7, 1.9}, b{-1.2, 0.6};
    cl.check("Green symmetry", std::abs(green_half(a, b) - green_half(b, a)) < 1e-15);

    const double eps = 0.3;
    const Vec2 same = biot_savart_mollified(a, a, eps);
    const Vec2 nearby = biot_savart_mollified(a + Vec2{1e-8, 0.0}, a, eps);
    cl.check("mollified kernel continuous at the pole",
             same.x == 0.0 && same.y == 0.0 && std::abs(nearby.x) + std::abs(nearby.y) < 1e-7);

    cl.check("wall Poisson kernel at unit height", std::abs(poisson_half({0.0, 1.0}, 0.0) -
                                                            1.0 / kPi) < 1e-15);

    cl.check("cut-off inner plateau", psi(0.2) == 1.0 && psi(1.0 / 3.0) == 1.0);
    cl.check("cut-off midpoint", std::abs(psi(0.5) - 0.5) < 1e-15);
    cl.check("cut-off outer zero", psi(0.8) == 0.0 && psi(2.0 / 3.0) == 0.0);
    cl.check("cut-off curvature sample", std::abs(psi_double_prime(5.0 / 12.0) + 27.0) < 1e-12);

    const Vec2 w = wedge2({2.0, 3.0}, 5.0);
    cl.check("wedge identity", w.x == 15.0 && w.y == -10.0);

    const auto kat = Philox4x32::block({0u, 0u, 0u, 0u}, 0u, 0u);
    cl.check("counter RNG known answer", kat[0] == 0x6627e8d5u);

    Mat2 M{0.3, -0.2, 0.1, 0.25};
    Mat2 U = Mat2::identity();
    for (int i = 0; i < 100; ++i) U = oracle::multiplier_step(U, M, 0.01);
    const Mat2 E = oracle::expm2(M);
    cl.check("ordered multiplier matches matrix exponential",
             std::abs(U.a - E.a) + std::abs(U.b - E.b) + std::abs(U.c - E.c) +
                     std::abs(U.d - E.d) <
                 1e-10);

    const SimConfig def = parse_config_text("", "<defaults>");
    const std::string echo = serialize_config(def);
    const SimConfig back = parse_config_text(echo, "<echo>");
    cl.check("config echo re-parses identically", serialize_config(back) == echo);

    cl.check("snapshot naming", snapshot_filename(40.0) == std::string("fields_t0040.000.csv"));

    return cl.failed;
}

int cmd_validate(const std::string& run_dir) {
    std::printf("invariants:\n");
    int failed = invariant_suite();

    if (!run_dir.empty()) {
        const std::string man_path =
            (std::filesystem::path(run_dir) / "manifest.json").string();
        const obflow::RunManifest man = obflow::read_manifest(man_path);
        std::printf("run %s:\n", run_dir.c_str());

        bool echo_ok = true;
        try {
            const obflow::SimConfig cfg =
                obflow::parse_config_text(man.config_echo, "<manifest>");
            echo_ok = obflow::serialize_config(cfg) == man.config_echo;
        } catch (const std::exception&) {
            echo_ok = false;
        }
        std::printf("  %-44s %s\n", "config echo re-parses identically",
                    echo_ok ? "ok" : "FAIL");
        if (!echo_ok) ++failed;

        for (const obflow::ManifestSnapshot& s : man.snapshots) {
            const std::string path = (std::filesystem::path(run_dir) / s.file).string();
            bool ok = false;
            std::string label = s.file;
            try {
                const std::string bytes = read_file(path);
                ok = obflow::fnv1a64(bytes.data(), bytes.size()) == s.checksum;
                if (!ok) label += " (checksum mismatch)";
            } catch (const std::exception&) {
                label += " (missing)";
            }
            std::printf("  %-44s %s\n", label.c_str(), ok ? "ok" : "FAIL");
            if (!ok) ++failed;
        }
        if (!man.complete) {
            std::printf("  %-44s %s\n", "manifest marked complete", "FAIL");
            ++failed;
        }
    }

    if (failed) {
        std::printf("%d check(s) failed\n", failed);
        return 1;
    }
    std::printf("all checks passed\n");
    return 0;
}

int cmd_oracle(std::uint64_t seed, const std::string& out_path) {
    const auto rows = obflow::oracle::run_equivalence_suite(seed);
    const std::string csv = obflow::oracle::suite_csv(rows);
    if (out_path.empty()) {
        std::fputs(csv.c_str(), stdout);
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + out_path);
        out << csv;
        std::printf("wrote %s\n", out_path.c_str());
    }
    const bool all = std::all_of(rows.begin(), rows.end(),
                                 [](const obflow::oracle::SuiteRow& r) { return r.pass; });
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte-Carlo simulation of wall-bounded convective flow"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "integrate a configuration and write snapshots");
    std::string config_path, out_dir = "out";
    std::uint64_t seed = 0;
    double T_new = 0.0;
    bool dry = false, dump = false;
    run->add_option("--config", config_path, "configuration file (omit for built-in defaults)")
        ->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory")->capture_default_str();
    auto* seed_opt = run->add_option("--seed", seed, "override the RNG seed");
    auto* t_opt = run->add_option("--T", T_new, "override the total simulated time");
    run->add_flag("--dry-run", dry, "print the cost estimate and exit");
    run->add_flag("--dump-particles", dump, "also write the final particle states");

    auto* val = app.add_subcommand("validate", "check invariants and run-directory checksums");
    std::string run_dir;
    val->add_option("dir", run_dir, "run directory containing manifest.json");

    auto* orc = app.add_subcommand("oracle",
                                   "cross-check the path estimator against grid solutions");
    std::uint64_t oracle_seed = 777;
    std::string oracle_out;
    orc->add_option("--seed", oracle_seed, "suite seed")->capture_default_str();
    orc->add_option("--out", oracle_out, "write the CSV here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(config_path, out_dir, seed_opt->count() > 0, seed,
                           t_opt->count() > 0, T_new, dry, dump);
        if (val->parsed()) return cmd_validate(run_dir);
        if (orc->parsed()) return cmd_oracle(oracle_seed, oracle_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
