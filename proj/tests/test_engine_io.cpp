#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "obflow/engine.hpp"
#include "obflow/io.hpp"
#include "obflow/kernels.hpp"

using namespace obflow;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "obflow_tests" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

SimConfig tiny_run_config() {
    SimConfig c;
    c.s = kPi / 5.0;
    c.s_b = kPi / 50.0;
    c.eps_cutoff = c.s;
    c.dt = 0.1;
    c.T = 0.4;
    c.n_copies = 2;
    c.snapshot_times = {0.0, 0.4};
    c.seed = 7;
    return c;
}

}  // namespace

TEST_CASE("config text: defaults, single overrides, derived keys") {
    const SimConfig def;
    CHECK(serialize_config(parse_config_text("", "<t>")) == serialize_config(def));

    SimConfig want = def;
    want.dt = 0.05;
    CHECK(serialize_config(parse_config_text("dt = 0.05\n", "<t>")) == serialize_config(want));

    const SimConfig d1 = parse_config_text("s = 0.31415926535897931\nT = 60\n", "<t>");
    CHECK(d1.s_b == doctest::Approx(d1.s / 10.0).epsilon(1e-15));
    CHECK(d1.eps_cutoff == d1.s);
    REQUIRE(d1.snapshot_times.size() == 4);
    CHECK(d1.snapshot_times[1] == doctest::Approx(20.0));
    CHECK(d1.snapshot_times[3] == doctest::Approx(60.0));

    const SimConfig d2 =
        parse_config_text("s = 0.31415926535897931\ns_b = 0.015707963267948966\n", "<t>");
    CHECK(d2.s_b == doctest::Approx(0.015707963267948966));
}

TEST_CASE("config text: errors carry source and line") {
    auto expect = [](const std::string& text, const std::string& needle) {
        try {
            (void)parse_config_text(text, "<t>");
            FAIL_CHECK("expected a parse error mentioning '" << needle << "'");
        } catch (const std::exception& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect("mu = 0.2\n\nbogus = 1\n", "bogus");
    expect("mu = 0.2\n\nbogus = 1\n", ":3:");
    expect("mu = abc\n", ":1:");
    expect("mu = -1\n", "mu");
}

TEST_CASE("config serialization round trip") {
    SimConfig c;
    c.mu = 0.21;
    c.lambda = 0.09;
    c.kappa = 1.3;
    c.alpha = 0.0075;
    c.dt = 0.1;
    c.T = 0.3;
    c.n_copies = 7;
    c.seed = 99;
    c.heating_on = false;
    c.freeze_rho = true;
    c.theta_b2_mode = ThetaB2Mode::zero;
    c.weight_convention = WeightConvention::none_on_temperature;
    c.snapshot_times = {0.0, 0.3};
    const std::string s1 = serialize_config(c);
    const std::string s2 = serialize_config(parse_config_text(s1, "<echo>"));
    CHECK(s1 == s2);
}

TEST_CASE("checksum known answers") {
    CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("snapshot file naming") {
    CHECK(snapshot_filename(40.0) == "fields_t0040.000.csv");
    CHECK(snapshot_filename(0.05) == "fields_t0000.050.csv");
    CHECK(snapshot_filename(120.0) == "fields_t0120.000.csv");
}

TEST_CASE("snapshot write/read round trip is bit exact") {
    const fs::path dir = scratch_dir("snap");
    SimConfig c = tiny_run_config();
    FieldGrid g = make_grid(c);
    for (int lev = 0; lev < g.nlev(); ++lev)
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t k = g.idx(i, lev);
            g.u1[k] = 0.1 * i - 0.2 * lev + 1e-17;
            g.u2[k] = std::sin(0.1 * k);
            g.theta[k] = 12345.6789 * (k % 7);
            g.rho[k] = 1.0 + 1e-13 * k;
            g.omega[k] = -0.5 * i;
            g.phi[k] = 0.25 * lev;
            g.Theta1[k] = 1.0 / (1.0 + k);
            g.Theta2[k] = -3.0e8 * ((k % 3) - 1);
        }
    const WrittenFile wf = write_snapshot(g, 0.4, dir.string());
    CHECK(wf.name == "fields_t0000.400.csv");
    const std::string bytes = slurp(wf.path);
    CHECK(wf.checksum == fnv1a64(bytes.data(), bytes.size()));

    const SnapshotTable tab = read_snapshot(wf.path);
    REQUIRE(tab.rows() == g.nodes());
    bool ok = true;
    for (int lev = 0; lev < g.nlev() && ok; ++lev)
        for (int i = 0; i < g.nx && ok; ++i) {
            const std::size_t k = g.idx(i, lev);
            ok = tab.x1[k] == g.x1(i) && tab.x2[k] == g.x2(lev) && tab.u1[k] == g.u1[k] &&
                 tab.u2[k] == g.u2[k] && tab.theta[k] == g.theta[k] && tab.rho[k] == g.rho[k] &&
                 tab.omega[k] == g.omega[k] && tab.phi[k] == g.phi[k] &&
                 tab.Theta1[k] == g.Theta1[k] && tab.Theta2[k] == g.Theta2[k];
        }
    CHECK(ok);
}

TEST_CASE("snapshot reader rejects malformed files") {
    const fs::path dir = scratch_dir("snapbad");
    {
        std::ofstream out(dir / "bad_header.csv");
        out << "x1,x2,u1\n0,0,0\n";
    }
    CHECK_THROWS((void)read_snapshot((dir / "bad_header.csv").string()));
    {
        std::ofstream out(dir / "bad_row.csv");
        out << "x1,x2,u1,u2,theta,rho,omega,phi,Theta1,Theta2\n";
        out << "0,0,0,0,0,0,0,0,0,0\n";
        out << "1,0,nope,0,0,0,0,0,0,0\n";
    }
    try {
        (void)read_snapshot((dir / "bad_row.csv").string());
        FAIL_CHECK("expected a reader error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
    CHECK_THROWS((void)read_snapshot((dir / "missing.csv").string()));
}

TEST_CASE("particle dump format") {
    const fs::path dir = scratch_dir("pdump");
    Ensembles e;
    Particle p;
    p.pos = {0.25, 1.5};
    p.site_i1 = 3;
    p.site_i2 = 4;
    p.kind = Kind::X;
    e.x.push_back(p);
    p.kind = Kind::Y;
    p.alive = false;
    e.y.push_back(p);
    const WrittenFile wf = write_particles(e, (dir / "particles.csv").string());
    const std::string bytes = slurp(wf.path);
    CHECK(wf.checksum == fnv1a64(bytes.data(), bytes.size()));
    std::istringstream ss(bytes);
    std::string line;
    std::getline(ss, line);
    CHECK(line == "site_i1,site_i2,kind,x1,x2,alive,phi_integral,det_W");
    std::getline(ss, line);
    CHECK(line.rfind("3,4,0,0.25,1.5,1,", 0) == 0);
    std::getline(ss, line);
    CHECK(line.rfind("3,4,1,0.25,1.5,0,", 0) == 0);
    CHECK_FALSE(std::getline(ss, line));
}

TEST_CASE("manifest round trip") {
    const fs::path dir = scratch_dir("manifest");
    RunManifest m;
    m.version = "0.1.0";
    m.seed = 12345;
    m.config_echo = serialize_config(SimConfig{});
    m.start_time = "2026-01-02T03:04:05Z";
    m.end_time = "2026-01-02T03:14:05Z";
    m.threads = 4;
    m.wallclock_seconds = 600.25;
    m.complete = true;
    m.interpolation_clamps = 17;
    m.cfl_warnings = 2;
    m.snapshots.push_back({0.0, "fields_t0000.000.csv", 0xdeadbeefcafef00dull});
    m.snapshots.push_back({40.0, "fields_t0040.000.csv", 0x0123456789abcdefull});
    const std::string path = (dir / "manifest.json").string();
    write_manifest(m, path);
    const RunManifest r = read_manifest(path);
    CHECK(r.version == m.version);
    CHECK(r.seed == m.seed);
    CHECK(r.config_echo == m.config_echo);
    CHECK(r.start_time == m.start_time);
    CHECK(r.end_time == m.end_time);
    CHECK(r.threads == m.threads);
    CHECK(r.wallclock_seconds == doctest::Approx(m.wallclock_seconds));
    CHECK(r.complete == m.complete);
    CHECK(r.interpolation_clamps == m.interpolation_clamps);
    CHECK(r.cfl_warnings == m.cfl_warnings);
    REQUIRE(r.snapshots.size() == 2);
    CHECK(r.snapshots[0].file == m.snapshots[0].file);
    CHECK(r.snapshots[0].checksum == m.snapshots[0].checksum);
    CHECK(r.snapshots[1].t == doctest::Approx(40.0));
}

TEST_CASE("plot script emission") {
    const fs::path dir = scratch_dir("plots");
    SimConfig c = tiny_run_config();
    FieldGrid g = make_grid(c);
    const WrittenFile w0 = write_snapshot(g, 0.0, dir.string());
    const WrittenFile w1 = write_snapshot(g, 0.4, dir.string());
    RunManifest m;
    m.version = "0.1.0";
    m.snapshots.push_back({0.0, w0.name, w0.checksum});
    m.snapshots.push_back({0.4, w1.name, w1.checksum});
    const auto scripts = emit_plot_scripts(m, dir.string());
    CHECK(scripts.size() == 6);
    bool mentions = false;
    for (const auto& s : scripts) {
        CHECK(fs::exists(s));
        if (slurp(s).find(w0.name) != std::string::npos) mentions = true;
    }
    CHECK(mentions);

    fs::remove(dir / w1.name);
    CHECK_THROWS((void)emit_plot_scripts(m, dir.string()));
}

TEST_CASE("engine: zero-horizon run emits exactly the initial snapshot") {
    SimConfig c = tiny_run_config();
    c.T = 0.0;
    c.snapshot_times = {0.0};
    SimState st = initialize(c);
    int calls = 0;
    run(st, Exec::serial, [&](const SimState& s) {
        ++calls;
        CHECK(s.t == 0.0);
    });
    CHECK(calls == 1);
    CHECK(st.step_index == 0);
    for (std::size_t k = 0; k < st.grid.nodes(); ++k) {
        CHECK(st.grid.u1[k] == 0.0);
        CHECK(st.grid.theta[k] == c.theta0);
        CHECK(st.grid.rho[k] == c.rho0);
    }
}

TEST_CASE("engine: snapshot schedule lands on the configured steps") {
    SimConfig c = tiny_run_config();
    c.snapshot_times = {0.0, 0.2, 0.4};
    SimState st = initialize(c);
    std::vector<long> steps;
    std::vector<double> times;
    run(st, Exec::serial, [&](const SimState& s) {
        steps.push_back(s.step_index);
        times.push_back(s.t);
    });
    REQUIRE(steps.size() == 3);
    CHECK(steps[0] == 0);
    CHECK(steps[1] == 2);
    CHECK(steps[2] == 4);
    CHECK(times[1] == doctest::Approx(0.2));
    CHECK(times[2] == doctest::Approx(0.4));
}

TEST_CASE("engine: with no forcing every snapshot is byte identical") {
    const fs::path dir = scratch_dir("null");
    SimConfig c = tiny_run_config();
    c.heating_on = false;
    c.theta0 = 0.0;
    SimState st = initialize(c);
    std::vector<WrittenFile> files;
    run(st, Exec::parallel,
        [&](const SimState& s) { files.push_back(write_snapshot(s.grid, s.t, dir.string())); });
    REQUIRE(files.size() == 2);
    CHECK(files[0].checksum == files[1].checksum);
    CHECK(slurp(files[0].path) == slurp(files[1].path));
    for (std::size_t k = 0; k < st.grid.nodes(); ++k) {
        CHECK(st.grid.u1[k] == 0.0);
        CHECK(st.grid.u2[k] == 0.0);
        CHECK(st.grid.theta[k] == 0.0);
        CHECK(st.grid.rho[k] == c.rho0);
    }
}

TEST_CASE("engine: execution policy does not change the trajectory") {
    SimConfig c = tiny_run_config();
    SimState sa = initialize(c);
    SimState sb = initialize(c);
    run(sa, Exec::serial, nullptr);
    run(sb, Exec::parallel, nullptr);
    bool same = sa.grid.u1 == sb.grid.u1 && sa.grid.u2 == sb.grid.u2 &&
                sa.grid.theta == sb.grid.theta && sa.grid.rho == sb.grid.rho;
    CHECK(same);
    REQUIRE(sa.ens.x.size() == sb.ens.x.size());
    bool psame = true;
    for (std::size_t i = 0; i < sa.ens.x.size(); ++i)
        psame = psame && sa.ens.x[i].pos.x == sb.ens.x[i].pos.x &&
                sa.ens.x[i].force_accum.x == sb.ens.x[i].force_accum.x;
    CHECK(psame);
}

TEST_CASE("engine: averaging over more copies shrinks the spread") {
    SimConfig base;
    base.L = 2.0 * kPi;
    base.s = 0.5 * kPi;
    base.s_b = 0.05 * kPi;
    base.eps_cutoff = base.s;
    base.dt = 0.05;
    base.T = 0.2;
    base.snapshot_times = {0.0, 0.2};

    auto probe = [&](int copies, std::uint64_t seed) {
        SimConfig c = base;
        c.n_copies = copies;
        c.seed = seed;
        SimState st = initialize(c);
        run(st, Exec::parallel, nullptr);
        return st.grid.theta[st.grid.idx(4, 11)];
    };
    auto variance = [&](int copies) {
        const int reps = 12;
        std::vector<double> v(reps);
        double mean = 0.0;
        for (int r = 0; r < reps; ++r) {
            v[r] = probe(copies, 1000 + 7 * r);
            mean += v[r];
        }
        mean /= reps;
        double acc = 0.0;
        for (double x : v) acc += (x - mean) * (x - mean);
        return acc / (reps - 1);
    };
    const double v4 = variance(4);
    const double v64 = variance(64);
    CHECK(v4 > 0.0);
    CHECK(v64 > 0.0);
    const double ratio = v4 / v64;
    // Expected 16; wide band covers the chi-square spread of 12 replicates.
    CHECK(ratio > 2.5);
    CHECK(ratio < 100.0);
}

TEST_CASE("engine: cost model fields are populated") {
    SimConfig c = tiny_run_config();
    const CostEstimate est = dry_run(c);
    CHECK(est.steps == static_cast<std::uint64_t>(c.steps()));
    CHECK(est.particles ==
          static_cast<std::uint64_t>(c.nx_cells()) * c.ny_cells() * c.n_copies * 3);
    CHECK(est.targets > 0);
    CHECK(est.kernel_evals > 0.0);
    CHECK(est.kernel_rate > 0.0);
    CHECK(est.seconds > 0.0);
}

TEST_CASE("engine: failures carry the step index") {
    SimConfig c = tiny_run_config();
    SimState st = initialize(c);
    for (auto& r : st.grid.rho) r = -1.0;
    try {
        step(st, Exec::serial);
        FAIL_CHECK("expected the step to fail");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("step 1") != std::string::npos);
    }
}
