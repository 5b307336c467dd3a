#include "obflow/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>

#include "obflow/kernels.hpp"
#include "obflow/rng.hpp"

namespace obflow::oracle {

namespace {

double inf_norm(const Mat2& m) {
    return std::max(std::abs(m.a) + std::abs(m.b), std::abs(m.c) + std::abs(m.d));
}

bool is_zero(const Mat2& m) {
    return m.a == 0.0 && m.b == 0.0 && m.c == 0.0 && m.d == 0.0;
}

}  // namespace

Mat2 expm2(const Mat2& M) {
    double nrm = inf_norm(M);
    if (!std::isfinite(nrm)) {
        const double qn = std::numeric_limits<double>::quiet_NaN();
        return {qn, qn, qn, qn};
    }
    int squarings = 0;
    while (nrm > 0.5) {
        nrm *= 0.5;
        ++squarings;
    }
    const Mat2 A = std::ldexp(1.0, -squarings) * M;
    Mat2 sum = Mat2::identity();
    Mat2 term = Mat2::identity();
    for (int k = 1; k <= 24; ++k) {
        term = (1.0 / k) * (term * A);
        sum = sum + term;
        if (inf_norm(term) < 1e-19) break;
    }
    for (int i = 0; i < squarings; ++i) sum = sum * sum;
    return sum;
}

Mat2 multiplier_step(const Mat2& U, const Mat2& M, double dt) {
    return expm2(dt * M) * U;
}

double FdSolution::interp(int cidx, const Vec2& x) const {
    const double fx = (x.x - x1lo) / h;
    const double fy = (x.y - x2lo) / h;
    int i = static_cast<int>(std::floor(fx));
    int j = static_cast<int>(std::floor(fy));
    i = std::clamp(i, 0, n1 - 1);
    j = std::clamp(j, 0, n2 - 1);
    const double tx = std::clamp(fx - i, 0.0, 1.0);
    const double ty = std::clamp(fy - j, 0.0, 1.0);
    const double v00 = at(cidx, i, j), v10 = at(cidx, i + 1, j);
    const double v01 = at(cidx, i, j + 1), v11 = at(cidx, i + 1, j + 1);
    return (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11);
}

double FdSolution::functional(int cidx, const GaussianProbe& probe) const {
    double acc = 0.0;
    for (int j = 0; j <= n2; ++j) {
        const double y = x2lo + j * h;
        if (std::abs(y - probe.center.y) > 6.0 * probe.sigma) continue;
        for (int i = 0; i <= n1; ++i) {
            const double w = probe.value({x1lo + i * h, y});
            if (w != 0.0) acc += w * comp[cidx][static_cast<std::size_t>(j) * (n1 + 1) + i];
        }
    }
    return acc * h * h;
}

FdSolution fd_solve(const OracleProblem& p, double h, double dt) {
    if (!(h > 0.0) || !(dt > 0.0))
        throw std::invalid_argument("fd_solve: h and dt must be positive");
    if (dt > h * h / (4.0 * p.a) * (1.0 + 1e-12))
        throw std::invalid_argument("fd_solve: explicit step unstable, need dt <= h^2/(4a)");
    if (p.ncomp < 1 || p.ncomp > 2)
        throw std::invalid_argument("fd_solve: ncomp must be 1 or 2");

    FdSolution s;
    s.ncomp = p.ncomp;
    s.h = h;
    s.x1lo = -p.box_x1;
    s.x2lo = p.box_x2_lo;
    s.n1 = static_cast<int>(std::lround(2.0 * p.box_x1 / h));
    s.n2 = static_cast<int>(std::lround((p.box_x2_hi - p.box_x2_lo) / h));
    if (s.n1 < 3 || s.n2 < 3) throw std::invalid_argument("fd_solve: box too small for h");

    const long m = std::max<long>(1, std::lround(std::ceil(p.T / dt - 1e-9)));
    const double dte = p.T / static_cast<double>(m);

    const int W = s.n1 + 1;
    const std::size_t nn = static_cast<std::size_t>(W) * (s.n2 + 1);
    const bool two = (p.ncomp == 2);

    std::vector<double> b1v(nn), b2v(nn), m00(nn), m01, m10, m11, f0(nn), f1;
    if (two) {
        m01.resize(nn);
        m10.resize(nn);
        m11.resize(nn);
        f1.resize(nn);
    }
    std::vector<double> cur0(nn, 0.0), nxt0(nn, 0.0), cur1, nxt1;
    if (two) {
        cur1.assign(nn, 0.0);
        nxt1.assign(nn, 0.0);
    }

    for (int j = 0; j <= s.n2; ++j) {
        for (int i = 0; i <= s.n1; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * W + i;
            const Vec2 x{s.x1lo + i * h, s.x2lo + j * h};
            const Vec2 b = p.drift(x);
            b1v[k] = b.x;
            b2v[k] = b.y;
            const Mat2 M = p.multiplier_matrix(x);
            m00[k] = M.a;
            if (two) {
                m01[k] = M.b;
                m10[k] = M.c;
                m11[k] = M.d;
            }
            const Vec2 f = p.source(x);
            f0[k] = f.x;
            if (two) f1[k] = f.y;
            if (i > 0 && j > 0 && i < s.n1 && j < s.n2) {
                const Vec2 v0 = p.initial(x);
                cur0[k] = v0.x;
                if (two) cur1[k] = v0.y;
            }
        }
    }

    const double ih2 = 1.0 / (h * h);
    const double i2h = 0.5 / h;
    for (long step = 0; step < m; ++step) {
        for (int j = 1; j < s.n2; ++j) {
            const std::size_t row = static_cast<std::size_t>(j) * W;
            for (int i = 1; i < s.n1; ++i) {
                const std::size_t k = row + i;
                const double c0 = cur0[k];
                const double lap0 =
                    (cur0[k - 1] + cur0[k + 1] + cur0[k - W] + cur0[k + W] - 4.0 * c0) * ih2;
                const double adv0 = b1v[k] * (cur0[k + 1] - cur0[k - 1]) * i2h +
                                    b2v[k] * (cur0[k + W] - cur0[k - W]) * i2h;
                if (two) {
                    const double c1 = cur1[k];
                    const double lap1 =
                        (cur1[k - 1] + cur1[k + 1] + cur1[k - W] + cur1[k + W] - 4.0 * c1) * ih2;
                    const double adv1 = b1v[k] * (cur1[k + 1] - cur1[k - 1]) * i2h +
                                        b2v[k] * (cur1[k + W] - cur1[k - W]) * i2h;
                    nxt0[k] = c0 + dte * (p.a * lap0 + adv0 + m00[k] * c0 + m01[k] * c1 + f0[k]);
                    nxt1[k] = c1 + dte * (p.a * lap1 + adv1 + m10[k] * c0 + m11[k] * c1 + f1[k]);
                } else {
                    nxt0[k] = c0 + dte * (p.a * lap0 + adv0 + m00[k] * c0 + f0[k]);
                }
            }
        }
        cur0.swap(nxt0);
        if (two) cur1.swap(nxt1);
    }
    s.comp[0] = std::move(cur0);
    if (two) s.comp[1] = std::move(cur1);
    return s;
}

std::vector<FkEstimate> feynman_kac_estimate(const OracleProblem& p,
                                             const std::vector<Vec2>& targets,
                                             const FkOptions& opt) {
    if (p.ncomp < 1 || p.ncomp > 2)
        throw std::invalid_argument("feynman_kac_estimate: ncomp must be 1 or 2");
    if (!(opt.dt > 0.0) || !(opt.s_eta > 0.0) || opt.copies < 2)
        throw std::invalid_argument("feynman_kac_estimate: bad sampling options");
    if (targets.empty())
        throw std::invalid_argument("feynman_kac_estimate: no targets");

    const int nx = static_cast<int>(std::lround(2.0 * opt.eta_x1 / opt.s_eta));
    const int ny = static_cast<int>(std::lround((opt.eta_y_hi - opt.eta_y_lo) / opt.s_eta));
    const int n_sites = nx * ny;
    const long n_steps = std::max<long>(1, std::lround(p.T / opt.dt));
    const double dt = p.T / static_cast<double>(n_steps);
    const double sq = std::sqrt(2.0 * p.a * dt);
    const double cell = opt.s_eta * opt.s_eta;
    const int nt = static_cast<int>(targets.size());

    std::vector<GaussianProbe> probes(nt);
    for (int t = 0; t < nt; ++t) probes[t] = {targets[t], opt.probe_sigma};

    std::vector<Vec2> totals(static_cast<std::size_t>(opt.copies) * nt);
    std::atomic<int> fail{0};

#pragma omp parallel for schedule(static)
    for (int copy = 0; copy < opt.copies; ++copy) {
        const auto salt = static_cast<std::uint32_t>(copy);
        std::vector<Vec2> incr;
        if (opt.shared_increments) {
            incr.resize(static_cast<std::size_t>(n_steps));
            for (long k = 0; k < n_steps; ++k)
                incr[static_cast<std::size_t>(k)] =
                    normal_pair(opt.seed, static_cast<std::uint32_t>(k), 0u, salt);
        }
        std::vector<Vec2> acc(static_cast<std::size_t>(nt));
        for (int site = 0; site < n_sites; ++site) {
            const Vec2 eta{-opt.eta_x1 + (site % nx + 0.5) * opt.s_eta,
                           opt.eta_y_lo + (site / nx + 0.5) * opt.s_eta};
            Vec2 pos = eta;
            Mat2 Uinv = Mat2::identity();
            Vec2 G{0.0, 0.0};
            double divb_int = 0.0;
            bool alive = true;
            const auto stream =
                opt.shared_increments ? 0u : static_cast<std::uint32_t>(site);
            for (long k = 0; k < n_steps; ++k) {
                Vec2 drift{0.0, 0.0};
                if (!(p.half_plane && pos.y <= 0.0)) {
                    const Vec2 f = p.source(pos);
                    if (f.x != 0.0 || f.y != 0.0) G += (Uinv * f) * dt;
                    divb_int += p.div_b(pos) * dt;
                    const Mat2 M = p.multiplier_matrix(pos);
                    if (!is_zero(M)) Uinv = Uinv * expm2(-dt * M);
                    drift = p.drift(pos);
                }
                const Vec2 n = opt.shared_increments
                                   ? incr[static_cast<std::size_t>(k)]
                                   : normal_pair(opt.seed, static_cast<std::uint32_t>(k),
                                                 stream, salt);
                const Vec2 nxt{pos.x - drift.x * dt + sq * n.x,
                               pos.y - drift.y * dt + sq * n.y};
                if (p.half_plane) {
                    bool touch = (pos.y <= 0.0 || nxt.y <= 0.0);
                    if (!touch && opt.bridge_killing) {
                        const double pr = std::exp(-pos.y * nxt.y / (p.a * dt));
                        if (pr > 1e-14 &&
                            uniform_at(opt.seed, static_cast<std::uint32_t>(k), stream,
                                       salt) < pr)
                            touch = true;
                    }
                    if (touch) {
                        alive = false;
                        G = {0.0, 0.0};
                    }
                }
                pos = nxt;
            }
            if (!std::isfinite(Uinv.a) || !std::isfinite(Uinv.b) ||
                !std::isfinite(Uinv.c) || !std::isfinite(Uinv.d) ||
                std::abs(det(Uinv)) < 1e-12) {
                fail.store(1);
                break;
            }
            Vec2 base = G;
            if (alive) base += p.initial(eta);
            if (base.x == 0.0 && base.y == 0.0) continue;
            const Vec2 v = inverse(Uinv) * base;
            const double w = std::exp(-divb_int) * cell;
            for (int t = 0; t < nt; ++t) {
                const double pr = probes[t].value(pos);
                if (pr != 0.0) acc[static_cast<std::size_t>(t)] += v * (w * pr);
            }
        }
        for (int t = 0; t < nt; ++t)
            totals[static_cast<std::size_t>(copy) * nt + t] = acc[static_cast<std::size_t>(t)];
    }
    if (fail.load()) throw std::runtime_error("feynman_kac_estimate: path multiplier diverged");

    std::vector<FkEstimate> out(static_cast<std::size_t>(nt));
    for (int t = 0; t < nt; ++t) {
        Vec2 mean{0.0, 0.0};
        for (int c = 0; c < opt.copies; ++c)
            mean += totals[static_cast<std::size_t>(c) * nt + t];
        mean *= 1.0 / opt.copies;
        Vec2 var{0.0, 0.0};
        for (int c = 0; c < opt.copies; ++c) {
            const Vec2 d = totals[static_cast<std::size_t>(c) * nt + t] - mean;
            var += Vec2{d.x * d.x, d.y * d.y};
        }
        var *= 1.0 / (opt.copies - 1);
        FkEstimate& e = out[static_cast<std::size_t>(t)];
        e.value[0] = mean.x;
        e.value[1] = mean.y;
        e.se[0] = std::sqrt(var.x / opt.copies);
        e.se[1] = std::sqrt(var.y / opt.copies);
        e.paths = static_cast<std::int64_t>(n_sites) * opt.copies;
    }
    return out;
}

std::vector<SuiteRow> run_equivalence_suite(std::uint64_t seed, int n_problems, int n_targets) {
    std::mt19937_64 gen(seed);
    auto u01 = [&gen] { return (static_cast<double>(gen() >> 11) + 0.5) * 0x1p-53; };
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u01(); };
    auto mk_bump = [&](double amp_lo, double amp_hi) {
        Bump b;
        b.radius = uni(0.6, 1.2);
        b.center = {uni(-2.0, 2.0), uni(b.radius + 0.3, 2.2)};
        b.amp = uni(amp_lo, amp_hi);
        return b;
    };

    std::vector<SuiteRow> rows;
    for (int k = 0; k < n_problems; ++k) {
        OracleProblem p;
        p.ncomp = (k % 2 == 1) ? 2 : 1;
        p.half_plane = true;
        p.a = uni(0.3, 0.7);
        p.T = 0.4;
        p.box_x1 = 4.8;
        p.box_x2_lo = 0.0;
        p.box_x2_hi = 6.0;
        // Targets and the data terms share an anchor: forward paths can only
        // resolve probe functionals whose mass lies within a few diffusion
        // lengths of where the initial and source mass actually sits. The
        // multiplicative coefficients are free to roam; they act along paths.
        const Vec2 anchor{uni(-1.5, 1.5), uni(1.0, 1.6)};
        std::vector<Vec2> targets;
        for (int t = 0; t < n_targets; ++t)
            targets.push_back({anchor.x + uni(-0.35, 0.35), anchor.y + uni(-0.35, 0.35)});
        auto mk_near = [&](double amp_lo, double amp_hi) {
            Bump b;
            b.radius = uni(0.6, 1.0);
            b.center = {anchor.x + uni(-0.5, 0.5), anchor.y + uni(-0.5, 0.5)};
            if (b.center.y < b.radius + 0.3) b.center.y = b.radius + 0.3;
            b.amp = uni(amp_lo, amp_hi);
            return b;
        };

        for (int i = 0; i < 2; ++i) p.b1.push_back(mk_bump(-0.5, 0.5));
        for (int i = 0; i < 2; ++i) p.b2.push_back(mk_bump(-0.5, 0.5));
        p.c.push_back(mk_bump(-0.5, 0.5));
        for (int r = 0; r < p.ncomp; ++r)
            for (int cc = 0; cc < p.ncomp; ++cc) p.q[r][cc].push_back(mk_bump(-0.5, 0.5));
        for (int r = 0; r < p.ncomp; ++r) p.f[r].push_back(mk_near(-1.0, 1.0));
        for (int r = 0; r < p.ncomp; ++r) p.psi0[r].push_back(mk_near(0.5, 1.5));

        const double h_coarse = 0.05, h_fine = 0.025;
        const FdSolution coarse = fd_solve(p, h_coarse, h_coarse * h_coarse / (8.0 * p.a));
        const FdSolution fine = fd_solve(p, h_fine, h_fine * h_fine / (8.0 * p.a));

        FkOptions opt;
        opt.eta_x1 = 4.25;
        opt.eta_y_lo = 0.0;
        opt.eta_y_hi = 4.75;
        opt.s_eta = 0.25;
        opt.copies = 16;
        opt.dt = 1.0e-3;
        opt.probe_sigma = 0.3;
        opt.seed = seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(k + 1));
        const auto est = feynman_kac_estimate(p, targets, opt);

        for (int t = 0; t < n_targets; ++t) {
            for (int c = 0; c < p.ncomp; ++c) {
                const GaussianProbe probe{targets[t], opt.probe_sigma};
                SuiteRow row;
                row.problem = k;
                row.target = t;
                row.comp = c;
                row.xi = targets[t];
                row.mc = est[static_cast<std::size_t>(t)].value[c];
                row.mc_se = est[static_cast<std::size_t>(t)].se[c];
                row.fd = fine.functional(c, probe);
                row.fd_sigma = std::abs(coarse.functional(c, probe) - row.fd);
                row.combined =
                    3.0 * std::sqrt(row.mc_se * row.mc_se + row.fd_sigma * row.fd_sigma);
                row.pass = std::abs(row.mc - row.fd) <= row.combined;
                rows.push_back(row);
            }
        }
    }
    return rows;
}

std::string suite_csv(const std::vector<SuiteRow>& rows) {
    std::string out = "problem,target,comp,x1,x2,mc,mc_se,fd,fd_sigma,allowance,verdict\n";
    char line[256];
    for (const SuiteRow& r : rows) {
        std::snprintf(line, sizeof line, "%d,%d,%d,%.6g,%.6g,%.10g,%.3g,%.10g,%.3g,%.3g,%s\n",
                      r.problem, r.target, r.comp, r.xi.x, r.xi.y, r.mc, r.mc_se, r.fd,
                      r.fd_sigma, r.combined, r.pass ? "PASS" : "FAIL");
        out += line;
    }
    return out;
}

ConstQResult constant_q_check(double q, double T, std::uint64_t seed) {
    OracleProblem p;
    p.ncomp = 1;
    p.half_plane = false;
    p.a = 0.25;
    p.T = T;
    p.q_const[0][0] = q;
    p.psi0_const[0] = 1.0;

    FkOptions opt;
    opt.eta_x1 = 10.0;
    opt.eta_y_lo = -10.0;
    opt.eta_y_hi = 10.0;
    opt.s_eta = 0.25;
    opt.copies = 16;
    opt.dt = 1.0e-3;
    opt.probe_sigma = 2.0;
    opt.seed = seed;
    opt.shared_increments = true;
    opt.bridge_killing = false;

    const auto est = feynman_kac_estimate(p, {{0.0, 0.0}}, opt);
    ConstQResult r;
    r.estimate = est[0].value[0];
    r.exact = std::exp(q * T);
    r.rel_err = std::abs(r.estimate - r.exact) / std::abs(r.exact);
    return r;
}

SurvivalResult survival_mass_check(double a, double h0, double T, double dt, int n_paths,
                                   std::uint64_t seed) {
    const long n_steps = std::max<long>(1, std::lround(T / dt));
    const double dte = T / static_cast<double>(n_steps);
    const double sq = std::sqrt(2.0 * a * dte);

    long alive_total = 0;
#pragma omp parallel for schedule(static) reduction(+ : alive_total)
    for (int path = 0; path < n_paths; ++path) {
        double y = h0;
        bool alive = true;
        const auto stream = static_cast<std::uint32_t>(path);
        for (long k = 0; k < n_steps; ++k) {
            const Vec2 n = normal_pair(seed, static_cast<std::uint32_t>(k), stream, 0u);
            const double ynxt = y + sq * n.x;
            if (ynxt <= 0.0) {
                alive = false;
                break;
            }
            const double pr = std::exp(-y * ynxt / (a * dte));
            if (pr > 1e-14 &&
                uniform_at(seed, static_cast<std::uint32_t>(k), stream, 0u) < pr) {
                alive = false;
                break;
            }
            y = ynxt;
        }
        if (alive) ++alive_total;
    }

    SurvivalResult r;
    const double frac = static_cast<double>(alive_total) / n_paths;
    r.estimate = frac;
    r.se = std::sqrt(std::max(frac * (1.0 - frac), 1e-300) / n_paths);
    r.exact = std::erf(h0 / std::sqrt(4.0 * a * T));
    return r;
}

Vec2 TestVortex::velocity_closed(const Vec2& x) const {
    Vec2 u{0.0, 0.0};
    const Vec2 d = x - center;
    const double r2 = norm2(d);
    if (r2 > 0.0) {
        const double g = circulation(std::sqrt(r2)) / (kTwoPi * r2);
        u += Vec2{-d.y, d.x} * g;
    }
    const Vec2 db = x - mirror(center);
    const double rb2 = norm2(db);
    const double gb = circulation(std::sqrt(rb2)) / (kTwoPi * rb2);
    u += Vec2{db.y, db.x} * (-gb);
    return u;
}

Vec2 TestVortex::velocity_quadrature(const Vec2& x, int cells_per_axis) const {
    const double hf = 2.0 * r0 / cells_per_axis;
    // Align the lattice so the evaluation point sits on a cell corner; the
    // four cells around the kernel pole are skipped and their leading
    // contributions cancel by symmetry.
    auto aligned_start = [&](double lo, double xe) {
        double shift = std::fmod(xe - lo, hf);
        if (shift < 0.0) shift += hf;
        return lo + shift - hf;
    };
    const double lo1 = aligned_start(center.x - r0, x.x);
    const double lo2 = aligned_start(center.y - r0, x.y);
    const int n = cells_per_axis + 2;
    Vec2 u{0.0, 0.0};
    for (int j = 0; j < n; ++j) {
        const double y2 = lo2 + (j + 0.5) * hf;
        for (int i = 0; i < n; ++i) {
            const Vec2 y{lo1 + (i + 0.5) * hf, y2};
            const double w = omega(y);
            if (w == 0.0) continue;
            if (std::abs(y.x - x.x) < hf && std::abs(y.y - x.y) < hf) continue;
            u += wedge2(biot_savart(y, x), w * hf * hf);
        }
    }
    return u;
}

VortexSample analytic_test_vortex(const Vec2& x) {
    const TestVortex v{};
    return {v.velocity_quadrature(x), v.omega(x)};
}

}  // namespace obflow::oracle
