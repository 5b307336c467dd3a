#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "obflow/config.hpp"
#include "obflow/cutoff.hpp"
#include "obflow/kernels.hpp"
#include "obflow/oracle.hpp"
#include "obflow/rng.hpp"
#include "obflow/sources.hpp"
#include "obflow/vec.hpp"

using namespace obflow;

TEST_CASE("matrix algebra basics") {
    const Mat2 m{2.0, 1.0, -1.0, 3.0};
    CHECK(det(m) == doctest::Approx(7.0));
    CHECK(trace(m) == doctest::Approx(5.0));
    const Mat2 t = transpose(m);
    CHECK(t.b == -1.0);
    CHECK(t.c == 1.0);
    const Mat2 inv = inverse(m);
    const Mat2 id = m * inv;
    CHECK(id.a == doctest::Approx(1.0));
    CHECK(id.b == doctest::Approx(0.0));
    CHECK(id.c == doctest::Approx(0.0));
    CHECK(id.d == doctest::Approx(1.0));
    CHECK_THROWS_AS((void)inverse(Mat2{1.0, 2.0, 2.0, 4.0}), std::domain_error);

    const Vec2 v = m * Vec2{1.0, 2.0};
    CHECK(v.x == doctest::Approx(4.0));
    CHECK(v.y == doctest::Approx(5.0));
}

TEST_CASE("free-space Green function values") {
    CHECK(green_free(Vec2{0.0, 2.0}, Vec2{0.0, 0.0}) ==
          doctest::Approx(0.1103178000763258).epsilon(1e-12));
    CHECK(green_free(Vec2{1.0 / 3.0, 0.0}, Vec2{0.0, 0.0}) ==
          doctest::Approx(-0.1748495762830299).epsilon(1e-12));
    CHECK(green_free(Vec3{0.0, 0.0, 1.0}, Vec3{0.0, 0.0, 0.0}) ==
          doctest::Approx(-0.07957747154594767).epsilon(1e-12));
    CHECK_THROWS_AS((void)green_free(Vec2{1.0, 1.0}, Vec2{1.0, 1.0}), std::domain_error);
}

TEST_CASE("half-space Green function and kernel on the wall") {
    const Vec2 y{1.3, 2.1};
    for (double x1 : {-2.0, 0.4, 5.0}) {
        CHECK(green_half(y, Vec2{x1, 0.0}) == 0.0);
        const Vec2 lam = biot_savart(y, Vec2{x1, 0.0});
        CHECK(lam.x == 0.0);
        CHECK(lam.y == 0.0);
    }
    const Vec2 a{0.7, 1.9}, b{-1.2, 0.6};
    CHECK(green_half(a, b) == doctest::Approx(green_half(b, a)).epsilon(1e-14));
}

TEST_CASE("vertically aligned kernel value") {
    const Vec2 lam = biot_savart(Vec2{0.0, 1.0}, Vec2{0.0, 2.0});
    CHECK(lam.x == 0.0);
    CHECK(lam.y == doctest::Approx(-0.2122065907891938).epsilon(1e-12));
}

TEST_CASE("kernel is the gradient of the Green function") {
    const Vec2 pairs[4][2] = {{{0.8, 1.4}, {-0.3, 0.9}},
                              {{-1.1, 0.5}, {1.6, 2.2}},
                              {{2.0, 3.0}, {2.5, 0.4}},
                              {{0.1, 0.7}, {-0.6, 1.9}}};
    const double h = 1e-6;
    for (const auto& pr : pairs) {
        const Vec2 y = pr[0], x = pr[1];
        const Vec2 lam = biot_savart(y, x);
        const double g1 = (green_half(Vec2{y.x + h, y.y}, x) - green_half(Vec2{y.x - h, y.y}, x)) /
                          (2.0 * h);
        const double g2 = (green_half(Vec2{y.x, y.y + h}, x) - green_half(Vec2{y.x, y.y - h}, x)) /
                          (2.0 * h);
        CHECK(std::abs(lam.x - g1) < 1e-8);
        CHECK(std::abs(lam.y - g2) < 1e-8);
    }
}

TEST_CASE("mollified kernel equals the shared-factor rescaling") {
    const Vec2 y{0.3, 1.1}, x{-0.2, 0.7};
    const double eps_b = 0.41;  // equals |y-x|^2, so the factor is exactly 1 - 1/e
    const double p2 = norm2(y - x);
    const double f = -std::expm1(-p2 / eps_b);
    const Vec2 exact = biot_savart(y, x);
    const Vec2 moll = biot_savart_mollified(y, x, eps_b);
    CHECK(moll.x == doctest::Approx(f * exact.x).epsilon(1e-13));
    CHECK(moll.y == doctest::Approx(f * exact.y).epsilon(1e-13));
    CHECK(f == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-13));

    const Vec2 at_pole = biot_savart_mollified(x, x, eps_b);
    CHECK(at_pole.x == 0.0);
    CHECK(at_pole.y == 0.0);
}

TEST_CASE("wall Poisson kernel") {
    CHECK(poisson_half(Vec2{0.0, 1.0}, 0.0) == doctest::Approx(0.3183098861837907).epsilon(1e-13));
    CHECK(poisson_half(Vec3{0.0, 0.0, 1.0}, 0.0, 0.0) ==
          doctest::Approx(0.15915494309189535).epsilon(1e-13));
    CHECK_THROWS_AS((void)poisson_half(Vec2{0.0, -0.1}, 0.0), std::domain_error);
}

TEST_CASE("wedge identity") {
    const Vec2 w = wedge2({2.0, 3.0}, 5.0);
    CHECK(w.x == 15.0);
    CHECK(w.y == -10.0);
}

TEST_CASE("dimension dispatchers") {
    const double y2[2] = {0.0, 2.0}, x2[2] = {0.0, 1.0};
    CHECK(green_free(2, y2, x2) == doctest::Approx(green_free(Vec2{0.0, 2.0}, Vec2{0.0, 1.0})));
    const double y3[3] = {0.0, 0.0, 2.0}, x3[3] = {0.0, 0.0, 1.0};
    CHECK(green_half(3, y3, x3) ==
          doctest::Approx(green_half(Vec3{0.0, 0.0, 2.0}, Vec3{0.0, 0.0, 1.0})));
    CHECK_THROWS_AS((void)green_free(4, y3, x3), std::invalid_argument);
}

TEST_CASE("cut-off profile plateau, midpoint and curvature") {
    CHECK(psi(0.0) == 1.0);
    CHECK(psi(0.2) == 1.0);
    CHECK(psi(0.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(psi(0.8) == 0.0);
    CHECK(psi(5.0) == 0.0);
    CHECK(psi(1.0 / 3.0 + 1e-9) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(psi(2.0 / 3.0 - 1e-9) == doctest::Approx(0.0).scale(1.0).epsilon(1e-7));
    CHECK(std::abs(psi_prime(1.0 / 3.0 + 1e-9)) < 1e-6);
    CHECK(std::abs(psi_prime(2.0 / 3.0 - 1e-9)) < 1e-6);
    CHECK(psi_double_prime(5.0 / 12.0) == doctest::Approx(-27.0).epsilon(1e-12));
    // The curvature jumps at the band edges.
    CHECK(psi_double_prime(1.0 / 3.0 + 1e-12) == doctest::Approx(-54.0).epsilon(1e-9));
    CHECK(psi_double_prime(1.0 / 3.0 - 1e-12) == 0.0);
    CHECK(psi_double_prime(2.0 / 3.0 - 1e-12) == doctest::Approx(54.0).epsilon(1e-9));
    CHECK(psi_double_prime(2.0 / 3.0 + 1e-12) == 0.0);
}

TEST_CASE("cut-off integrals") {
    // int psi'(r) dr over the band telescopes to -1.
    const int n = 4000;
    for (double eps : {0.1, 0.37}) {
        const double lo = eps / 3.0, hi = 2.0 * eps / 3.0, h = (hi - lo) / n;
        double ip = 0.0, ipp = 0.0;
        for (int k = 0; k < n; ++k) {
            const double x2 = lo + (k + 0.5) * h;
            ip += psi_prime(x2 / eps) / eps * h;
            ipp += psi_double_prime(x2 / eps) / (eps * eps) * psi(x2 / eps) * h;
        }
        CHECK(ip == doctest::Approx(-1.0).epsilon(1e-7));
        // eps * int eps^-2 psi''(x2/eps) psi(x2/eps) dx2 is scale free.
        CHECK(eps * ipp == doctest::Approx(-3.6).epsilon(1e-6));
    }
}

TEST_CASE("cut-off error term examples") {
    CHECK(cutoff_error_term(2.0, 0.1, 0.045, 3.0) == doctest::Approx(-9720.0).epsilon(1e-9));
    const Vec2 v = cutoff_error_term(1.0, 0.15, 0.0625, Vec2{1.0, 0.0});
    CHECK(v.x == doctest::Approx(-1200.0).epsilon(1e-9));
    CHECK(v.y == 0.0);
    // Outside the band the correction vanishes identically.
    CHECK(cutoff_error_term(1.0, 0.15, 0.01, 5.0) == 0.0);
    CHECK(cutoff_error_term(1.0, 0.15, 0.12, 5.0) == 0.0);
}

TEST_CASE("heating program values") {
    SimConfig c;
    CHECK(theta_b(c, 0.0, 40.0) == doctest::Approx(10.0).epsilon(1e-13));
    CHECK(theta_b(c, kTwoPi, 80.0) == doctest::Approx(12.130613194252668).epsilon(1e-12));
    CHECK(theta_b_dx1(c, kTwoPi, 40.0) == doctest::Approx(-0.9653235263005391).epsilon(1e-12));
    CHECK(heating_g(c, {0.0, 0.0}, 10.0) == doctest::Approx(0.51).epsilon(1e-13));
    const Vec2 gg = heating_grad_g(c, {c.L, 0.0}, 0.0);
    CHECK(gg.x == doctest::Approx(-c.theta0 / c.L * std::exp(-0.5)).epsilon(1e-12));
    CHECK(gg.y == 0.0);
    CHECK(buoyancy_curl(0.005, 2.0, 0.5) == doctest::Approx(0.0075).epsilon(1e-13));
}

TEST_CASE("heating program switches off completely") {
    SimConfig c;
    c.heating_on = false;
    CHECK(theta_b(c, 0.3, 50.0) == 0.0);
    CHECK(theta_b_dx1(c, 0.3, 50.0) == 0.0);
    CHECK(heating_g(c, {0.3, 0.7}, 50.0) == 0.0);
    const Vec2 g = heating_grad_g(c, {0.3, 0.7}, 50.0);
    CHECK(g.x == 0.0);
    CHECK(g.y == 0.0);
}

TEST_CASE("config defaults and validation") {
    SimConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.nx_cells() == 80);
    CHECK(c.ny_cells() == 40);
    CHECK(c.wall_subdivisions() == 10);
    CHECK(c.steps() == 1200);

    auto expect_fail = [](SimConfig bad, const std::string& needle) {
        try {
            bad.validate();
            FAIL_CHECK("expected a validation error mentioning '" << needle << "'");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    SimConfig bad = c;
    bad.mu = -1.0;
    expect_fail(bad, "mu");
    bad = c;
    bad.s_b = c.s;
    expect_fail(bad, "s_b");
    bad = c;
    bad.eps_cutoff = c.L;
    expect_fail(bad, "eps_cutoff");
    bad = c;
    bad.snapshot_times = {0.05};
    expect_fail(bad, "snapshot");
    bad = c;
    bad.T = -0.1;
    expect_fail(bad, "T");

    SimConfig zero = c;
    zero.T = 0.0;
    zero.snapshot_times = {0.0};
    CHECK_NOTHROW(zero.validate());
}

TEST_CASE("counter RNG known answers") {
    const auto r0 = Philox4x32::block({0u, 0u, 0u, 0u}, 0u, 0u);
    CHECK(r0[0] == 0x6627e8d5u);
    CHECK(r0[1] == 0xe169c58du);
    CHECK(r0[2] == 0xbc57ac4cu);
    CHECK(r0[3] == 0x9b00dbd8u);

    const std::uint32_t ff = 0xffffffffu;
    const auto r1 = Philox4x32::block({ff, ff, ff, ff}, ff, ff);
    CHECK(r1[0] == 0x408f276du);
    CHECK(r1[1] == 0x41c83b0eu);
    CHECK(r1[2] == 0xa20bc7c6u);
    CHECK(r1[3] == 0x6d5451fdu);

    const auto r2 = Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                      0xa4093822u, 0x299f31d0u);
    CHECK(r2[0] == 0xd16cfe09u);
    CHECK(r2[1] == 0x94fdccebu);
    CHECK(r2[2] == 0x5001e420u);
    CHECK(r2[3] == 0x24126ea1u);
}

TEST_CASE("uniform mapping stays inside the open interval") {
    CHECK(uniform01(0u) > 0.0);
    CHECK(uniform01(0u) < 1e-15);
    CHECK(uniform01(~0ull) < 1.0);
    CHECK(uniform01(~0ull) > 1.0 - 1e-15);
}

TEST_CASE("draws are reproducible and decorrelated across counters") {
    const Vec2 a = normal_pair(42, 7, 3, 1);
    const Vec2 b = normal_pair(42, 7, 3, 1);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(normal_pair(42, 8, 3, 1).x != a.x);
    CHECK(normal_pair(42, 7, 4, 1).x != a.x);
    CHECK(normal_pair(42, 7, 3, 2).x != a.x);
    CHECK(normal_pair(43, 7, 3, 1).x != a.x);
    // The uniform lane at the same counter is a distinct block.
    CHECK(uniform_at(42, 7, 3, 1) != uniform01(static_cast<std::uint64_t>(0)));

    RngStream st(42, 3, 1);
    CHECK(st.next_uniform() == uniform_at(42, 0, 3, 1));
    const Vec2 n1 = st.next_normal_pair();
    const Vec2 n2 = normal_pair(42, 1, 3, 1);
    CHECK(n1.x == n2.x);
}

TEST_CASE("normal moments are sane") {
    double sum = 0.0, sum2 = 0.0;
    const int n = 4096;
    for (int i = 0; i < n; ++i) {
        const Vec2 z = normal_pair(987, static_cast<std::uint32_t>(i), 0, 0);
        sum += z.x + z.y;
        sum2 += z.x * z.x + z.y * z.y;
    }
    const double mean = sum / (2 * n);
    const double var = sum2 / (2 * n) - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(var == doctest::Approx(1.0).epsilon(0.08));
}

TEST_CASE("matrix exponential") {
    const Mat2 z = oracle::expm2(Mat2::zero());
    CHECK(z.a == doctest::Approx(1.0));
    CHECK(z.b == doctest::Approx(0.0));
    CHECK(z.d == doctest::Approx(1.0));

    const Mat2 d = oracle::expm2(Mat2{0.5, 0.0, 0.0, -0.3});
    CHECK(d.a == doctest::Approx(std::exp(0.5)).epsilon(1e-12));
    CHECK(d.d == doctest::Approx(std::exp(-0.3)).epsilon(1e-12));
    CHECK(d.b == 0.0);

    const double th = 0.9;
    const Mat2 r = oracle::expm2(Mat2{0.0, -th, th, 0.0});
    CHECK(r.a == doctest::Approx(std::cos(th)).epsilon(1e-12));
    CHECK(r.c == doctest::Approx(std::sin(th)).epsilon(1e-12));

    // Larger norms go through the squaring path.
    const Mat2 big = oracle::expm2(Mat2{3.0, 0.0, 0.0, 3.0});
    CHECK(big.a == doctest::Approx(std::exp(3.0)).epsilon(1e-12));
}
