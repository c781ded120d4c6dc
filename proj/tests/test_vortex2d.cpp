#include <doctest.h>

#include <cmath>

#include "ahm/dynamics2d.hpp"
#include "ahm/vortex2d.hpp"

using namespace ahm;

namespace {

double phi_abs_at(const VortexSolution& s, double x, double y) {
    const Grid2& g = s.grid;
    const int i = static_cast<int>(std::lround((x + g.half_width()) / g.spacing() - 0.5));
    const int j = static_cast<int>(std::lround((y + g.half_width()) / g.spacing() - 0.5));
    return std::abs(s.phi(i, j));
}

}  // namespace

TEST_CASE("single vortex") {
    const Grid2 g = build_grid(12.0, 256);
    const VortexSolution s = taubes_solve(ModuliPoint({cplx(0)}), g);
    SUBCASE("profile") {
        CHECK(phi_abs_at(s, 0.05, 0.05) < 0.05);
        double prev = 0.0;
        for (int i = g.n() / 2; i < g.n(); ++i) {
            const double a = std::abs(s.phi(i, g.n() / 2));
            CHECK(a >= prev);
            prev = a;
        }
        CHECK(prev == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(max_abs(s.phi) <= 1.0 + 1e-6);
    }
    SUBCASE("quantization") {
        const EnergyVorticity ev = energy_and_vorticity(s);
        CHECK(ev.energy / M_PI == doctest::Approx(1.0).epsilon(0.02));
        CHECK(ev.vorticity / M_PI == doctest::Approx(1.0).epsilon(0.02));
    }
    SUBCASE("residuals") {
        const BogomolnyResidual r = bogomolny_residual(s);
        CHECK(r.dbar <= 5e-3);
        CHECK(r.curv <= 5e-3);
        CHECK(coulomb_residual(s) <= 5e-2);
        CHECK(decay_rate(s) <= -0.8);
    }
    SUBCASE("grid zero") {
        const ZeroSet z = track_zeros(s.phi);
        REQUIRE(z.size() == 1);
        CHECK(std::hypot(z[0].x, z[0].y) <= g.spacing() * std::sqrt(2.0));
        CHECK(z[0].sign == 1);
    }
}

TEST_CASE("residuals converge at second order") {
    const ModuliPoint q({cplx(0.3, -0.2)});
    const VortexSolution a = taubes_solve(q, build_grid(9.6, 128));
    const VortexSolution b = taubes_solve(q, build_grid(9.6, 256));
    const BogomolnyResidual ra = bogomolny_residual(a), rb = bogomolny_residual(b);
    CHECK(ra.dbar / rb.dbar == doctest::Approx(4.0).epsilon(0.2));
    CHECK(ra.curv / rb.curv == doctest::Approx(4.0).epsilon(0.2));
    CHECK(coulomb_residual(b) < coulomb_residual(a));
}

TEST_CASE("double vortex at the origin") {
    const Grid2 g = build_grid(12.0, 256);
    const VortexSolution s = taubes_solve(ModuliPoint({cplx(0), cplx(0)}), g);
    const EnergyVorticity ev = energy_and_vorticity(s);
    CHECK(ev.energy / (2 * M_PI) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(ev.vorticity / (2 * M_PI) == doctest::Approx(1.0).epsilon(0.02));
    // |φ| ~ c r² near the double zero.
    const int c = g.n() / 2;
    const double r1 = g.x(c + 1), r2 = g.x(c + 3);
    const double slope = std::log(std::abs(s.phi(c + 3, c + 3)) / std::abs(s.phi(c + 1, c + 1))) / std::log(r2 / r1);
    CHECK(slope == doctest::Approx(2.0).epsilon(0.05));
    const ZeroSet z = track_zeros(s.phi);
    int winding = 0;
    for (const Zero& zz : z) winding += zz.sign;
    CHECK(winding == 2);
    CHECK(decay_rate(s) <= -0.8);
}

TEST_CASE("separated vortices") {
    SUBCASE("two roots eight apart") {
        const VortexSolution s = taubes_solve(ModuliPoint::from_roots({cplx(-4), cplx(4)}), build_grid(14.0, 192));
        CHECK(energy_and_vorticity(s).energy / (2 * M_PI) == doctest::Approx(1.0).epsilon(0.02));
        const ZeroSet z = track_zeros(s.phi);
        REQUIRE(z.size() == 2);
        CHECK(zero_deviation(z, {cplx(-4), cplx(4)}) <= s.grid.spacing() * std::sqrt(2.0));
        CHECK(max_abs(s.phi) <= 1.0 + 1e-6);
    }
    SUBCASE("three roots") {
        const VortexSolution s =
            taubes_solve(ModuliPoint::from_roots({cplx(0), cplx(4), cplx(-4)}), build_grid(14.0, 192));
        CHECK(energy_and_vorticity(s).energy / (3 * M_PI) == doctest::Approx(1.0).epsilon(0.02));
        const ZeroSet z = track_zeros(s.phi);
        CHECK(zero_deviation(z, {cplx(0), cplx(4), cplx(-4)}) <= s.grid.spacing() * std::sqrt(2.0));
    }
}

TEST_CASE("vacuum diagnostics") {
    const Grid2 g = build_grid(6.0, 64);
    const ScalarField2 zero(g);
    const BogomolnyResidual v = bogomolny_residual(ComplexField2(g, cplx(1)), zero, zero);
    CHECK(v.dbar == 0.0);
    CHECK(v.curv == 0.0);
    const EnergyVorticity ev = energy_and_vorticity(ComplexField2(g, cplx(1)), zero, zero);
    CHECK(ev.energy == 0.0);
    CHECK(ev.vorticity == 0.0);
    const BogomolnyResidual w = bogomolny_residual(ComplexField2(g), zero, zero);
    CHECK(w.curv == doctest::Approx(0.5 * l2_norm(ScalarField2(g, 1.0))).epsilon(1e-12));
}

TEST_CASE("resolution guard") {
    CHECK_THROWS_AS(taubes_solve(ModuliPoint({cplx(0)}), build_grid(12.0, 128)), ConfigError);
    CHECK_THROWS_AS(taubes_solve(ModuliPoint::from_roots({cplx(-5), cplx(5)}), build_grid(9.6, 128)), ConfigError);
}

TEST_CASE("moduli derivative of a single vortex is a translation") {
    const Grid2 g = build_grid(9.6, 128);
    const ModuliPoint q({cplx(0.2, 0.1)});
    const VortexSolution s = taubes_solve(q, g);
    // The root is −q₁, so moving Re q₁ forward moves the vortex in −x.
    const FieldTriple d = moduli_derivative(q, 0, 1e-3, g, &s);
    FieldTriple t(d_dx(s.phi), d_dx(s.a1), d_dx(s.a2));
    const double ref = l2_norm(t);
    t.phi -= d.phi;
    t.a1 -= d.a1;
    t.a2 -= d.a2;
    CHECK(l2_norm(t) / ref <= 5e-2);
    CHECK_THROWS_AS(moduli_derivative(q, 2, 1e-3, g, &s), ConfigError);
}

TEST_CASE("moduli derivative step refinement") {
    const Grid2 g = build_grid(9.6, 128);
    const ModuliPoint q = ModuliPoint::from_roots({cplx(-1.5, 0.2), cplx(1.4, -0.3)});
    const VortexSolution s = taubes_solve(q, g);
    auto diff = [](FieldTriple a, const FieldTriple& b) {
        a.phi -= b.phi;
        a.a1 -= b.a1;
        a.a2 -= b.a2;
        return l2_norm(a);
    };
    const FieldTriple d1 = moduli_derivative(q, 2, 4e-2, g, &s);
    const FieldTriple d2 = moduli_derivative(q, 2, 2e-2, g, &s);
    const FieldTriple d3 = moduli_derivative(q, 2, 1e-2, g, &s);
    CHECK(diff(d1, d2) / diff(d2, d3) == doctest::Approx(4.0).epsilon(0.15));
}
