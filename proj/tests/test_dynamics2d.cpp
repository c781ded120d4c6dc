#include <doctest.h>

#include <cmath>
#include <random>

#include "ahm/dynamics2d.hpp"

using namespace ahm;

namespace {

const Grid2& grid128() {
    static const Grid2 g = build_grid(9.6, 128);
    return g;
}

GaugeState2D vacuum(const Grid2& g, bool hyperbolic) {
    GaugeState2D s(g);
    for (std::size_t k = 0; k < s.phi.size(); ++k) s.phi[k] = 1.0;
    s.hyperbolic = hyperbolic;
    return s;
}

double field_change(const GaugeState2D& a, const GaugeState2D& b) {
    ComplexField2 d = a.phi;
    d -= b.phi;
    ScalarField2 e1 = a.a1, e2 = a.a2;
    e1 -= b.a1;
    e2 -= b.a2;
    return std::max({max_abs(d), max_abs(e1), max_abs(e2)});
}

double separation(const ZeroSet& z) { return std::hypot(z[0].x - z[1].x, z[0].y - z[1].y); }

}  // namespace

TEST_CASE("initial data from the moduli space") {
    const Grid2& g = grid128();
    const ModuliPoint q = ModuliPoint::from_roots({cplx(-1.5, 0.2), cplx(1.4, -0.1)});
    SUBCASE("static") {
        const GaugeState2D s = init_from_moduli(q, {0, 0, 0, 0}, g);
        CHECK(gauss_residual(s) <= 1e-3);
        CHECK(max_abs(s.pi) == 0.0);
    }
    SUBCASE("moving") {
        const std::vector<double> v{0.05, -0.02, 0.1, 0.03};
        const GaugeState2D s = init_from_moduli(q, v, g);
        const Eigen::MatrixXd m = metric(q, g);
        const Eigen::Map<const Eigen::VectorXd> vv(v.data(), 4);
        const double kinetic = l2_inner(s.pi, s.pi) + l2_inner(s.e1, s.e1) + l2_inner(s.e2, s.e2);
        CHECK(kinetic / vv.dot(m * vv) == doctest::Approx(1.0).epsilon(0.02));
        // Grid-level mismatch between the χ solve and the divergence stencil: linear in v, second order in h.
        const double coarse = gauss_residual(s) / std::sqrt(kinetic);
        CHECK(coarse <= 2e-2);
        const GaugeState2D fine = init_from_moduli(q, v, build_grid(9.6, 256));
        const double kf = l2_inner(fine.pi, fine.pi) + l2_inner(fine.e1, fine.e1) + l2_inner(fine.e2, fine.e2);
        CHECK(coarse / (gauss_residual(fine) / std::sqrt(kf)) >= 3.0);
        std::vector<double> v2(v);
        for (double& x : v2) x *= 2.0;
        const GaugeState2D s2 = init_from_moduli(q, v2, g);
        ComplexField2 d = s2.pi;
        ComplexField2 twice = s.pi;
        twice *= 2.0;
        d -= twice;
        CHECK(max_abs(d) <= 1e-6 * max_abs(s2.pi));
    }
}

TEST_CASE("vacuum is a fixed point") {
    const Grid2 g = build_grid(6.0, 64);
    GaugeState2D h = vacuum(g, true);
    const GaugeState2D h0 = h;
    for (int k = 0; k < 50; ++k) h = step_hyperbolic(h, 0.05);
    CHECK(field_change(h, h0) == 0.0);
    CHECK(gauss_residual(h) == 0.0);
    GaugeState2D p = vacuum(g, false);
    for (int k = 0; k < 50; ++k) p = step_parabolic(p, 0.2 * g.spacing() * g.spacing());
    CHECK(field_change(p, h0) == 0.0);
    CHECK(energy(p).total == 0.0);
}

TEST_CASE("step size limits") {
    const Grid2 g = build_grid(6.0, 64);
    CHECK_THROWS_AS(step_hyperbolic(vacuum(g, true), 0.6 * g.spacing()), ConfigError);
    CHECK_THROWS_AS(step_parabolic(vacuum(g, false), 0.3 * g.spacing() * g.spacing()), ConfigError);
}

TEST_CASE("static vortex under the hyperbolic flow") {
    const GaugeState2D s0 = init_from_moduli(ModuliPoint({cplx(0.3, -0.2)}), {0, 0}, grid128());
    const RunRecord r = simulate(s0, 20.0, 0.05, 40);
    CHECK(energy_drift(r) <= 1e-3);
    for (const ZeroSet& z : r.track.zeros) {
        REQUIRE(z.size() == 1);
        CHECK(std::hypot(z[0].x + 0.3, z[0].y - 0.2) <= 1e-2);
    }
}

TEST_CASE("Gauss constraint is transported") {
    const ModuliPoint q = ModuliPoint::from_roots({cplx(-1.5), cplx(1.5)});
    const GaugeState2D s0 = init_from_moduli(q, {0.0, 0.0, -0.3, 0.0}, grid128());
    const RunRecord r = simulate(s0, 10.0, 0.05, 20);
    const double g0 = r.gauss.front();
    for (double gv : r.gauss) CHECK(gv <= 3.0 * g0);
    CHECK(gauss_residual(vacuum(grid128(), true)) == 0.0);
}

TEST_CASE("discrete conservation identity") {
    // ∂_a F_A,a − (iΦ, F_φ) is the time derivative of Gauss's law; it must vanish for the discrete forces.
    const ModuliPoint q = ModuliPoint::from_roots({cplx(-1.2, 0.3), cplx(1.0, -0.2)});
    GaugeState2D s = init_from_moduli(q, {0.1, 0.0, -0.2, 0.1}, grid128());
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0.0, 0.05);
    const cplx c0(nd(rng), nd(rng)), c1(nd(rng), nd(rng));
    const double b0 = nd(rng), b1 = nd(rng);
    const Grid2& g = s.grid();
    for (int j = 0; j < g.n(); ++j)
        for (int i = 0; i < g.n(); ++i) {
            const double x = g.x(i), y = g.y(j);
            const double w = std::exp(-0.25 * (x * x + y * y));
            s.phi(i, j) += w * (c0 + c1 * x);
            s.a1(i, j) += w * (b0 + b1 * y);
        }
    const FieldTriple f = forces(s);
    const ScalarField2 div = divergence(f.a1, f.a2);
    ScalarField2 rot(s.grid()), comb(s.grid());
    const int margin = kFrozenRing + 4, n = s.grid().n();
    for (int j = margin; j < n - margin; ++j)
        for (int i = margin; i < n - margin; ++i) {
            rot(i, j) = pair(cplx(0, 1) * s.phi(i, j), f.phi(i, j));
            comb(i, j) = div(i, j) - rot(i, j);
        }
    CHECK(l2_norm(comb) <= 5e-2 * (l2_norm(rot) + l2_norm(div)));
}

TEST_CASE("gradient flow") {
    const Grid2& g = grid128();
    const double dt = 0.2 * g.spacing() * g.spacing();
    SUBCASE("perturbed vortex relaxes to the Bogomolny energy") {
        GaugeState2D s = init_from_moduli(ModuliPoint({cplx(0)}), {0, 0}, g);
        s.hyperbolic = false;
        for (int j = 0; j < g.n(); ++j)
            for (int i = 0; i < g.n(); ++i) {
                const double x = g.x(i), y = g.y(j);
                s.phi(i, j) *= 1.0 + 0.5 * std::exp(-(x - 1) * (x - 1) - y * y);
                s.a2(i, j) += 0.4 * std::exp(-x * x - (y + 1) * (y + 1));
            }
        const RunRecord r = simulate(s, 6.0, dt, 50);
        for (std::size_t k = 1; k < r.energy.size(); ++k) CHECK(r.energy[k] <= r.energy[k - 1]);
        CHECK(r.energy.front() > 1.05 * M_PI);
        CHECK(r.energy.back() / M_PI == doctest::Approx(1.0).epsilon(0.02));
    }
    SUBCASE("static vortex stays put") {
        GaugeState2D s = init_from_moduli(ModuliPoint({cplx(0.2)}), {0, 0}, g);
        s.hyperbolic = false;
        const RunRecord r = simulate(s, 20.0, dt, 1000);
        for (const ZeroSet& z : r.track.zeros) CHECK(std::hypot(z[0].x + 0.2, z[0].y) <= 1e-2);
    }
}

TEST_CASE("zero tracking") {
    SUBCASE("linear field") {
        const Grid2 g = build_grid(4.0, 32);
        const ComplexField2 phi = sample_complex(g, [](double x, double y) { return cplx(x, y); });
        const ZeroSet z = track_zeros(phi);
        REQUIRE(z.size() == 1);
        CHECK(std::hypot(z[0].x, z[0].y) <= 0.5 * g.spacing());
        CHECK(z[0].sign == 1);
    }
    SUBCASE("solved pair") {
        const Grid2 g = build_grid(10.8, 144);
        const VortexSolution s = taubes_solve(ModuliPoint::from_roots({cplx(-2), cplx(2)}), g);
        const ZeroSet z = track_zeros(s.phi);
        REQUIRE(z.size() == 2);
        CHECK(zero_deviation(z, {cplx(-2), cplx(2)}) <= g.spacing());
        CHECK(z[0].sign + z[1].sign == 2);
        const double a = axis_angle(z);
        CHECK(std::min(a, 180.0 - a) <= 0.5);
    }
    SUBCASE("multiplicity") {
        const ZeroSet doubled{{0.0, 0.0, 2}};
        CHECK(zero_deviation(doubled, {cplx(0.1), cplx(-0.1)}) == doctest::Approx(0.1));
        CHECK(std::isinf(zero_deviation(doubled, {cplx(0.1)})));
    }
}

TEST_CASE("zeros move continuously") {
    const ModuliPoint q = ModuliPoint::from_roots({cplx(-1.5), cplx(1.5)});
    const double dt = 0.05;
    const int every = 4;
    const RunRecord r = simulate(init_from_moduli(q, {0.0, 0.0, -0.6, 0.0}, grid128()), 6.0, dt, every);
    const double bound = std::max(2.0 * dt * every, grid128().spacing());
    for (std::size_t k = 1; k < r.track.zeros.size(); ++k) {
        const ZeroSet& a = r.track.zeros[k - 1];
        const ZeroSet& b = r.track.zeros[k];
        std::vector<cplx> prev;
        for (const Zero& z : a)
            for (int m = 0; m < std::abs(z.sign); ++m) prev.emplace_back(z.x, z.y);
        CHECK(zero_deviation(b, prev) <= bound);
    }
}

TEST_CASE("single vortex boost follows the straight line") {
    const double eps = 0.1;
    const auto flat = flat_model(2, M_PI);
    AdiabaticOptions o;
    o.dt = 0.05;
    o.sample_every = 20;
    // Root −q₁ moves with velocity −v.
    const AdiabaticReport rep = adiabatic_compare(ModuliPoint({cplx(0.5)}), {-eps, 0.0}, 1.0 / eps, grid128(), *flat, o);
    CHECK(rep.max_deviation <= 0.05);
    const ZeroSet& last = rep.run.track.zeros.back();
    CHECK(last[0].x == doctest::Approx(-0.5 + 1.0).epsilon(0.05));
}

TEST_CASE("potential sign") {
    const Grid2& g = grid128();
    const ModuliPoint q = ModuliPoint::from_roots({cplx(-1.5), cplx(1.5)});
    // V₀ along the separation mode, sampled at ±1.45 and ±1.55.
    const double v_in = potential_v0(ModuliPoint::from_roots({cplx(-1.45), cplx(1.45)}), g).v0;
    const double v_out = potential_v0(ModuliPoint::from_roots({cplx(-1.55), cplx(1.55)}), g).v0;
    const double slope = (v_out - v_in) / 0.1;
    REQUIRE(slope != 0.0);
    for (double lambda : {1.1, 0.9}) {
        const double iota = lambda - 1.0;
        const RunRecord r = simulate(init_from_moduli(q, {0, 0, 0, 0}, g, lambda), 4.0, 0.05, 80);
        const double change = separation(r.track.zeros.back()) - separation(r.track.zeros.front());
        // Acceleration along the separation is −ι ∂V₀/∂s.
        CHECK(change * (-iota * slope) > 0.0);
        if (lambda > 1.0) CHECK(change > 0.0);
        if (lambda < 1.0) CHECK(change < 0.0);
    }
}
