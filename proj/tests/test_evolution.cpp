#include <doctest.h>

#include <cmath>
#include <memory>

#include "ahm/evolution.hpp"

using namespace ahm;

namespace {

// g = e^{2σ} I on ℝ² with σ = s (x² + y²).
std::shared_ptr<MetricModel> conformal_model(double s) {
    return std::make_shared<FunctionModel>(2, [s](const Eigen::VectorXd& x) {
        ModuliGeometry m;
        m.q = ModuliPoint::from_real({x(0), x(1)});
        const double sigma = s * x.squaredNorm();
        const Eigen::Vector2d ds = 2.0 * s * x;
        m.g = std::exp(2 * sigma) * Eigen::MatrixXd::Identity(2, 2);
        m.frame = std::exp(-sigma) * Eigen::MatrixXd::Identity(2, 2);
        m.gamma.assign(2, Eigen::MatrixXd::Zero(2, 2));
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    m.gamma[k](i, j) = (i == k ? ds(j) : 0.0) + (j == k ? ds(i) : 0.0) - (i == j ? ds(k) : 0.0);
        m.grad_v0 = Eigen::VectorXd::Zero(2);
        return m;
    });
}

EvolutionParams torus(double length, double dx, double dt) {
    EvolutionParams p;
    p.domain = Domain::Torus;
    p.length = length;
    p.dx = dx;
    p.dt = dt;
    return p;
}

const GeometryTable& n2_table() {
    static const GeometryTable t =
        GeometryTable::build_polar({{0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.5, 8.0}}, build_grid(9.6, 128));
    return t;
}

std::shared_ptr<MetricModel> n2_model() {
    return std::make_shared<TableModel>(std::make_shared<GeometryTable>(n2_table()));
}

}  // namespace

TEST_CASE("constant data is a fixed point") {
    const auto model = conformal_model(0.1);
    const EvolutionParams p = torus(1.0, 0.05, 0.02);
    const Eigen::Vector2d q0(0.4, -0.2);
    const EvolutionState s0 = make_state(p, *model, [&](double) { return Eigen::VectorXd(q0); });
    const Trajectory tr = run(s0, p, *model, 4.0, 200);
    CHECK(tr.snapshots.back().q == s0.q);
    CHECK(energy(s0, p, *model) == 0.0);
}

TEST_CASE("x-independent data follows the geodesic") {
    const auto model = conformal_model(0.1);
    const EvolutionParams p = torus(1.0, 0.05, 0.02);
    const Eigen::Vector2d q0(0.5, -0.3), v0(0.4, 0.2);
    const EvolutionState s0 = make_state(
        p, *model, [&](double) { return Eigen::VectorXd(q0); }, [&](double) { return Eigen::VectorXd(v0); });
    const Trajectory tr = run(s0, p, *model, 5.0, 250);
    const auto geo = geodesic_ode(q0, v0, 5.0, *model);
    const Eigen::VectorXd& end = geo.back().q;
    CHECK(geo.back().t == doctest::Approx(5.0));
    double err = 0.0;
    for (int j = 0; j < tr.snapshots.back().q.cols(); ++j)
        err = std::max(err, (tr.snapshots.back().q.col(j) - end).lpNorm<Eigen::Infinity>());
    CHECK(err <= 1e-3);
}

TEST_CASE("geodesic ODE") {
    const auto flat = flat_model(2, M_PI);
    SUBCASE("at rest") {
        const auto g = geodesic_ode(Eigen::Vector2d(0.3, 0.1), Eigen::Vector2d::Zero(), 2.0, *conformal_model(0.1));
        CHECK(g.back().q == Eigen::VectorXd(Eigen::Vector2d(0.3, 0.1)));
    }
    SUBCASE("straight line in a flat metric") {
        const Eigen::Vector2d q0(0.2, -0.4), v0(0.3, 0.7);
        const auto g = geodesic_ode(q0, v0, 3.0, *flat);
        CHECK((g.back().q - (q0 + 3.0 * v0)).norm() <= 1e-3);
    }
    SUBCASE("head-on pair scatters at a right angle") {
        const auto model = n2_model();
        // P = 0, Q = 2 moving toward Q < 0.
        const Eigen::VectorXd q0 = Eigen::Vector4d(0.0, 0.0, 2.0, 0.0);
        const Eigen::VectorXd v0 = Eigen::Vector4d(0.0, 0.0, -1.0, 0.0);
        const auto g = geodesic_ode(q0, v0, 4.0, *model);
        const auto root_arg = [&](const Eigen::VectorXd& x) {
            const auto roots = polynomial_roots(ModuliPoint::from_real(model->to_raw(x)));
            return std::abs(std::atan2(roots[0].imag(), roots[0].real()));
        };
        CHECK(g.front().q(2) > 0.0);
        CHECK(g.back().q(2) < 0.0);
        CHECK(std::abs(g.back().q(3)) < 1e-9);
        const double before = root_arg(g.front().q), after = root_arg(g.back().q);
        const double jump = std::abs(std::min(before, M_PI - before) - std::min(after, M_PI - after));
        CHECK(jump == doctest::Approx(M_PI / 2).epsilon(1e-6));
    }
}

TEST_CASE("P components solve the linear wave equation") {
    const auto model = n2_model();
    const EvolutionParams p = torus(4.0, 0.05, 0.02);
    const double k = M_PI / 2;
    const EvolutionState s0 = make_state(
        p, *model,
        [&](double x) {
            return Eigen::VectorXd(Eigen::Vector4d(0.3 * std::sin(k * x), 0.1 * std::cos(k * x),
                                                   4.0 + 1.5 * std::cos(k * x), 1.5 * std::sin(k * x)));
        },
        [&](double x) {
            return Eigen::VectorXd(Eigen::Vector4d(0.0, 0.2 * std::cos(k * x), 0.5 * std::sin(k * x), 0.0));
        });
    const Trajectory tr = run(s0, p, *model, 2.0, 100);
    // Independent velocity Verlet for u_tt = u_xx on the same torus.
    const int m = p.nodes();
    Eigen::MatrixXd u = s0.q.topRows(2), v = s0.p.topRows(2);
    auto lap = [&](const Eigen::MatrixXd& w) {
        Eigen::MatrixXd out(w.rows(), w.cols());
        for (int j = 0; j < m; ++j)
            out.col(j) = (w.col((j + 1) % m) - 2.0 * w.col(j) + w.col((j + m - 1) % m)) / (p.dx * p.dx);
        return out;
    };
    for (int n = 0; n < 100; ++n) {
        const Eigen::MatrixXd half = v + 0.5 * p.dt * lap(u);
        u += p.dt * half;
        v = half + 0.5 * p.dt * lap(u);
    }
    CHECK((tr.snapshots.back().q.topRows(2) - u).lpNorm<Eigen::Infinity>() <= 1e-6);
    // The semi-discrete solution tracks d'Alembert to O(dx²).
    double dal = 0.0;
    for (int j = 0; j < m; ++j) {
        const double x = p.x(j);
        dal = std::max(dal, std::abs(u(0, j) - 0.3 * 0.5 * (std::sin(k * (x - 2.0)) + std::sin(k * (x + 2.0)))));
    }
    CHECK(dal <= 1e-2);
}

TEST_CASE("energy") {
    SUBCASE("conserved by the hyperbolic flow") {
        const auto model = n2_model();
        const EvolutionParams p = torus(4.0, 0.05, 0.02);
        const double k = M_PI / 2;
        const EvolutionState s0 = make_state(
            p, *model,
            [&](double x) {
                return Eigen::VectorXd(Eigen::Vector4d(0.3 * std::sin(k * x), 0.0, 4.0 + 1.5 * std::cos(k * x),
                                                       1.5 * std::sin(k * x)));
            },
            [&](double x) { return Eigen::VectorXd(Eigen::Vector4d(0.0, 0.2 * std::cos(k * x), 0.5 * std::sin(k * x), 0.0)); });
        const Trajectory tr = run(s0, p, *model, 10.0, 25);
        const double e0 = energy(s0, p, *model);
        double drift = 0.0;
        for (const auto& s : tr.snapshots) drift = std::max(drift, std::abs(energy(s, p, *model) - e0) / e0);
        CHECK(drift <= 1e-3);
    }
    SUBCASE("non-increasing under heat flow") {
        const auto model = conformal_model(0.1);
        EvolutionParams p = torus(2.0, 0.05, 6e-4);
        p.kappa0 = 0.0;
        p.kappa1 = 1.0;
        EvolutionState s = make_state(p, *model, [](double x) {
            return Eigen::VectorXd(Eigen::Vector2d(std::sin(M_PI * x), 0.5 * std::cos(2 * M_PI * x)));
        });
        double prev = energy(s, p, *model);
        int increases = 0;
        for (int n = 0; n < 800; ++n) {
            s = step(s, p, *model);
            const double e = energy(s, p, *model);
            increases += e > prev;
            prev = e;
        }
        CHECK(increases == 0);
        CHECK_THROWS_AS(step(s, torus(2.0, 0.05, 0.02), *model), ConfigError);
        p.dt = 1e-3;
        CHECK_THROWS_AS(step(s, p, *model), ConfigError);
    }
}

TEST_CASE("run bookkeeping") {
    const auto model = conformal_model(0.1);
    const EvolutionParams p = torus(1.0, 0.05, 0.02);
    const EvolutionState s0 = make_state(
        p, *model, [](double x) { return Eigen::VectorXd(Eigen::Vector2d(0.2 * std::sin(2 * M_PI * x), 0.1)); },
        [](double x) { return Eigen::VectorXd(Eigen::Vector2d(0.0, 0.3 * std::cos(2 * M_PI * x))); });
    CHECK(run(s0, p, *model, 0.0, 1).snapshots.size() == 1);
    CHECK(run(s0, p, *model, 1.0, 7).snapshots.size() == 50 / 7 + 1);
    const Trajectory full = run(s0, p, *model, 1.0, 50);
    const Trajectory half = run(s0, p, *model, 0.5, 25);
    const Trajectory rest = run(half.snapshots.back(), p, *model, 0.5, 25);
    CHECK(rest.snapshots.back().q == full.snapshots.back().q);
    CHECK(rest.snapshots.back().p == full.snapshots.back().p);
    CHECK(rest.snapshots.back().step == 50);
}

TEST_CASE("flat torus conserves the mean") {
    const auto model = flat_model(2, M_PI);
    const EvolutionParams p = torus(2.0, 0.05, 0.02);
    const EvolutionState s0 = make_state(
        p, *model, [](double x) { return Eigen::VectorXd(Eigen::Vector2d(std::sin(M_PI * x), std::cos(M_PI * x))); },
        [](double x) { return Eigen::VectorXd(Eigen::Vector2d(0.3 * std::cos(2 * M_PI * x), 0.0)); });
    const Trajectory tr = run(s0, p, *model, 5.0, 250);
    // The mean moves with the conserved mean velocity, which is zero here.
    CHECK(s0.p.rowwise().mean().norm() <= 1e-12);
    CHECK((tr.snapshots.back().q.rowwise().mean() - s0.q.rowwise().mean()).norm() <= 1e-6);
}

TEST_CASE("time reversal") {
    const auto model = conformal_model(0.1);
    const EvolutionParams p = torus(1.0, 0.05, 0.02);
    const EvolutionState s0 = make_state(
        p, *model, [](double x) { return Eigen::VectorXd(Eigen::Vector2d(0.4 * std::sin(2 * M_PI * x), 0.2)); },
        [](double x) { return Eigen::VectorXd(Eigen::Vector2d(0.1, 0.3 * std::cos(2 * M_PI * x))); });
    EvolutionState s = run(s0, p, *model, 2.0, 100).snapshots.back();
    s.p = -s.p;
    s = run(s, p, *model, 2.0, 100).snapshots.back();
    CHECK((s.q - s0.q).lpNorm<Eigen::Infinity>() <= 1e-4);
}

TEST_CASE("second-order convergence in dx and dt") {
    const auto model = conformal_model(0.1);
    auto solve = [&](double dx) {
        const EvolutionParams p = torus(1.0, dx, 0.4 * dx);
        const EvolutionState s0 = make_state(
            p, *model, [](double x) { return Eigen::VectorXd(Eigen::Vector2d(0.4 * std::sin(2 * M_PI * x), 0.2)); },
            [](double x) { return Eigen::VectorXd(Eigen::Vector2d(0.1, 0.3 * std::cos(2 * M_PI * x))); });
        return run(s0, p, *model, 2.0, static_cast<int>(std::lround(2.0 / p.dt))).snapshots.back().q;
    };
    const Eigen::MatrixXd a = solve(0.1), b = solve(0.05), c = solve(0.025);
    double dab = 0.0, dbc = 0.0;
    for (int j = 0; j < a.cols(); ++j) {
        dab = std::max(dab, (a.col(j) - b.col(2 * j)).lpNorm<Eigen::Infinity>());
        dbc = std::max(dbc, (b.col(2 * j) - c.col(4 * j)).lpNorm<Eigen::Infinity>());
    }
    CHECK(dab / dbc == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("parameter validation") {
    EvolutionParams p = torus(1.0, 0.05, 0.05);
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = torus(1.03, 0.05, 0.02);
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = torus(1.0, 0.05, 0.02);
    p.kappa0 = 0.0;
    p.kappa1 = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}
