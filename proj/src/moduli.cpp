#include "ahm/moduli.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace ahm {

namespace {

const cplx I(0.0, 1.0);

ScalarField2 abs2(const ComplexField2& f) {
    ScalarField2 out(f.grid());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::norm(f[k]);
    return out;
}

}  // namespace

ScalarField2 solve_chi(const VortexSolution& sol, const FieldTriple& derivative, int mu, double tol) {
    if (mu < 0 || mu >= sol.q.dim()) throw ConfigError("moduli index out of range");
    std::vector<double> e(sol.q.dim(), 0.0);
    e[mu] = 1.0;
    return solve_chi_along(sol, derivative, e, tol);
}

ScalarField2 solve_chi_along(const VortexSolution& sol, const FieldTriple& derivative, const std::vector<double>& v,
                             double tol) {
    require_same_grid(sol.grid, derivative.grid(), "solve_chi");
    if (static_cast<int>(v.size()) != sol.q.dim()) throw ConfigError("tangent vector has the wrong dimension");
    const Grid2& g = sol.grid;
    const ScalarField2 V = abs2(sol.phi);
    ScalarField2 rhs(g);
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = pair(I * sol.phi[k], derivative.phi[k]);
    const ModuliPoint& q = sol.q;
    const GhostValues ghost = GhostValues::from_function(g, [&](double x, double y) {
        const cplx z(x, y);
        cplx dp = 0.0;
        for (int mu = 0; mu < q.dim(); ++mu)
            if (v[mu] != 0.0) dp += v[mu] * q.coordinate_derivative(mu, z);
        return (dp / q.eval(z)).imag();
    });
    ScalarField2 chi = solve_screened_poisson(V, rhs, tol, &ghost);
    require_finite(chi, "solve_chi");
    return chi;
}

FieldTriple directional_derivative(const VortexSolution& base, const std::vector<double>& v, double step,
                                   double newton_tol) {
    if (static_cast<int>(v.size()) != base.q.dim()) throw ConfigError("tangent vector has the wrong dimension");
    if (!(step > 0.0)) throw ConfigError("finite-difference step must be positive");
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    FieldTriple out(base.grid);
    if (norm == 0.0) return out;
    const std::vector<double> x0 = base.q.real_coords();
    std::vector<double> xp = x0, xm = x0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        xp[k] += step * v[k] / norm;
        xm[k] -= step * v[k] / norm;
    }
    TaubesOptions opts;
    opts.newton_tol = newton_tol;
    opts.warm_start = &base.v;
    const VortexSolution plus = taubes_solve(ModuliPoint::from_real(xp), base.grid, opts);
    const VortexSolution minus = taubes_solve(ModuliPoint::from_real(xm), base.grid, opts);
    const double scale = 0.5 * norm / step;
    for (std::size_t k = 0; k < out.phi.size(); ++k) {
        out.phi[k] = (plus.phi[k] - minus.phi[k]) * scale;
        out.a1[k] = (plus.a1[k] - minus.a1[k]) * scale;
        out.a2[k] = (plus.a2[k] - minus.a2[k]) * scale;
    }
    return out;
}

ZeroMode make_zero_mode(const VortexSolution& sol, const FieldTriple& derivative, int mu, double tol) {
    ScalarField2 chi = solve_chi(sol, derivative, mu, tol);
    FieldTriple n = derivative;
    const ScalarField2 c1 = d_dx(chi);
    const ScalarField2 c2 = d_dy(chi);
    for (std::size_t k = 0; k < chi.size(); ++k) {
        n.phi[k] -= I * sol.phi[k] * chi[k];
        n.a1[k] -= c1[k];
        n.a2[k] -= c2[k];
    }
    return ZeroMode(mu, std::move(chi), std::move(n));
}

PointAnalysis analyze_point(const ModuliPoint& q, const Grid2& grid, const ModuliOptions& opts,
                            const ScalarField2* warm_start) {
    TaubesOptions to;
    to.newton_tol = opts.newton_tol;
    to.warm_start = warm_start;
    PointAnalysis a{taubes_solve(q, grid, to), {}, {}, {}};
    for (int mu = 0; mu < q.dim(); ++mu) {
        a.derivatives.push_back(moduli_derivative(q, mu, opts.fd_step, grid, &a.sol, opts.newton_tol));
        a.modes.push_back(make_zero_mode(a.sol, a.derivatives.back(), mu, opts.chi_tol));
    }
    a.g = metric_from_modes(a.modes);
    return a;
}

std::vector<ZeroMode> zero_modes(const ModuliPoint& q, const Grid2& grid, const ModuliOptions& opts) {
    return analyze_point(q, grid, opts).modes;
}

ScalarField2 gauge_residual(const VortexSolution& sol, const FieldTriple& ut) {
    require_same_grid(sol.grid, ut.grid(), "gauge_residual");
    ScalarField2 r = divergence(ut.a1, ut.a2);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= pair(I * sol.phi[k], ut.phi[k]);
    return r;
}

Eigen::MatrixXd metric_from_modes(const std::vector<ZeroMode>& modes) {
    const int d = static_cast<int>(modes.size());
    Eigen::MatrixXd g(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) g(a, b) = g(b, a) = l2_inner(modes[a].n, modes[b].n);
    return g;
}

Eigen::MatrixXd metric(const ModuliPoint& q, const Grid2& grid, const ModuliOptions& opts) {
    return analyze_point(q, grid, opts).g;
}

Eigen::MatrixXd orthonormal_frame(const Eigen::MatrixXd& g) {
    if (g.rows() != g.cols()) throw GeometryError("metric must be square");
    const Eigen::MatrixXd sym = 0.5 * (g + g.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw GeometryError("metric eigendecomposition failed");
    if (es.eigenvalues().minCoeff() <= 0.0) throw GeometryError("metric is not positive definite");
    const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
}

Christoffels christoffels_from_metric_derivatives(const Eigen::MatrixXd& g, const std::vector<Eigen::MatrixXd>& dg) {
    const int d = static_cast<int>(g.rows());
    const Eigen::MatrixXd ginv = g.inverse();
    // lowered[r](nu, lam) = 1/2 (d_nu g_{r lam} + d_lam g_{r nu} - d_r g_{nu lam})
    std::vector<Eigen::MatrixXd> lowered(d, Eigen::MatrixXd::Zero(d, d));
    for (int r = 0; r < d; ++r)
        for (int nu = 0; nu < d; ++nu)
            for (int lam = 0; lam < d; ++lam)
                lowered[r](nu, lam) = 0.5 * (dg[nu](r, lam) + dg[lam](r, nu) - dg[r](nu, lam));
    Christoffels gamma(d, Eigen::MatrixXd::Zero(d, d));
    for (int mu = 0; mu < d; ++mu)
        for (int r = 0; r < d; ++r) gamma[mu] += ginv(mu, r) * lowered[r];
    return gamma;
}

ChristoffelResult christoffels(const ModuliPoint& q, const Grid2& grid, double fd_step, bool pairing_check,
                               const ModuliOptions& opts) {
    return christoffels(analyze_point(q, grid, opts), fd_step, pairing_check, opts);
}

ChristoffelResult christoffels(const PointAnalysis& base, double fd_step, bool pairing_check,
                               const ModuliOptions& opts) {
    if (!(fd_step > 0.0)) throw ConfigError("Christoffel step must be positive");
    const ModuliPoint& q = base.sol.q;
    const Grid2& grid = base.sol.grid;
    const int d = q.dim();
    std::vector<Eigen::MatrixXd> dg(d);
    std::vector<std::vector<FieldTriple>> dn;  // dn[mu][nu] = ∂_mu ñ_nu
    for (int mu = 0; mu < d; ++mu) {
        const PointAnalysis plus = analyze_point(q.displaced(mu, fd_step), grid, opts, &base.sol.v);
        const PointAnalysis minus = analyze_point(q.displaced(mu, -fd_step), grid, opts, &base.sol.v);
        dg[mu] = (plus.g - minus.g) / (2.0 * fd_step);
        if (pairing_check) {
            std::vector<FieldTriple> row;
            for (int nu = 0; nu < d; ++nu) {
                FieldTriple t = plus.modes[nu].n;
                const FieldTriple& m = minus.modes[nu].n;
                const double inv = 0.5 / fd_step;
                for (std::size_t k = 0; k < t.phi.size(); ++k) {
                    t.phi[k] = (t.phi[k] - m.phi[k]) * inv;
                    t.a1[k] = (t.a1[k] - m.a1[k]) * inv;
                    t.a2[k] = (t.a2[k] - m.a2[k]) * inv;
                }
                row.push_back(std::move(t));
            }
            dn.push_back(std::move(row));
        }
    }

    ChristoffelResult out;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(base.g);
    out.min_eigenvalue = es.eigenvalues().minCoeff();
    out.near_degenerate = out.min_eigenvalue <= 1e-6 * es.eigenvalues().maxCoeff();
    out.gamma = christoffels_from_metric_derivatives(base.g, dg);

    if (pairing_check) {
        out.lowered_koszul.assign(d, Eigen::MatrixXd::Zero(d, d));
        out.lowered_pairing.assign(d, Eigen::MatrixXd::Zero(d, d));
        for (int lam = 0; lam < d; ++lam)
            for (int mu = 0; mu < d; ++mu)
                for (int nu = 0; nu < d; ++nu) {
                    out.lowered_koszul[lam](mu, nu) = 0.5 * (dg[mu](lam, nu) + dg[nu](lam, mu) - dg[lam](mu, nu));
                    FieldTriple j = dn[mu][nu];
                    const ScalarField2& chi = base.modes[mu].chi;
                    const ComplexField2& nphi = base.modes[nu].n.phi;
                    for (std::size_t k = 0; k < j.phi.size(); ++k) j.phi[k] -= I * chi[k] * nphi[k];
                    out.lowered_pairing[lam](mu, nu) = l2_inner(j, base.modes[lam].n);
                }
    }
    return out;
}

double potential_v0_value(const ComplexField2& phi) {
    ScalarField2 e(phi.grid());
    for (std::size_t k = 0; k < e.size(); ++k) {
        const double m = std::norm(phi[k]) - 1.0;
        e[k] = 0.125 * m * m;
    }
    return integrate(e);
}

PotentialValue potential_v0(const PointAnalysis& a) {
    PotentialValue out;
    out.v0 = potential_v0_value(a.sol.phi);
    ComplexField2 w(a.sol.grid);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = (std::norm(a.sol.phi[k]) - 1.0) * a.sol.phi[k];
    out.grad.resize(static_cast<int>(a.modes.size()));
    for (std::size_t mu = 0; mu < a.modes.size(); ++mu) out.grad(mu) = 0.5 * l2_inner(w, a.modes[mu].n.phi);
    return out;
}

PotentialValue potential_v0(const ModuliPoint& q, const Grid2& grid, const ModuliOptions& opts) {
    return potential_v0(analyze_point(q, grid, opts));
}

FieldTriple apply_l(const VortexSolution& u, const FieldTriple& ut, LinearOperator mode) {
    require_same_grid(u.grid, ut.grid(), "apply_l");
    const Grid2& g = u.grid;
    const ComplexField2& Phi = u.phi;
    const ComplexField2 DPhi1 = covariant_dx(Phi, u.a1);
    const ComplexField2 DPhi2 = covariant_dy(Phi, u.a2);
    const ScalarField2 divA = divergence(u.a1, u.a2);

    // Covariant Laplacian of the perturbation in the background connection.
    const ComplexField2 lap = laplacian(ut.phi);
    const ComplexField2 p1 = d_dx(ut.phi);
    const ComplexField2 p2 = d_dy(ut.phi);
    const ScalarField2 divAt = divergence(ut.a1, ut.a2);
    const ScalarField2 lap1 = laplacian(ut.a1);
    const ScalarField2 lap2 = laplacian(ut.a2);

    FieldTriple out(g);
    for (std::size_t k = 0; k < out.phi.size(); ++k) {
        const double A1 = u.a1[k], A2 = u.a2[k];
        const cplx DD = lap[k] - 2.0 * I * (A1 * p1[k] + A2 * p2[k]) - I * divA[k] * ut.phi[k] -
                        (A1 * A1 + A2 * A2) * ut.phi[k];
        const double m2 = std::norm(Phi[k]);
        const cplx cross = 2.0 * I * (ut.a1[k] * DPhi1[k] + ut.a2[k] * DPhi2[k]);
        if (mode == LinearOperator::GaugeFixed) {
            out.phi[k] = -DD + cross + 0.5 * (3.0 * m2 - 1.0) * ut.phi[k];
            out.a1[k] = -lap1[k] + m2 * ut.a1[k] - 2.0 * pair(I * ut.phi[k], DPhi1[k]);
            out.a2[k] = -lap2[k] + m2 * ut.a2[k] - 2.0 * pair(I * ut.phi[k], DPhi2[k]);
        } else {
            out.phi[k] = -DD + cross + I * Phi[k] * divAt[k] + 0.5 * (m2 - 1.0) * ut.phi[k] +
                         pair(Phi[k], ut.phi[k]) * Phi[k];
            const cplx Dt1 = p1[k] - I * A1 * ut.phi[k];
            const cplx Dt2 = p2[k] - I * A2 * ut.phi[k];
            out.a1[k] = -lap1[k] - pair(I * Phi[k], Dt1) - pair(I * ut.phi[k], DPhi1[k]) + ut.a1[k] * m2;
            out.a2[k] = -lap2[k] - pair(I * Phi[k], Dt2) - pair(I * ut.phi[k], DPhi2[k]) + ut.a2[k] * m2;
        }
    }
    if (mode == LinearOperator::Linearized) {
        // -∂_b F̃_ba = -Δ Ã_a + ∂_a (∇·Ã)
        const ScalarField2 g1 = d_dx(divAt);
        const ScalarField2 g2 = d_dy(divAt);
        for (std::size_t k = 0; k < out.a1.size(); ++k) {
            out.a1[k] += g1[k];
            out.a2[k] += g2[k];
        }
    }
    return out;
}

}  // namespace ahm
