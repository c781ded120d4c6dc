#include "ahm/vortex2d.hpp"

#include <algorithm>
#include <cmath>

namespace ahm {

namespace {

// Pointwise data of the holomorphic part: e^{u0} = |p|^2/(c+|p|^2), the source
// 4c|p'|^2/(c+|p|^2)^2 and the gradient of log(c+|p|^2).
struct HolomorphicData {
    ScalarField2 e0, source, dlog1, dlog2;
    ComplexField2 unit;  // p / sqrt(c+|p|^2)

    explicit HolomorphicData(const Grid2& g) : e0(g), source(g), dlog1(g), dlog2(g), unit(g) {}
};

HolomorphicData holomorphic_data(const ModuliPoint& q, const Grid2& g) {
    HolomorphicData d(g);
    const double c = regularization_scale(q);
    for (int j = 0; j < g.n(); ++j)
        for (int i = 0; i < g.n(); ++i) {
            const cplx z(g.x(i), g.y(j));
            const cplx p = q.eval(z);
            const cplx dp = q.derivative(z);
            const double p2 = std::norm(p);
            const double w = c + p2;
            d.e0(i, j) = p2 / w;
            d.source(i, j) = 4.0 * c * std::norm(dp) / (w * w);
            const cplx pdp = std::conj(p) * dp;
            d.dlog1(i, j) = 2.0 * pdp.real() / w;
            d.dlog2(i, j) = -2.0 * pdp.imag() / w;
            d.unit(i, j) = p / std::sqrt(w);
        }
    return d;
}

// Ghost data for v making u = u0 + v vanish just outside the box.
GhostValues v_ghosts(const ModuliPoint& q, const Grid2& g) {
    const double c = regularization_scale(q);
    return GhostValues::from_function(g, [&](double x, double y) {
        const double p2 = std::norm(q.eval(cplx(x, y)));
        return std::log1p(c / p2);
    });
}

ScalarField2 taubes_residual(const ScalarField2& v, const HolomorphicData& d, const GhostValues& ghost) {
    ScalarField2 r = laplacian(v, ghost);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] += 1.0 - d.source[k] - d.e0[k] * std::exp(v[k]);
    return r;
}

double rms(const ScalarField2& f) {
    double s = 0.0;
    for (double x : f.values()) s += x * x;
    return std::sqrt(s / static_cast<double>(f.size()));
}

// Central difference using the ghost value one cell beyond each edge.
ScalarField2 d_dx_ghost(const ScalarField2& f, const GhostValues& gv) {
    const int n = f.n();
    const double inv_2h = 0.5 / f.grid().spacing();
    ScalarField2 out(f.grid());
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double lo = i > 0 ? f(i - 1, j) : gv.left[j];
            const double hi = i + 1 < n ? f(i + 1, j) : gv.right[j];
            out(i, j) = (hi - lo) * inv_2h;
        }
    return out;
}

ScalarField2 d_dy_ghost(const ScalarField2& f, const GhostValues& gv) {
    const int n = f.n();
    const double inv_2h = 0.5 / f.grid().spacing();
    ScalarField2 out(f.grid());
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double lo = j > 0 ? f(i, j - 1) : gv.bottom[i];
            const double hi = j + 1 < n ? f(i, j + 1) : gv.top[i];
            out(i, j) = (hi - lo) * inv_2h;
        }
    return out;
}

}  // namespace

double regularization_scale(const ModuliPoint& q) {
    const int N = q.n();
    if (N == 1) return 1.0;
    // Coefficients of p(w + m) with m the root centroid; the w^{N-1} term vanishes.
    std::vector<cplx> c(q.coeffs.size() + 1);
    c[0] = 1.0;
    for (int k = 0; k < N; ++k) c[k + 1] = q.coeffs[k];
    const cplx m = -q.coeffs[0] / static_cast<double>(N);
    for (int pass = 0; pass < N; ++pass)
        for (int k = 1; k <= N - pass; ++k) c[k] += m * c[k - 1];
    double s = 1.0;
    for (int k = 2; k <= N; ++k) s += std::norm(c[k]);
    return static_cast<double>(N * N) * std::pow(s, static_cast<double>(N - 1) / N);
}

void check_resolution(const ModuliPoint& q, const Grid2& g) {
    if (g.spacing() > 0.15 + 1e-12) throw ConfigError("grid spacing must be at most 0.15 to resolve vortex cores");
    double rmax = 0.0;
    for (const cplx& r : polynomial_roots(q)) rmax = std::max(rmax, std::abs(r));
    if (g.half_width() < std::max(8.0, 2.0 * rmax + 6.0) - 1e-12)
        throw ConfigError("vortex roots too close to the boundary for half_width " + std::to_string(g.half_width()));
}

VortexSolution taubes_solve(const ModuliPoint& q, const Grid2& g, double newton_tol) {
    TaubesOptions opts;
    opts.newton_tol = newton_tol;
    return taubes_solve(q, g, opts);
}

VortexSolution taubes_solve(const ModuliPoint& q, const Grid2& g, const TaubesOptions& opts) {
    check_resolution(q, g);
    const HolomorphicData d = holomorphic_data(q, g);
    const GhostValues ghost = v_ghosts(q, g);

    ScalarField2 v(g);
    if (opts.warm_start) {
        require_same_grid(opts.warm_start->grid(), g, "taubes_solve warm start");
        v = *opts.warm_start;
    }

    ScalarField2 r = taubes_residual(v, d, ghost);
    double rnorm = rms(r);
    double update = 0.0;
    int it = 0;
    for (; it < opts.max_newton; ++it) {
        ScalarField2 V(g);
        for (std::size_t k = 0; k < V.size(); ++k) V[k] = d.e0[k] * std::exp(v[k]);
        const double cg_tol = std::clamp(max_abs(r), 1e-13, 1e-3);
        const ScalarField2 delta = solve_screened_poisson(V, r, cg_tol);

        double alpha = 1.0;
        bool accepted = false;
        for (int bt = 0; bt <= 8; ++bt, alpha *= 0.5) {
            ScalarField2 trial = v;
            for (std::size_t k = 0; k < trial.size(); ++k) trial[k] += alpha * delta[k];
            ScalarField2 rt = taubes_residual(trial, d, ghost);
            const double tn = rms(rt);
            if (std::isfinite(tn) && (tn < rnorm || tn < 1e-14)) {
                v = std::move(trial);
                r = std::move(rt);
                rnorm = tn;
                accepted = true;
                break;
            }
        }
        update = alpha * max_abs(delta);
        if (!accepted) {
            // A full step that cannot reduce a round-off level residual means we are done.
            if (max_abs(delta) <= opts.newton_tol) {
                update = max_abs(delta);
                ++it;
                break;
            }
            throw SolverError("Newton line search failed in taubes_solve", rnorm);
        }
        if (update <= opts.newton_tol) {
            ++it;
            break;
        }
    }
    if (update > opts.newton_tol) throw SolverError("Newton iteration did not converge in taubes_solve", update);
    require_finite(v, "taubes_solve");

    VortexSolution s{q, g, ComplexField2(g), ScalarField2(g), ScalarField2(g), v, it, update};
    const ScalarField2 dv1 = d_dx_ghost(v, ghost);
    const ScalarField2 dv2 = d_dy_ghost(v, ghost);
    for (std::size_t k = 0; k < v.size(); ++k) {
        s.phi[k] = std::exp(0.5 * v[k]) * d.unit[k];
        s.a1[k] = 0.5 * (dv2[k] - d.dlog2[k]);
        s.a2[k] = -0.5 * (dv1[k] - d.dlog1[k]);
    }
    return s;
}

double l2_inner(const FieldTriple& a, const FieldTriple& b) {
    return l2_inner(a.phi, b.phi) + l2_inner(a.a1, b.a1) + l2_inner(a.a2, b.a2);
}

double l2_norm(const FieldTriple& a) { return std::sqrt(l2_inner(a, a)); }

ScalarField2 field_strength(const ScalarField2& a1, const ScalarField2& a2) {
    ScalarField2 f = d_dx(a2);
    f -= d_dy(a1);
    return f;
}

std::pair<ScalarField2, ScalarField2> maxwell_term(const ScalarField2& a1, const ScalarField2& a2) {
    const ScalarField2 f = field_strength(a1, a2);
    ScalarField2 m1 = d_dy(f);
    m1 *= -1.0;
    return {std::move(m1), d_dx(f)};
}

ComplexField2 covariant_dx(const ComplexField2& phi, const ScalarField2& a1) {
    ComplexField2 out = d_dx(phi);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] -= cplx(0.0, a1[k]) * phi[k];
    return out;
}

ComplexField2 covariant_dy(const ComplexField2& phi, const ScalarField2& a2) {
    ComplexField2 out = d_dy(phi);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] -= cplx(0.0, a2[k]) * phi[k];
    return out;
}

ComplexField2 covariant_laplacian(const ComplexField2& phi, const ScalarField2& a1, const ScalarField2& a2) {
    const ComplexField2 d1 = covariant_dx(phi, a1), d2 = covariant_dy(phi, a2);
    ComplexField2 out = covariant_dx(d1, a1);
    out += covariant_dy(d2, a2);
    return out;
}

BogomolnyResidual bogomolny_residual(const ComplexField2& phi, const ScalarField2& a1, const ScalarField2& a2) {
    require_same_grid(phi.grid(), a1.grid(), "bogomolny_residual");
    require_same_grid(phi.grid(), a2.grid(), "bogomolny_residual");
    const ComplexField2 d1 = covariant_dx(phi, a1);
    const ComplexField2 d2 = covariant_dy(phi, a2);
    const ScalarField2 f12 = field_strength(a1, a2);
    ComplexField2 dbar(phi.grid());
    ScalarField2 curv(phi.grid());
    for (std::size_t k = 0; k < dbar.size(); ++k) {
        dbar[k] = d1[k] + cplx(0.0, 1.0) * d2[k];
        curv[k] = f12[k] + 0.5 * (std::norm(phi[k]) - 1.0);
    }
    return {l2_norm(dbar), l2_norm(curv)};
}

BogomolnyResidual bogomolny_residual(const VortexSolution& s) { return bogomolny_residual(s.phi, s.a1, s.a2); }

EnergyVorticity energy_and_vorticity(const ComplexField2& phi, const ScalarField2& a1, const ScalarField2& a2) {
    require_same_grid(phi.grid(), a1.grid(), "energy_and_vorticity");
    require_same_grid(phi.grid(), a2.grid(), "energy_and_vorticity");
    const Grid2& g = phi.grid();
    const ComplexField2 d1 = covariant_dx(phi, a1);
    const ComplexField2 d2 = covariant_dy(phi, a2);
    const ScalarField2 f12 = field_strength(a1, a2);
    ScalarField2 e(g), j1(g), j2(g);
    for (std::size_t k = 0; k < e.size(); ++k) {
        const double m = std::norm(phi[k]) - 1.0;
        e[k] = 0.5 * (std::norm(d1[k]) + std::norm(d2[k])) + 0.5 * f12[k] * f12[k] + 0.125 * m * m;
        const cplx iphi = cplx(0.0, 1.0) * phi[k];
        j1[k] = pair(iphi, d1[k]);
        j2[k] = pair(iphi, d2[k]);
    }
    ScalarField2 w = d_dx(j2);
    w -= d_dy(j1);
    w += f12;
    w *= 0.5;
    return {integrate(e), integrate(w)};
}

EnergyVorticity energy_and_vorticity(const VortexSolution& s) { return energy_and_vorticity(s.phi, s.a1, s.a2); }

FieldTriple moduli_derivative(const ModuliPoint& q, int mu, double step, const Grid2& g,
                              const VortexSolution* base, double newton_tol) {
    if (mu < 0 || mu >= q.dim()) throw ConfigError("moduli index out of range");
    if (!(step > 0.0)) throw ConfigError("finite-difference step must be positive");
    TaubesOptions opts;
    opts.newton_tol = newton_tol;
    if (base) {
        require_same_grid(base->grid, g, "moduli_derivative");
        opts.warm_start = &base->v;
    }
    const VortexSolution plus = taubes_solve(q.displaced(mu, step), g, opts);
    const VortexSolution minus = taubes_solve(q.displaced(mu, -step), g, opts);
    FieldTriple out(g);
    const double inv = 0.5 / step;
    for (std::size_t k = 0; k < out.phi.size(); ++k) {
        out.phi[k] = (plus.phi[k] - minus.phi[k]) * inv;
        out.a1[k] = (plus.a1[k] - minus.a1[k]) * inv;
        out.a2[k] = (plus.a2[k] - minus.a2[k]) * inv;
    }
    return out;
}

double decay_rate(const VortexSolution& s, double r0, double r1) {
    const Grid2& g = s.grid;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (int j = 0; j < g.n(); ++j)
        for (int i = 0; i < g.n(); ++i) {
            const double r = std::hypot(g.x(i), g.y(j));
            if (r < r0 || r > r1) continue;
            const double gap = 1.0 - std::abs(s.phi(i, j));
            if (gap <= 0.0) continue;
            const double y = std::log(gap);
            sx += r;
            sy += y;
            sxx += r * r;
            sxy += r * y;
            ++count;
        }
    if (count < 2) throw PreconditionError("decay fit annulus contains too few nodes");
    return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

double coulomb_residual(const VortexSolution& s) { return l2_norm(divergence(s.a1, s.a2)); }

}  // namespace ahm
