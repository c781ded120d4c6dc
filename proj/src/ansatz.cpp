#include "ahm/ansatz.hpp"

#include <cmath>

namespace ahm {

namespace {

const cplx I(0.0, 1.0);

template <class T>
Field2<T> first_diff(const Field2<T>& plus, const Field2<T>& minus, double h) {
    Field2<T> out(plus.grid());
    const double s = 0.5 / h;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = (plus[k] - minus[k]) * s;
    return out;
}

template <class T>
Field2<T> second_diff(const Field2<T>& plus, const Field2<T>& mid, const Field2<T>& minus, double h) {
    Field2<T> out(plus.grid());
    const double s = 1.0 / (h * h);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = (plus[k] - 2.0 * mid[k] + minus[k]) * s;
    return out;
}

template <class T>
Field2<T> mixed_diff(const Field2<T>& pp, const Field2<T>& pm, const Field2<T>& mp, const Field2<T>& mm, double h3,
                     double h0) {
    Field2<T> out(pp.grid());
    const double s = 0.25 / (h3 * h0);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = (pp[k] - pm[k] - mp[k] + mm[k]) * s;
    return out;
}

// Slice fields with spacings and a scale on the transverse gauge components.
struct View {
    const SliceStencil& st;
    double h3, h0, scale;

    const ComplexField2& phi(int i, int j) const { return st.at(i, j).sol.phi; }
    const ScalarField2& a1(int i, int j) const { return st.at(i, j).sol.a1; }
    const ScalarField2& a2(int i, int j) const { return st.at(i, j).sol.a2; }
    ScalarField2 a3(int i, int j) const {
        ScalarField2 f = st.at(i, j).a3;
        f *= scale;
        return f;
    }
    ScalarField2 a0(int i, int j) const {
        ScalarField2 f = st.at(i, j).a0;
        f *= scale;
        return f;
    }
};

// S = P + T where P holds the slice operator and first-order transverse terms
// and T the second-order transverse terms. In rescaled variables P = S⁰ and T = S¹.
struct Pieces {
    SFields p, t;
    bool corners;
};

Pieces pieces(const View& v, int i, int j, double kappa0, double c1) {
    const Grid2& g = v.st.grid();
    Pieces out{SFields(g), SFields(g), v.st.has(i + 1, j + 1) && v.st.has(i + 1, j - 1) && v.st.has(i - 1, j + 1) &&
                                           v.st.has(i - 1, j - 1)};
    const ComplexField2& Phi = v.phi(i, j);
    const ScalarField2& A1 = v.a1(i, j);
    const ScalarField2& A2 = v.a2(i, j);
    const ScalarField2 A3 = v.a3(i, j), A0 = v.a0(i, j);
    const ScalarField2 A3p = v.a3(i + 1, j), A3m = v.a3(i - 1, j), A0p = v.a0(i, j + 1), A0m = v.a0(i, j - 1);

    const ComplexField2 phi3 = first_diff(v.phi(i + 1, j), v.phi(i - 1, j), v.h3);
    const ComplexField2 phi33 = second_diff(v.phi(i + 1, j), Phi, v.phi(i - 1, j), v.h3);
    const ComplexField2 phi0 = first_diff(v.phi(i, j + 1), v.phi(i, j - 1), v.h0);
    const ComplexField2 phi00 = second_diff(v.phi(i, j + 1), Phi, v.phi(i, j - 1), v.h0);
    const ScalarField2 a1_3 = first_diff(v.a1(i + 1, j), v.a1(i - 1, j), v.h3);
    const ScalarField2 a2_3 = first_diff(v.a2(i + 1, j), v.a2(i - 1, j), v.h3);
    const ScalarField2 a1_0 = first_diff(v.a1(i, j + 1), v.a1(i, j - 1), v.h0);
    const ScalarField2 a2_0 = first_diff(v.a2(i, j + 1), v.a2(i, j - 1), v.h0);
    const ScalarField2 a1_33 = second_diff(v.a1(i + 1, j), A1, v.a1(i - 1, j), v.h3);
    const ScalarField2 a2_33 = second_diff(v.a2(i + 1, j), A2, v.a2(i - 1, j), v.h3);
    const ScalarField2 a1_00 = second_diff(v.a1(i, j + 1), A1, v.a1(i, j - 1), v.h0);
    const ScalarField2 a2_00 = second_diff(v.a2(i, j + 1), A2, v.a2(i, j - 1), v.h0);
    const ScalarField2 a3_3 = first_diff(A3p, A3m, v.h3);
    const ScalarField2 a0_0 = first_diff(A0p, A0m, v.h0);
    const ScalarField2 a3_0 = first_diff(v.a3(i, j + 1), v.a3(i, j - 1), v.h0);
    const ScalarField2 a0_3 = first_diff(v.a0(i + 1, j), v.a0(i - 1, j), v.h3);
    const ScalarField2 a3_00 = second_diff(v.a3(i, j + 1), A3, v.a3(i, j - 1), v.h0);
    const ScalarField2 a0_33 = second_diff(v.a0(i + 1, j), A0, v.a0(i - 1, j), v.h3);

    // Slice operators.
    const ComplexField2 DD = covariant_laplacian(Phi, A1, A2);
    const ComplexField2 p1 = d_dx(Phi), p2 = d_dy(Phi);
    const ScalarField2 divA = divergence(A1, A2);
    const ScalarField2 div_3 = divergence(a1_3, a2_3), div_0 = divergence(a1_0, a2_0);
    const auto [m1, m2] = maxwell_term(A1, A2);
    const ScalarField2 lapA3 = laplacian(A3), lapA0 = laplacian(A0);
    const ScalarField2 a0_0x = d_dx(a0_0), a0_0y = d_dy(a0_0), a3_3x = d_dx(a3_3), a3_3y = d_dy(a3_3);
    const ScalarField2 a0x = d_dx(A0), a0y = d_dy(A0);

    for (std::size_t k = 0; k < Phi.size(); ++k) {
        const cplx f = Phi[k];
        const double b1 = A1[k], b2 = A2[k], b3 = A3[k], b0 = A0[k];
        const cplx D1 = p1[k] - I * b1 * f, D2 = p2[k] - I * b2 * f;
        const cplx D3 = phi3[k] - I * b3 * f, D0 = phi0[k] - I * b0 * f;
        const cplx D33 = phi33[k] - I * a3_3[k] * f - 2.0 * I * b3 * phi3[k] - b3 * b3 * f;
        const cplx D00 = phi00[k] - I * a0_0[k] * f - 2.0 * I * b0 * phi0[k] - b0 * b0 * f;

        out.p.phi[k] = -DD[k] + 0.5 * (std::norm(f) - 1.0) * f;
        out.t.phi[k] = kappa0 * D00 + c1 * D0 - D33;

        out.p.a1[k] = -m1[k] - pair(I * f, D1);
        out.p.a2[k] = -m2[k] - pair(I * f, D2);
        const double F01 = a1_0[k] - a0x[k], F02 = a2_0[k] - a0y[k];
        const double dF01 = a1_00[k] - a0_0x[k], dF02 = a2_00[k] - a0_0y[k];
        const double dF31 = a1_33[k] - a3_3x[k], dF32 = a2_33[k] - a3_3y[k];
        out.t.a1[k] = kappa0 * dF01 + c1 * F01 - dF31;
        out.t.a2[k] = kappa0 * dF02 + c1 * F02 - dF32;

        out.p.a3[k] = -(lapA3[k] - div_3[k]) - pair(I * f, D3);
        out.p.a0[k] = -(lapA0[k] - div_0[k]) - pair(I * f, D0);
    }

    if (out.corners) {
        const ScalarField2 a0_30 = mixed_diff(v.a0(i + 1, j + 1), v.a0(i + 1, j - 1), v.a0(i - 1, j + 1),
                                              v.a0(i - 1, j - 1), v.h3, v.h0);
        const ScalarField2 a3_30 = mixed_diff(v.a3(i + 1, j + 1), v.a3(i + 1, j - 1), v.a3(i - 1, j + 1),
                                              v.a3(i - 1, j - 1), v.h3, v.h0);
        for (std::size_t k = 0; k < Phi.size(); ++k) {
            const double F03 = a3_0[k] - a0_3[k];
            out.t.a3[k] = kappa0 * (a3_00[k] - a0_30[k]) + c1 * F03;
            out.t.a0[k] = -(a0_33[k] - a3_30[k]);
        }
    }
    return out;
}

ComponentNorms norms(const ComplexField2& f) { return {l2_norm(f), weighted_sup_norm(f, 0.5)}; }
ComponentNorms norms(const ScalarField2& f) { return {l2_norm(f), weighted_sup_norm(f, 0.5)}; }

double u_norm(const SFields& s) {
    return std::sqrt(l2_inner(s.phi, s.phi) + l2_inner(s.a1, s.a1) + l2_inner(s.a2, s.a2));
}

double all_norm(const SFields& s) {
    const double u = u_norm(s);
    return std::sqrt(u * u + l2_inner(s.a3, s.a3) + l2_inner(s.a0, s.a0));
}

SFields combine(const SFields& a, double ca, const SFields& b, double cb) {
    SFields out(a.phi.grid());
    for (std::size_t k = 0; k < out.phi.size(); ++k) {
        out.phi[k] = ca * a.phi[k] + cb * b.phi[k];
        out.a1[k] = ca * a.a1[k] + cb * b.a1[k];
        out.a2[k] = ca * a.a2[k] + cb * b.a2[k];
        out.a3[k] = ca * a.a3[k] + cb * b.a3[k];
        out.a0[k] = ca * a.a0[k] + cb * b.a0[k];
    }
    return out;
}

double gauge_relative(const SFields& s, const ComplexField2& Phi) {
    const ScalarField2 div = divergence(s.a1, s.a2);
    ScalarField2 rot(Phi.grid()), r(Phi.grid());
    for (std::size_t k = 0; k < r.size(); ++k) {
        rot[k] = pair(I * Phi[k], s.phi[k]);
        r[k] = div[k] - rot[k];
    }
    const double scale = l2_norm(div) + l2_norm(rot);
    return scale > 0.0 ? l2_norm(r) / scale : 0.0;
}

}  // namespace

FilamentSource trajectory_source(const Trajectory& tr, const MetricModel& model) {
    if (tr.snapshots.empty()) throw ConfigError("empty trajectory");
    const EvolutionParams params = tr.params;
    const double dt_snap = tr.snapshots.size() > 1
                               ? tr.snapshots[1].time(params.dt) - tr.snapshots[0].time(params.dt)
                               : params.dt;
    const double t_first = tr.snapshots.front().time(params.dt);
    return [&tr, &model, params, dt_snap, t_first](double y3, double y0) {
        const int m = params.nodes();
        const double fj = (y3 - params.x_min) / params.dx;
        const long j = std::lround(fj);
        const double fk = (y0 - t_first) / dt_snap;
        const long k = std::lround(fk);
        if (std::abs(fj - j) > 1e-6 || std::abs(fk - k) > 1e-6 || k < 0 ||
            k >= static_cast<long>(tr.snapshots.size()))
            throw RangeError("trajectory has no sample at the requested (x3, t)");
        int jl, jr;
        if (params.domain == Domain::Torus) {
            jl = static_cast<int>(((j - 1) % m + m) % m);
            jr = static_cast<int>((j + 1) % m);
        } else {
            if (j < 1 || j + 1 >= m) throw RangeError("x3 sample too close to a clamped end");
            jl = static_cast<int>(j - 1);
            jr = static_cast<int>(j + 1);
        }
        const EvolutionState& s = tr.snapshots[k];
        const Eigen::VectorXd x = s.q.col(j);
        const Eigen::VectorXd d3 = (s.q.col(jr) - s.q.col(jl)) / (2.0 * params.dx);
        const Eigen::MatrixXd vel = velocity(s, params, model);
        FilamentSample out;
        out.q = ModuliPoint::from_real(model.to_raw(x));
        out.dq3 = model.to_raw_tangent(x, d3);
        out.dq0 = model.to_raw_tangent(x, vel.col(j));
        return out;
    };
}

AnsatzSlice make_slice(const FilamentSample& s, double y3, double y0, const Grid2& grid, const ModuliOptions& opts) {
    if (static_cast<int>(s.dq3.size()) != s.q.dim() || static_cast<int>(s.dq0.size()) != s.q.dim())
        throw ConfigError("filament derivatives have the wrong dimension");
    VortexSolution sol = taubes_solve(s.q, grid, opts.newton_tol);
    const auto chi = [&](const std::vector<double>& v) {
        bool zero = true;
        for (double x : v) zero = zero && x == 0.0;
        if (zero) return ScalarField2(grid);
        return solve_chi_along(sol, directional_derivative(sol, v, opts.fd_step, opts.newton_tol), v, opts.chi_tol);
    };
    ScalarField2 a3 = chi(s.dq3);
    ScalarField2 a0 = chi(s.dq0);
    return {y3, y0, s, std::move(sol), std::move(a3), std::move(a0)};
}

std::vector<AnsatzSlice> assemble_u0(const FilamentSource& source, const std::vector<double>& y3, double y0,
                                     const Grid2& grid, const ModuliOptions& opts) {
    std::vector<AnsatzSlice> out;
    for (double y : y3) out.push_back(make_slice(source(y, y0), y, y0, grid, opts));
    return out;
}

SliceStencil::SliceStencil(const FilamentSource& source, double y3, double y0, double h3, double h0,
                           StencilShape shape, const Grid2& grid, const ModuliOptions& opts)
    : h3_(h3), h0_(h0), grid_(grid) {
    if (!(h3 > 0.0) || !(h0 > 0.0)) throw ConfigError("stencil spacings must be positive");
    std::vector<std::pair<int, int>> offsets;
    const auto box = [&](int ci, int cj) {
        for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) offsets.emplace_back(ci + di, cj + dj);
    };
    switch (shape) {
        case StencilShape::Plus:
            offsets = {{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}};
            break;
        case StencilShape::Box:
            box(0, 0);
            break;
        case StencilShape::Wide:
            box(0, 0);
            box(1, 0);
            box(-1, 0);
            box(0, 1);
            box(0, -1);
            break;
    }
    for (const auto& [i, j] : offsets) {
        if (slices_.count({i, j})) continue;
        const double a = y3 + i * h3, b = y0 + j * h0;
        slices_.emplace(std::make_pair(i, j), make_slice(source(a, b), a, b, grid, opts));
    }
}

const AnsatzSlice& SliceStencil::at(int i, int j) const {
    const auto it = slices_.find({i, j});
    if (it == slices_.end()) throw RangeError("slice stencil lacks offset (" + std::to_string(i) + ", " +
                                              std::to_string(j) + ")");
    return it->second;
}

ResidualReport report_of(const SFields& s) {
    ResidualReport r;
    r.phi = norms(s.phi);
    r.a = {std::sqrt(l2_inner(s.a1, s.a1) + l2_inner(s.a2, s.a2)),
           std::max(weighted_sup_norm(s.a1, 0.5), weighted_sup_norm(s.a2, 0.5))};
    r.a3 = norms(s.a3);
    r.a0 = norms(s.a0);
    r.u_l2 = u_norm(s);
    return r;
}

SFields s0_fields(const SliceStencil& st, int i, int j) {
    return pieces(View{st, st.h3(), st.h0(), 1.0}, i, j, 0.0, 0.0).p;
}

SFields s1_fields(const SliceStencil& st, double kappa0, double kappa1, int i, int j) {
    return pieces(View{st, st.h3(), st.h0(), 1.0}, i, j, kappa0, kappa1).t;
}

SFields s_unscaled(const SliceStencil& st, double kappa0, double kappa1, double eps, int i, int j) {
    if (!(eps > 0.0)) throw ConfigError("epsilon must be positive");
    const Pieces pc = pieces(View{st, st.h3() / eps, st.h0() / eps, eps}, i, j, kappa0, eps * kappa1);
    if (!pc.corners) throw RangeError("the full operator needs the stencil corners");
    return combine(pc.p, 1.0, pc.t, 1.0);
}

ResidualReport residual_s0(const SliceStencil& st) {
    const SFields s = s0_fields(st);
    ResidualReport r = report_of(s);
    r.gauge_relative = gauge_relative(s, st.at(0, 0).sol.phi);
    return r;
}

ResidualReport residual_s1(const SliceStencil& st, double kappa0, double kappa1, const ModuliOptions& opts) {
    const SFields s = s1_fields(st, kappa0, kappa1);
    ResidualReport r = report_of(s);
    r.gauge_relative = gauge_relative(s, st.at(0, 0).sol.phi);
    const VortexSolution& sol = st.at(0, 0).sol;
    const FieldTriple su(s.phi, s.a1, s.a2);
    const double su_norm = l2_norm(su);
    for (int mu = 0; mu < sol.q.dim(); ++mu) {
        const FieldTriple d = moduli_derivative(sol.q, mu, opts.fd_step, sol.grid, &sol, opts.newton_tol);
        const ZeroMode zm = make_zero_mode(sol, d, mu, opts.chi_tol);
        const double denom = su_norm * l2_norm(zm.n);
        const double p = denom > 0.0 ? std::abs(l2_inner(su, zm.n)) / denom : 0.0;
        r.projections.push_back(p);
        r.max_projection = std::max(r.max_projection, p);
    }
    return r;
}

ScalingReport epsilon_scaling(const SliceStencil& st, double kappa0, double kappa1, const std::vector<double>& eps) {
    if (eps.size() < 2) throw ConfigError("epsilon scaling needs at least two values");
    const Pieces y = pieces(View{st, st.h3(), st.h0(), 1.0}, 0, 0, kappa0, kappa1);
    if (!y.corners) throw RangeError("epsilon scaling needs the stencil corners");
    ScalingReport rep;
    rep.eps = eps;
    for (double e : eps) {
        const SFields s = s_unscaled(st, kappa0, kappa1, e);
        rep.u_norm.push_back(u_norm(s));
        const SFields excess = combine(s, 1.0, y.p, -1.0);
        rep.u_excess.push_back(u_norm(excess));
        // Predicted split: u parts P + ε²T, transverse parts ε(P + ε²T).
        SFields pred = combine(y.p, 1.0, y.t, e * e);
        pred.a3 *= e;
        pred.a0 *= e;
        const double denom = all_norm(s);
        rep.split_error.push_back(denom > 0.0 ? all_norm(combine(s, 1.0, pred, -1.0)) / denom : 0.0);
    }
    for (std::size_t k = 1; k < eps.size(); ++k) rep.ratios.push_back(rep.u_excess[k - 1] / rep.u_excess[k]);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(eps.size());
    for (std::size_t k = 0; k < eps.size(); ++k) {
        const double x = std::log(eps[k]), yv = std::log(rep.u_excess[k]);
        sx += x;
        sy += yv;
        sxx += x * x;
        sxy += x * yv;
    }
    rep.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return rep;
}

IdentityReport conservation_identity(const SliceStencil& st, double kappa0, double kappa1, double eps) {
    const SFields c = s_unscaled(st, kappa0, kappa1, eps, 0, 0);
    const SFields xp = s_unscaled(st, kappa0, kappa1, eps, 1, 0);
    const SFields xm = s_unscaled(st, kappa0, kappa1, eps, -1, 0);
    const SFields tp = s_unscaled(st, kappa0, kappa1, eps, 0, 1);
    const SFields tm = s_unscaled(st, kappa0, kappa1, eps, 0, -1);
    const double hx = st.h3() / eps, ht = st.h0() / eps;
    const ComplexField2& Phi = st.at(0, 0).sol.phi;
    const ScalarField2 s0_t = first_diff(tp.a0, tm.a0, ht);
    const ScalarField2 s3_3 = first_diff(xp.a3, xm.a3, hx);
    const ScalarField2 div = divergence(c.a1, c.a2);
    const Grid2& g = Phi.grid();
    ScalarField2 rot(g), time(g), space(g), comb(g);
    for (std::size_t k = 0; k < comb.size(); ++k) {
        rot[k] = pair(c.phi[k], I * Phi[k]);
        time[k] = kappa0 * s0_t[k] + eps * kappa1 * c.a0[k];
        space[k] = div[k] + s3_3[k];
        comb[k] = rot[k] + time[k] - space[k];
    }
    IdentityReport r;
    r.combination = l2_norm(comb);
    r.scale = l2_norm(rot) + l2_norm(time) + l2_norm(space);
    r.relative = r.scale > 0.0 ? r.combination / r.scale : 0.0;
    return r;
}

}  // namespace ahm
