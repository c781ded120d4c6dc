#include "ahm/dynamics2d.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

namespace ahm {

namespace {

const cplx I(0.0, 1.0);

bool frozen(const Grid2& g, int i, int j) {
    const int n = g.n();
    return i < kFrozenRing || j < kFrozenRing || i >= n - kFrozenRing || j >= n - kFrozenRing;
}

template <class T>
void masked_axpy(Field2<T>& y, double a, const Field2<T>& x) {
    const Grid2& g = y.grid();
    for (int j = 0; j < g.n(); ++j)
        for (int i = 0; i < g.n(); ++i)
            if (!frozen(g, i, j)) y(i, j) += a * x(i, j);
}

void check_finite(const GaugeState2D& s) {
    for (std::size_t k = 0; k < s.phi.size(); ++k) {
        if (!std::isfinite(s.phi[k].real()) || !std::isfinite(s.phi[k].imag()) || !std::isfinite(s.a1[k]) ||
            !std::isfinite(s.a2[k]))
            throw EvolutionError("non-finite field in the 2d dynamics", static_cast<int>(k), s.t);
    }
}

double wrap(double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a <= -M_PI) a += 2.0 * M_PI;
    return a;
}

}  // namespace

GaugeState2D init_from_moduli(const ModuliPoint& q, const std::vector<double>& v, const Grid2& grid, double lambda,
                              const ModuliOptions& opts) {
    if (static_cast<int>(v.size()) != q.dim()) throw ConfigError("velocity has the wrong dimension");
    GaugeState2D s(grid);
    s.lambda = lambda;
    const bool moving = std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; });
    if (!moving) {
        const VortexSolution sol = taubes_solve(q, grid, opts.newton_tol);
        s.phi = sol.phi;
        s.a1 = sol.a1;
        s.a2 = sol.a2;
        return s;
    }
    const PointAnalysis pa = analyze_point(q, grid, opts);
    s.phi = pa.sol.phi;
    s.a1 = pa.sol.a1;
    s.a2 = pa.sol.a2;
    for (std::size_t mu = 0; mu < v.size(); ++mu) {
        const FieldTriple& n = pa.modes[mu].n;
        for (std::size_t k = 0; k < s.pi.size(); ++k) {
            s.pi[k] += v[mu] * n.phi[k];
            s.e1[k] += v[mu] * n.a1[k];
            s.e2[k] += v[mu] * n.a2[k];
        }
    }
    return s;
}

FieldTriple forces(const GaugeState2D& s) {
    const Grid2& g = s.grid();
    const ComplexField2 dd = covariant_laplacian(s.phi, s.a1, s.a2);
    const ComplexField2 p1 = d_dx(s.phi), p2 = d_dy(s.phi);
    const auto [m1, m2] = maxwell_term(s.a1, s.a2);
    FieldTriple f(g);
    for (std::size_t k = 0; k < f.phi.size(); ++k) {
        const cplx u = s.phi[k];
        const double b1 = s.a1[k], b2 = s.a2[k];
        f.phi[k] = dd[k] - 0.5 * s.lambda * (std::norm(u) - 1.0) * u;
        f.a1[k] = m1[k] + pair(I * u, p1[k] - I * b1 * u);
        f.a2[k] = m2[k] + pair(I * u, p2[k] - I * b2 * u);
    }
    return f;
}

GaugeState2D step_hyperbolic(const GaugeState2D& s, double dt) {
    if (!s.hyperbolic) throw PreconditionError("step_hyperbolic needs a state with momenta");
    if (!(dt > 0.0) || dt > 0.5 * s.grid().spacing()) throw ConfigError("hyperbolic step needs 0 < dt <= 0.5 h");
    GaugeState2D out = s;
    const FieldTriple f0 = forces(s);
    masked_axpy(out.pi, 0.5 * dt, f0.phi);
    masked_axpy(out.e1, 0.5 * dt, f0.a1);
    masked_axpy(out.e2, 0.5 * dt, f0.a2);
    masked_axpy(out.phi, dt, out.pi);
    masked_axpy(out.a1, dt, out.e1);
    masked_axpy(out.a2, dt, out.e2);
    const FieldTriple f1 = forces(out);
    masked_axpy(out.pi, 0.5 * dt, f1.phi);
    masked_axpy(out.e1, 0.5 * dt, f1.a1);
    masked_axpy(out.e2, 0.5 * dt, f1.a2);
    ++out.step;
    out.t = s.t + dt;
    check_finite(out);
    return out;
}

GaugeState2D step_parabolic(const GaugeState2D& s, double dt) {
    const double h = s.grid().spacing();
    if (!(dt > 0.0) || dt > 0.2 * h * h) throw ConfigError("parabolic step needs 0 < dt <= 0.2 h^2");
    GaugeState2D out = s;
    const FieldTriple f = forces(s);
    masked_axpy(out.phi, dt, f.phi);
    masked_axpy(out.a1, dt, f.a1);
    masked_axpy(out.a2, dt, f.a2);
    ++out.step;
    out.t = s.t + dt;
    check_finite(out);
    return out;
}

Energy2D energy(const GaugeState2D& s) {
    const Grid2& g = s.grid();
    const ComplexField2 d1 = covariant_dx(s.phi, s.a1), d2 = covariant_dy(s.phi, s.a2);
    const ScalarField2 f12 = field_strength(s.a1, s.a2);
    ScalarField2 kin(g), pot(g);
    for (std::size_t k = 0; k < kin.size(); ++k) {
        const double m = std::norm(s.phi[k]) - 1.0;
        pot[k] = 0.5 * (std::norm(d1[k]) + std::norm(d2[k]) + f12[k] * f12[k]) + 0.125 * s.lambda * m * m;
        if (s.hyperbolic) kin[k] = 0.5 * (std::norm(s.pi[k]) + s.e1[k] * s.e1[k] + s.e2[k] * s.e2[k]);
    }
    Energy2D e;
    e.kinetic = integrate(kin);
    e.potential = integrate(pot);
    e.total = e.kinetic + e.potential;
    return e;
}

double gauss_residual(const GaugeState2D& s, int margin) {
    const ScalarField2 div = divergence(s.e1, s.e2);
    const Grid2& g = s.grid();
    const int n = g.n();
    double sum = 0.0;
    for (int j = margin; j < n - margin; ++j)
        for (int i = margin; i < n - margin; ++i) {
            const double r = div(i, j) - pair(I * s.phi(i, j), s.pi(i, j));
            sum += r * r;
        }
    return std::sqrt(sum * g.cell_area());
}

ZeroSet track_zeros(const ComplexField2& phi) {
    const Grid2& g = phi.grid();
    const int n = g.n();
    const double h = g.spacing();
    const cplx shift(1e-10, 1e-10);
    ZeroSet out;
    for (int j = 0; j + 1 < n; ++j) {
        for (int i = 0; i + 1 < n; ++i) {
            const cplx c[4] = {phi(i, j) + shift, phi(i + 1, j) + shift, phi(i + 1, j + 1) + shift,
                               phi(i, j + 1) + shift};
            double turn = 0.0;
            for (int k = 0; k < 4; ++k) turn += wrap(std::arg(c[(k + 1) % 4]) - std::arg(c[k]));
            const int w = static_cast<int>(std::lround(turn / (2.0 * M_PI)));
            if (w == 0) continue;
            // Newton on the bilinear interpolant f(s, t) = 0.
            double a = 0.5, b = 0.5;
            for (int it = 0; it < 30; ++it) {
                const cplx f = (1 - a) * (1 - b) * c[0] + a * (1 - b) * c[1] + a * b * c[2] + (1 - a) * b * c[3];
                const cplx fa = (1 - b) * (c[1] - c[0]) + b * (c[2] - c[3]);
                const cplx fb = (1 - a) * (c[3] - c[0]) + a * (c[2] - c[1]);
                const double det = fa.real() * fb.imag() - fb.real() * fa.imag();
                if (std::abs(det) < 1e-300) break;
                const double da = (f.real() * fb.imag() - fb.real() * f.imag()) / det;
                const double db = (fa.real() * f.imag() - f.real() * fa.imag()) / det;
                a -= da;
                b -= db;
                if (std::abs(da) + std::abs(db) < 1e-14) break;
            }
            if (!std::isfinite(a) || !std::isfinite(b)) a = b = 0.5;
            a = std::clamp(a, 0.0, 1.0);
            b = std::clamp(b, 0.0, 1.0);
            out.push_back({g.x(i) + a * h, g.y(j) + b * h, w});
        }
    }
    return out;
}

double zero_deviation(const ZeroSet& zeros, const std::vector<cplx>& roots) {
    std::vector<cplx> pts;
    for (const Zero& z : zeros)
        for (int k = 0; k < std::abs(z.sign); ++k) pts.emplace_back(z.x, z.y);
    if (pts.size() != roots.size()) return std::numeric_limits<double>::infinity();
    std::vector<int> perm(roots.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double worst = 0.0;
        for (std::size_t k = 0; k < pts.size(); ++k) worst = std::max(worst, std::abs(pts[k] - roots[perm[k]]));
        best = std::min(best, worst);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

void write_zero_track_csv(const ZeroTrack& track, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << "t,k,x,y,sign\n" << std::setprecision(17);
    for (std::size_t s = 0; s < track.t.size(); ++s)
        for (std::size_t k = 0; k < track.zeros[s].size(); ++k) {
            const Zero& z = track.zeros[s][k];
            out << track.t[s] << "," << k << "," << z.x << "," << z.y << "," << z.sign << "\n";
        }
}

RunRecord simulate(const GaugeState2D& s0, double T, double dt, int sample_every) {
    if (!(T >= 0.0) || sample_every < 1) throw ConfigError("simulate needs T >= 0 and sample_every >= 1");
    const long steps = static_cast<long>(std::floor(T / dt + 1e-9));
    RunRecord rec{{}, {}, {}, s0};
    GaugeState2D& s = rec.final_state;
    for (long k = 0;; ++k) {
        if (k % sample_every == 0 || k == steps) {
            rec.track.t.push_back(s.t);
            rec.track.zeros.push_back(track_zeros(s.phi));
            rec.energy.push_back(energy(s).total);
            if (s.hyperbolic) rec.gauss.push_back(gauss_residual(s));
        }
        if (k == steps) break;
        s = s.hyperbolic ? step_hyperbolic(s, dt) : step_parabolic(s, dt);
    }
    return rec;
}

double energy_drift(const RunRecord& r) {
    double d = 0.0;
    for (double e : r.energy) d = std::max(d, std::abs(e - r.energy.front()) / std::abs(r.energy.front()));
    return d;
}

AdiabaticReport adiabatic_compare(const ModuliPoint& q0, const std::vector<double>& v, double T, const Grid2& grid,
                                  const MetricModel& model, const AdiabaticOptions& opts) {
    if (!(T > 0.0)) throw ConfigError("adiabatic_compare needs T > 0");
    const std::vector<double> raw = q0.real_coords();
    const auto path = geodesic_ode(model.from_raw(raw), model.from_raw_tangent(raw, v), T, model, opts.iota, 1e-3);
    const double h = path.back().t / static_cast<double>(path.size() - 1);

    AdiabaticReport rep{simulate(init_from_moduli(q0, v, grid, opts.lambda, opts.moduli), T, opts.dt, opts.sample_every),
                        {}, {}, 0.0};
    for (std::size_t k = 0; k < rep.run.track.t.size(); ++k) {
        const auto idx = std::min(path.size() - 1, static_cast<std::size_t>(std::lround(rep.run.track.t[k] / h)));
        const std::vector<cplx> roots = polynomial_roots(ModuliPoint::from_real(model.to_raw(path[idx].q)));
        const double d = zero_deviation(rep.run.track.zeros[k], roots);
        rep.predicted.push_back(roots);
        rep.deviation.push_back(d);
        rep.max_deviation = std::max(rep.max_deviation, d);
    }
    return rep;
}

double axis_angle(const ZeroSet& zeros) {
    std::vector<cplx> pts;
    for (const Zero& z : zeros)
        for (int k = 0; k < std::abs(z.sign); ++k) pts.emplace_back(z.x, z.y);
    if (pts.size() != 2) throw PreconditionError("axis_angle needs exactly two zeros");
    double a = std::arg(pts[1] - pts[0]) * 180.0 / M_PI;
    a = std::fmod(a + 360.0, 180.0);
    return a;
}

}  // namespace ahm
