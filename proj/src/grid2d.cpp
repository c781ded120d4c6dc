#include "ahm/grid2d.hpp"

#include <cmath>

namespace ahm {

Grid2::Grid2(double half_width, int points_per_axis)
    : half_width_(half_width), n_(points_per_axis), h_(0.0) {
    if (!(half_width > 0.0) || !std::isfinite(half_width))
        throw ConfigError("grid half_width must be positive and finite");
    if (points_per_axis < 16 || points_per_axis % 2 != 0)
        throw ConfigError("grid points_per_axis must be even and at least 16");
    h_ = 2.0 * half_width / points_per_axis;
}

Grid2 build_grid(double half_width, int points_per_axis) { return Grid2(half_width, points_per_axis); }

GhostValues GhostValues::zero(const Grid2& g) {
    GhostValues gv;
    gv.left.assign(g.n(), 0.0);
    gv.right.assign(g.n(), 0.0);
    gv.bottom.assign(g.n(), 0.0);
    gv.top.assign(g.n(), 0.0);
    return gv;
}

GhostValues GhostValues::from_function(const Grid2& g, const std::function<double(double, double)>& f) {
    GhostValues gv = zero(g);
    const double lo = -g.half_width() - 0.5 * g.spacing();
    const double hi = g.half_width() + 0.5 * g.spacing();
    for (int k = 0; k < g.n(); ++k) {
        gv.left[k] = f(lo, g.y(k));
        gv.right[k] = f(hi, g.y(k));
        gv.bottom[k] = f(g.x(k), lo);
        gv.top[k] = f(g.x(k), hi);
    }
    return gv;
}

void require_same_grid(const Grid2& a, const Grid2& b, const char* what) {
    if (a != b) throw PreconditionError(std::string("grid mismatch in ") + what);
}

namespace {

// 5-point Laplacian; `extrapolate` fills the missing neighbor by quadratic
// extrapolation (3f0 - 3f1 + f2), otherwise the field is extended by zero.
template <class T>
Field2<T> laplacian_impl(const Field2<T>& f, bool extrapolate) {
    const int n = f.n();
    const double inv_h2 = 1.0 / (f.grid().spacing() * f.grid().spacing());
    Field2<T> out(f.grid());
    const T* x = f.data();
    T* y = out.data();
    const std::size_t stride = static_cast<std::size_t>(n);
    for (int j = 0; j < n; ++j) {
        const T* row = x + j * stride;
        T* yr = y + j * stride;
        for (int i = 0; i < n; ++i) {
            T s = -4.0 * row[i];
            if (i > 0) s += row[i - 1];
            else if (extrapolate) s += 3.0 * row[0] - 3.0 * row[1] + row[2];
            if (i + 1 < n) s += row[i + 1];
            else if (extrapolate) s += 3.0 * row[n - 1] - 3.0 * row[n - 2] + row[n - 3];
            if (j > 0) s += row[i - stride];
            else if (extrapolate) s += 3.0 * row[i] - 3.0 * row[i + stride] + row[i + 2 * stride];
            if (j + 1 < n) s += row[i + stride];
            else if (extrapolate) s += 3.0 * row[i] - 3.0 * row[i - stride] + row[i - 2 * stride];
            yr[i] = s * inv_h2;
        }
    }
    return out;
}

// Fourth-order central differences in the interior, second-order near the edges.
template <class T>
Field2<T> d_dx_impl(const Field2<T>& f) {
    const int n = f.n();
    const double inv_2h = 0.5 / f.grid().spacing();
    const double inv_12h = 1.0 / (12.0 * f.grid().spacing());
    Field2<T> out(f.grid());
    for (int j = 0; j < n; ++j) {
        const T* r = &f(0, j);
        T* o = &out(0, j);
        o[0] = (-3.0 * r[0] + 4.0 * r[1] - r[2]) * inv_2h;
        o[1] = (r[2] - r[0]) * inv_2h;
        for (int i = 2; i + 2 < n; ++i) o[i] = (8.0 * (r[i + 1] - r[i - 1]) - (r[i + 2] - r[i - 2])) * inv_12h;
        o[n - 2] = (r[n - 1] - r[n - 3]) * inv_2h;
        o[n - 1] = (3.0 * r[n - 1] - 4.0 * r[n - 2] + r[n - 3]) * inv_2h;
    }
    return out;
}

template <class T>
Field2<T> d_dy_impl(const Field2<T>& f) {
    const int n = f.n();
    const double inv_2h = 0.5 / f.grid().spacing();
    const double inv_12h = 1.0 / (12.0 * f.grid().spacing());
    Field2<T> out(f.grid());
    for (int i = 0; i < n; ++i) {
        out(i, 0) = (-3.0 * f(i, 0) + 4.0 * f(i, 1) - f(i, 2)) * inv_2h;
        out(i, 1) = (f(i, 2) - f(i, 0)) * inv_2h;
        out(i, n - 2) = (f(i, n - 1) - f(i, n - 3)) * inv_2h;
        out(i, n - 1) = (3.0 * f(i, n - 1) - 4.0 * f(i, n - 2) + f(i, n - 3)) * inv_2h;
    }
    for (int j = 2; j + 2 < n; ++j)
        for (int i = 0; i < n; ++i)
            out(i, j) = (8.0 * (f(i, j + 1) - f(i, j - 1)) - (f(i, j + 2) - f(i, j - 2))) * inv_12h;
    return out;
}

// y = (-Δ0 + V) x with zero extension outside the grid.
void apply_screened(const double* x, const double* V, double* y, int n, double inv_h2) {
    for (int j = 0; j < n; ++j) {
        const double* row = x + static_cast<std::size_t>(j) * n;
        const double* down = j > 0 ? row - n : nullptr;
        const double* up = j + 1 < n ? row + n : nullptr;
        const double* vr = V + static_cast<std::size_t>(j) * n;
        double* yr = y + static_cast<std::size_t>(j) * n;
        for (int i = 0; i < n; ++i) {
            double s = 4.0 * row[i];
            if (i > 0) s -= row[i - 1];
            if (i + 1 < n) s -= row[i + 1];
            if (down) s -= down[i];
            if (up) s -= up[i];
            yr[i] = s * inv_h2 + vr[i] * row[i];
        }
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

void add_ghosts(ScalarField2& out, const GhostValues& ghost, double scale) {
    const int n = out.n();
    for (int k = 0; k < n; ++k) {
        out(0, k) += scale * ghost.left[k];
        out(n - 1, k) += scale * ghost.right[k];
        out(k, 0) += scale * ghost.bottom[k];
        out(k, n - 1) += scale * ghost.top[k];
    }
}

}  // namespace

ScalarField2 laplacian(const ScalarField2& f) { return laplacian_impl(f, true); }
ComplexField2 laplacian(const ComplexField2& f) { return laplacian_impl(f, true); }

ScalarField2 laplacian(const ScalarField2& f, const GhostValues& ghost) {
    ScalarField2 out = laplacian_impl(f, false);
    const double h = f.grid().spacing();
    add_ghosts(out, ghost, 1.0 / (h * h));
    return out;
}

ScalarField2 d_dx(const ScalarField2& f) { return d_dx_impl(f); }
ScalarField2 d_dy(const ScalarField2& f) { return d_dy_impl(f); }
ComplexField2 d_dx(const ComplexField2& f) { return d_dx_impl(f); }
ComplexField2 d_dy(const ComplexField2& f) { return d_dy_impl(f); }

ScalarField2 divergence(const ScalarField2& a1, const ScalarField2& a2) {
    require_same_grid(a1.grid(), a2.grid(), "divergence");
    ScalarField2 out = d_dx(a1);
    out += d_dy(a2);
    return out;
}

ScalarField2 solve_screened_poisson(const ScalarField2& V, const ScalarField2& rhs, double tol,
                                    const GhostValues* ghost, const ScalarField2* initial,
                                    CgStats* stats, CgOptions options) {
    require_same_grid(V.grid(), rhs.grid(), "solve_screened_poisson");
    const Grid2& g = V.grid();
    const int n = g.n();
    const std::size_t m = g.size();
    if (!(tol > 0.0)) throw PreconditionError("solver tolerance must be positive");

    double ring = 0.0;
    int ring_count = 0;
    for (std::size_t k = 0; k < m; ++k)
        if (V[k] < -1e-12) throw PreconditionError("screened-Poisson potential is negative");
    for (int k = 0; k < n; ++k) {
        ring += V(k, 0) + V(k, n - 1);
        ring_count += 2;
    }
    for (int k = 1; k + 1 < n; ++k) {
        ring += V(0, k) + V(n - 1, k);
        ring_count += 2;
    }
    if (ring / ring_count < 0.5)
        throw PreconditionError("screened-Poisson potential not bounded away from zero at the boundary");

    const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
    ScalarField2 b = rhs;
    if (ghost) add_ghosts(b, *ghost, inv_h2);

    ScalarField2 x(g);
    if (initial) {
        require_same_grid(initial->grid(), g, "solve_screened_poisson initial guess");
        x = *initial;
    }

    std::vector<double>& xv = x.values();
    const std::vector<double>& bv = b.values();
    std::vector<double> r(m), z(m), p(m), q(m), diag(m);
    for (std::size_t k = 0; k < m; ++k) diag[k] = options.jacobi ? 1.0 / (4.0 * inv_h2 + V[k]) : 1.0;

    const double bnorm = std::sqrt(dot(bv, bv));
    if (bnorm == 0.0 && !initial) {
        if (stats) *stats = {0, 0.0};
        return x;
    }
    apply_screened(xv.data(), V.data(), q.data(), n, inv_h2);
    for (std::size_t k = 0; k < m; ++k) r[k] = bv[k] - q[k];
    const double scale = bnorm > 0.0 ? bnorm : 1.0;
    double rnorm = std::sqrt(dot(r, r));
    const int cap = options.max_iter > 0 ? options.max_iter : 50 * n;

    int it = 0;
    if (rnorm > tol * scale) {
        for (std::size_t k = 0; k < m; ++k) z[k] = diag[k] * r[k];
        p = z;
        double rz = dot(r, z);
        for (it = 1; it <= cap; ++it) {
            apply_screened(p.data(), V.data(), q.data(), n, inv_h2);
            const double alpha = rz / dot(p, q);
            for (std::size_t k = 0; k < m; ++k) {
                xv[k] += alpha * p[k];
                r[k] -= alpha * q[k];
            }
            rnorm = std::sqrt(dot(r, r));
            if (!std::isfinite(rnorm)) throw SolverError("conjugate gradient produced non-finite residual", rnorm);
            if (rnorm <= tol * scale) break;
            for (std::size_t k = 0; k < m; ++k) z[k] = diag[k] * r[k];
            const double rz_new = dot(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t k = 0; k < m; ++k) p[k] = z[k] + beta * p[k];
        }
        if (it > cap) throw SolverError("conjugate gradient did not converge", rnorm / scale);
    }
    if (stats) *stats = {it, rnorm / scale};
    return x;
}

double l2_inner(const ScalarField2& a, const ScalarField2& b) {
    require_same_grid(a.grid(), b.grid(), "l2_inner");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s * a.grid().cell_area();
}

double l2_inner(const ComplexField2& a, const ComplexField2& b) {
    require_same_grid(a.grid(), b.grid(), "l2_inner");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += pair(a[k], b[k]);
    return s * a.grid().cell_area();
}

double l2_inner(const VectorField2& a, const VectorField2& b) { return l2_inner(a.x, b.x) + l2_inner(a.y, b.y); }

double l2_norm(const ScalarField2& a) { return std::sqrt(l2_inner(a, a)); }
double l2_norm(const ComplexField2& a) { return std::sqrt(l2_inner(a, a)); }
double l2_norm(const VectorField2& a) { return std::sqrt(l2_inner(a, a)); }

namespace {

template <class T>
double weighted_sup_impl(const Field2<T>& f, double gamma) {
    if (!(gamma >= 0.0)) throw PreconditionError("weighted_sup_norm requires gamma >= 0");
    const Grid2& g = f.grid();
    double m = 0.0;
    for (int j = 0; j < g.n(); ++j)
        for (int i = 0; i < g.n(); ++i) {
            const double r = std::hypot(g.x(i), g.y(j));
            m = std::max(m, std::abs(f(i, j)) * std::exp(gamma * r));
        }
    return m;
}

}  // namespace

double weighted_sup_norm(const ScalarField2& f, double gamma) { return weighted_sup_impl(f, gamma); }
double weighted_sup_norm(const ComplexField2& f, double gamma) { return weighted_sup_impl(f, gamma); }

double max_abs(const ScalarField2& f) {
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, std::abs(v));
    return m;
}

double max_abs(const ComplexField2& f) {
    double m = 0.0;
    for (const cplx& v : f.values()) m = std::max(m, std::abs(v));
    return m;
}

double integrate(const ScalarField2& f) {
    constexpr std::size_t block = 4096;
    double total = 0.0;
    for (std::size_t start = 0; start < f.size(); start += block) {
        const std::size_t end = std::min(f.size(), start + block);
        double s = 0.0;
        for (std::size_t k = start; k < end; ++k) s += f[k];
        total += s;
    }
    return total * f.grid().cell_area();
}

void require_finite(const ScalarField2& f, const char* what) {
    for (double v : f.values())
        if (!std::isfinite(v)) throw SolverError(std::string("non-finite sample in ") + what, v);
}

void require_finite(const ComplexField2& f, const char* what) {
    for (const cplx& v : f.values())
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw SolverError(std::string("non-finite sample in ") + what, std::abs(v));
}

}  // namespace ahm
