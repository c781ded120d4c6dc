#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ahm/errors.hpp"

namespace ahm {

using cplx = std::complex<double>;

// Cell-centered square grid on [-half_width, half_width]^2.
// Node (i, j) sits at (x_i, y_j) with x_i = -half_width + (i + 1/2) h.
class Grid2 {
public:
    Grid2(double half_width, int points_per_axis);

    double half_width() const { return half_width_; }
    int n() const { return n_; }
    double spacing() const { return h_; }
    std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
    double cell_area() const { return h_ * h_; }

    double x(int i) const { return -half_width_ + (i + 0.5) * h_; }
    double y(int j) const { return x(j); }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * n_ + i; }

    bool operator==(const Grid2& o) const { return n_ == o.n_ && half_width_ == o.half_width_; }
    bool operator!=(const Grid2& o) const { return !(*this == o); }

private:
    double half_width_;
    int n_;
    double h_;
};

Grid2 build_grid(double half_width, int points_per_axis);

template <class T>
class Field2 {
public:
    explicit Field2(const Grid2& g, T fill = T{}) : grid_(g), values_(g.size(), fill) {}

    const Grid2& grid() const { return grid_; }
    int n() const { return grid_.n(); }
    std::size_t size() const { return values_.size(); }

    T& operator()(int i, int j) { return values_[grid_.index(i, j)]; }
    const T& operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
    T& operator[](std::size_t k) { return values_[k]; }
    const T& operator[](std::size_t k) const { return values_[k]; }

    T* data() { return values_.data(); }
    const T* data() const { return values_.data(); }
    std::vector<T>& values() { return values_; }
    const std::vector<T>& values() const { return values_; }

    Field2& operator+=(const Field2& o) {
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
        return *this;
    }
    Field2& operator-=(const Field2& o) {
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
        return *this;
    }
    Field2& operator*=(double s) {
        for (auto& v : values_) v *= s;
        return *this;
    }

private:
    Grid2 grid_;
    std::vector<T> values_;
};

using ScalarField2 = Field2<double>;
using ComplexField2 = Field2<cplx>;

struct VectorField2 {
    ScalarField2 x;
    ScalarField2 y;

    explicit VectorField2(const Grid2& g) : x(g), y(g) {}
    VectorField2(ScalarField2 a1, ScalarField2 a2) : x(std::move(a1)), y(std::move(a2)) {}
    const Grid2& grid() const { return x.grid(); }
};

template <class F>
ScalarField2 sample(const Grid2& g, F&& f) {
    ScalarField2 out(g);
    for (int j = 0; j < g.n(); ++j)
        for (int i = 0; i < g.n(); ++i) out(i, j) = f(g.x(i), g.y(j));
    return out;
}

template <class F>
ComplexField2 sample_complex(const Grid2& g, F&& f) {
    ComplexField2 out(g);
    for (int j = 0; j < g.n(); ++j)
        for (int i = 0; i < g.n(); ++i) out(i, j) = f(g.x(i), g.y(j));
    return out;
}

// Values one half cell outside each edge, indexed along the edge.
struct GhostValues {
    std::vector<double> left, right, bottom, top;

    static GhostValues zero(const Grid2& g);
    static GhostValues from_function(const Grid2& g, const std::function<double(double, double)>& f);
};

void require_same_grid(const Grid2& a, const Grid2& b, const char* what);

// 5-point Laplacian. Without ghost values the missing neighbor is extrapolated
// quadratically from the interior; with ghost values it is taken from them
// (GhostValues::zero gives the homogeneous Dirichlet operator of the solver).
ScalarField2 laplacian(const ScalarField2& f);
ScalarField2 laplacian(const ScalarField2& f, const GhostValues& ghost);
ComplexField2 laplacian(const ComplexField2& f);

// Central differences in the interior, second-order one-sided at the edges.
ScalarField2 d_dx(const ScalarField2& f);
ScalarField2 d_dy(const ScalarField2& f);
ComplexField2 d_dx(const ComplexField2& f);
ComplexField2 d_dy(const ComplexField2& f);
ScalarField2 divergence(const ScalarField2& a1, const ScalarField2& a2);

struct CgOptions {
    double tol = 1e-10;
    bool jacobi = true;
    int max_iter = 0;  // 0 means 50 * points_per_axis
};

struct CgStats {
    int iterations = 0;
    double relative_residual = 0.0;
};

// Solves (-Δ + V) psi = rhs with Dirichlet ghost data (zero when `ghost` is null).
ScalarField2 solve_screened_poisson(const ScalarField2& V, const ScalarField2& rhs, double tol,
                                    const GhostValues* ghost = nullptr,
                                    const ScalarField2* initial = nullptr, CgStats* stats = nullptr,
                                    CgOptions options = {});

// (v, w) = Re(v conj(w)), the real pairing on C.
inline double pair(cplx v, cplx w) { return v.real() * w.real() + v.imag() * w.imag(); }

double l2_inner(const ScalarField2& a, const ScalarField2& b);
double l2_inner(const ComplexField2& a, const ComplexField2& b);
double l2_inner(const VectorField2& a, const VectorField2& b);
double l2_norm(const ScalarField2& a);
double l2_norm(const ComplexField2& a);
double l2_norm(const VectorField2& a);

double weighted_sup_norm(const ScalarField2& f, double gamma);
double weighted_sup_norm(const ComplexField2& f, double gamma);

double max_abs(const ScalarField2& f);
double max_abs(const ComplexField2& f);

// Deterministic blocked summation of values times cell area.
double integrate(const ScalarField2& f);

void require_finite(const ScalarField2& f, const char* what);
void require_finite(const ComplexField2& f, const char* what);

}  // namespace ahm
