#include "ahm/polynomial.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "ahm/errors.hpp"

namespace ahm {

ModuliPoint::ModuliPoint(std::vector<cplx> c) : coeffs(std::move(c)) {
    if (coeffs.empty()) throw ConfigError("moduli point needs at least one coefficient");
    for (const cplx& v : coeffs)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw ConfigError("moduli point coefficients must be finite");
}

ModuliPoint ModuliPoint::from_real(const std::vector<double>& x) {
    if (x.empty() || x.size() % 2 != 0) throw ConfigError("real moduli coordinates must have even length");
    std::vector<cplx> c(x.size() / 2);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = {x[2 * k], x[2 * k + 1]};
    return ModuliPoint(std::move(c));
}

ModuliPoint ModuliPoint::from_roots(const std::vector<cplx>& roots) {
    std::vector<cplx> poly{1.0};
    for (const cplx& r : roots) {
        std::vector<cplx> next(poly.size() + 1, 0.0);
        for (std::size_t k = 0; k < poly.size(); ++k) {
            next[k] += poly[k];
            next[k + 1] -= r * poly[k];
        }
        poly = std::move(next);
    }
    return ModuliPoint(std::vector<cplx>(poly.begin() + 1, poly.end()));
}

std::vector<double> ModuliPoint::real_coords() const {
    std::vector<double> x(2 * coeffs.size());
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        x[2 * k] = coeffs[k].real();
        x[2 * k + 1] = coeffs[k].imag();
    }
    return x;
}

ModuliPoint ModuliPoint::displaced(int mu, double delta) const {
    if (mu < 0 || mu >= dim()) throw ConfigError("moduli index out of range");
    ModuliPoint out = *this;
    out.coeffs[mu / 2] += (mu % 2 == 0) ? cplx(delta, 0.0) : cplx(0.0, delta);
    return out;
}

cplx ModuliPoint::eval(cplx z) const {
    cplx p = 1.0;
    for (const cplx& c : coeffs) p = p * z + c;
    return p;
}

cplx ModuliPoint::derivative(cplx z) const {
    const int N = n();
    cplx d = static_cast<double>(N);
    for (int k = 0; k + 1 < N; ++k) d = d * z + static_cast<double>(N - 1 - k) * coeffs[k];
    return d;
}

cplx ModuliPoint::coordinate_derivative(int mu, cplx z) const {
    if (mu < 0 || mu >= dim()) throw ConfigError("moduli index out of range");
    const int power = n() - 1 - mu / 2;
    cplx zp = 1.0;
    for (int k = 0; k < power; ++k) zp *= z;
    return (mu % 2 == 0) ? zp : cplx(0.0, 1.0) * zp;
}

std::vector<cplx> polynomial_roots(const ModuliPoint& q) {
    const int N = q.n();
    if (N == 1) return {-q.coeffs[0]};
    if (N == 2) {
        const cplx b = q.coeffs[0];
        const cplx c = q.coeffs[1];
        const cplx s = std::sqrt(b * b - 4.0 * c);
        // Pick the sign that avoids cancellation, then recover the partner from the product.
        const cplx t = (std::real(std::conj(b) * s) >= 0.0) ? -(b + s) / 2.0 : -(b - s) / 2.0;
        if (std::abs(t) == 0.0) return {0.0, 0.0};
        return {t, c / t};
    }
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(N, N);
    for (int k = 0; k < N; ++k) companion(0, k) = -q.coeffs[k];
    for (int k = 1; k < N; ++k) companion(k, k - 1) = 1.0;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
    std::vector<cplx> roots(N);
    for (int k = 0; k < N; ++k) {
        cplx z = solver.eigenvalues()[k];
        for (int it = 0; it < 3; ++it) {
            const cplx d = q.derivative(z);
            if (std::abs(d) < 1e-14) break;
            const cplx trial = z - q.eval(z) / d;
            if (!std::isfinite(trial.real()) || !std::isfinite(trial.imag())) break;
            if (std::abs(q.eval(trial)) >= std::abs(q.eval(z))) break;
            z = trial;
        }
        roots[k] = z;
    }
    return roots;
}

}  // namespace ahm
