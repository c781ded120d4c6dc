#pragma once

#include <complex>
#include <vector>

namespace ahm {

using cplx = std::complex<double>;

// Point of the N-vortex moduli space: coefficients of the monic polynomial
// p(z) = z^N + q_1 z^{N-1} + ... + q_N. Real coordinates interleave
// (Re q_1, Im q_1, Re q_2, ...), so index mu in [0, 2N).
struct ModuliPoint {
    std::vector<cplx> coeffs;

    ModuliPoint() = default;
    explicit ModuliPoint(std::vector<cplx> c);

    int n() const { return static_cast<int>(coeffs.size()); }
    int dim() const { return 2 * n(); }

    static ModuliPoint from_real(const std::vector<double>& x);
    static ModuliPoint from_roots(const std::vector<cplx>& roots);
    std::vector<double> real_coords() const;
    ModuliPoint displaced(int mu, double delta) const;

    cplx eval(cplx z) const;
    cplx derivative(cplx z) const;
    // d p / d x_mu at z for real coordinate mu.
    cplx coordinate_derivative(int mu, cplx z) const;
};

// Roots with multiplicity. Stable quadratic formula for N = 2, companion-matrix
// eigenvalues followed by Newton polishing for N >= 3.
std::vector<cplx> polynomial_roots(const ModuliPoint& q);

}  // namespace ahm
