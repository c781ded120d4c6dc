#pragma once

#include <utility>
#include <vector>

#include "ahm/grid2d.hpp"
#include "ahm/polynomial.hpp"

namespace ahm {

struct VortexSolution {
    ModuliPoint q;
    Grid2 grid;
    ComplexField2 phi;
    ScalarField2 a1;
    ScalarField2 a2;
    ScalarField2 v;  // smooth part of log|phi|^2
    int newton_iterations = 0;
    double final_update = 0.0;
};

struct TaubesOptions {
    double newton_tol = 1e-10;
    int max_newton = 60;
    const ScalarField2* warm_start = nullptr;
};

// Solves the Bogomolny system through the scalar equation for the smooth
// correction v of u = log|phi|^2 and assembles Coulomb-gauge fields.
VortexSolution taubes_solve(const ModuliPoint& q, const Grid2& g, double newton_tol = 1e-10);
VortexSolution taubes_solve(const ModuliPoint& q, const Grid2& g, const TaubesOptions& opts);

// Scale c(q) of the regularization log(|p|^2/(c + |p|^2)); translation invariant,
// smooth in q, equal to 1 for a single vortex.
double regularization_scale(const ModuliPoint& q);

// Throws ConfigError when the grid cannot resolve the cores of q.
void check_resolution(const ModuliPoint& q, const Grid2& g);

struct FieldTriple {
    ComplexField2 phi;
    ScalarField2 a1;
    ScalarField2 a2;

    explicit FieldTriple(const Grid2& g) : phi(g), a1(g), a2(g) {}
    FieldTriple(ComplexField2 p, ScalarField2 x, ScalarField2 y)
        : phi(std::move(p)), a1(std::move(x)), a2(std::move(y)) {}
    const Grid2& grid() const { return phi.grid(); }
};

double l2_inner(const FieldTriple& a, const FieldTriple& b);
double l2_norm(const FieldTriple& a);

struct BogomolnyResidual {
    double dbar = 0.0;
    double curv = 0.0;
};

BogomolnyResidual bogomolny_residual(const ComplexField2& phi, const ScalarField2& a1, const ScalarField2& a2);
BogomolnyResidual bogomolny_residual(const VortexSolution& s);

struct EnergyVorticity {
    double energy = 0.0;
    double vorticity = 0.0;
};

EnergyVorticity energy_and_vorticity(const ComplexField2& phi, const ScalarField2& a1, const ScalarField2& a2);
EnergyVorticity energy_and_vorticity(const VortexSolution& s);

// Central difference of two solves at q +- step e_mu, warm-started from `base` when given.
FieldTriple moduli_derivative(const ModuliPoint& q, int mu, double step, const Grid2& g,
                              const VortexSolution* base = nullptr, double newton_tol = 1e-10);

// Least-squares slope of log(1 - |phi|) against r over the annulus [r0, r1].
double decay_rate(const VortexSolution& s, double r0 = 3.0, double r1 = 6.0);

double coulomb_residual(const VortexSolution& s);

// Nodal maps shared with the dynamics and ansatz code.
ScalarField2 field_strength(const ScalarField2& a1, const ScalarField2& a2);
// ΔA − ∇(∇·A) in curl form (−∂₂F₁₂, ∂₁F₁₂), so pure-gauge A maps to zero exactly.
std::pair<ScalarField2, ScalarField2> maxwell_term(const ScalarField2& a1, const ScalarField2& a2);
// Σ_a D_a D_a Φ composed from the nodal first derivatives.
ComplexField2 covariant_laplacian(const ComplexField2& phi, const ScalarField2& a1, const ScalarField2& a2);
ComplexField2 covariant_dx(const ComplexField2& phi, const ScalarField2& a1);
ComplexField2 covariant_dy(const ComplexField2& phi, const ScalarField2& a2);

}  // namespace ahm
