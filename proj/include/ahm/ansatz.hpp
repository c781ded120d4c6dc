#pragma once

#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "ahm/evolution.hpp"

namespace ahm {

// q and its first derivatives along the filament (y3) and in time (y0), all in raw coordinates.
struct FilamentSample {
    ModuliPoint q;
    std::vector<double> dq3;
    std::vector<double> dq0;
};

using FilamentSource = std::function<FilamentSample(double y3, double y0)>;

// Samples a trajectory at node positions and snapshot times; other points are rejected.
FilamentSource trajectory_source(const Trajectory& tr, const MetricModel& model);

// Leading-order fields on one 2d slice: the vortex for q and A3 = χ_{∂3 q}, A0 = χ_{∂0 q}.
struct AnsatzSlice {
    double y3 = 0.0;
    double y0 = 0.0;
    FilamentSample data;
    VortexSolution sol;
    ScalarField2 a3;
    ScalarField2 a0;
};

AnsatzSlice make_slice(const FilamentSample& s, double y3, double y0, const Grid2& grid,
                       const ModuliOptions& opts = {});

std::vector<AnsatzSlice> assemble_u0(const FilamentSource& source, const std::vector<double>& y3, double y0,
                                     const Grid2& grid, const ModuliOptions& opts = {});

// Plus: center and four neighbors. Box: adds the corners. Wide: every offset
// needed to evaluate the full operator at the center and its four neighbors.
enum class StencilShape { Plus, Box, Wide };

class SliceStencil {
public:
    SliceStencil(const FilamentSource& source, double y3, double y0, double h3, double h0, StencilShape shape,
                 const Grid2& grid, const ModuliOptions& opts = {});

    double h3() const { return h3_; }
    double h0() const { return h0_; }
    bool has(int i, int j) const { return slices_.count({i, j}) != 0; }
    const AnsatzSlice& at(int i, int j) const;
    const Grid2& grid() const { return grid_; }

private:
    double h3_, h0_;
    Grid2 grid_;
    std::map<std::pair<int, int>, AnsatzSlice> slices_;
};

// Fields of the operator S split as (φ, a1, a2, a3, a0).
struct SFields {
    ComplexField2 phi;
    ScalarField2 a1, a2, a3, a0;
    explicit SFields(const Grid2& g) : phi(g), a1(g), a2(g), a3(g), a0(g) {}
};

struct ComponentNorms {
    double l2 = 0.0;
    double weighted_sup = 0.0;  // γ = 0.5
};

struct ResidualReport {
    ComponentNorms phi, a, a3, a0;
    double u_l2 = 0.0;  // ‖(φ, a1, a2)‖
    std::vector<double> projections;  // |(S_u, ñ_μ)| / (‖S_u‖ ‖ñ_μ‖)
    double max_projection = 0.0;
    double gauge_relative = 0.0;  // ‖∂_a S_a − (iΦ, S_φ)‖ over the sum of the two norms
};

ResidualReport report_of(const SFields& s);

// Leading and next order parts in the rescaled variables.
SFields s0_fields(const SliceStencil& st, int i = 0, int j = 0);
SFields s1_fields(const SliceStencil& st, double kappa0, double kappa1, int i = 0, int j = 0);

// The full operator in unscaled (x, t) variables at offset (i, j) with
// ∂_{x3} = ε ∂_{y3}, ∂_t = ε ∂_{y0} and A_α = ε A⁰_α.
SFields s_unscaled(const SliceStencil& st, double kappa0, double kappa1, double eps, int i = 0, int j = 0);

ResidualReport residual_s0(const SliceStencil& st);
// Includes the zero-mode projections at the center q.
ResidualReport residual_s1(const SliceStencil& st, double kappa0, double kappa1, const ModuliOptions& opts = {});

struct ScalingReport {
    std::vector<double> eps;
    std::vector<double> u_norm;        // ‖S_u[U⁰]‖
    std::vector<double> u_excess;      // ‖S_u[U⁰] − S⁰_u‖
    std::vector<double> ratios;        // consecutive u_excess ratios
    double exponent = 0.0;             // least-squares slope of log u_excess against log ε
    std::vector<double> split_error;   // ‖S[U⁰] − (S⁰ + ε² S¹)‖ relative, all components
};

ScalingReport epsilon_scaling(const SliceStencil& st, double kappa0, double kappa1, const std::vector<double>& eps);

struct IdentityReport {
    double combination = 0.0;  // ‖(S_φ, iΦ) + (κ0 ∂_t + εκ1) S_0 − ∂_j S_j‖
    double scale = 0.0;        // sum of the three term norms
    double relative = 0.0;
};

// Needs a Wide stencil.
IdentityReport conservation_identity(const SliceStencil& st, double kappa0, double kappa1, double eps);

}  // namespace ahm
