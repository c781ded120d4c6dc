#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ahm/vortex2d.hpp"

namespace ahm {

struct ZeroMode {
    int mu = 0;
    ScalarField2 chi;
    FieldTriple n;  // (D_mu phi, F_mu1, F_mu2)

    ZeroMode(int m, ScalarField2 c, FieldTriple t) : mu(m), chi(std::move(c)), n(std::move(t)) {}
};

struct ModuliOptions {
    double fd_step = 1e-3;
    double newton_tol = 1e-10;
    double chi_tol = 1e-12;
};

// Everything known at one moduli point: the solution, raw moduli derivatives,
// gauge-corrected zero modes and their Gram matrix.
struct PointAnalysis {
    VortexSolution sol;
    std::vector<FieldTriple> derivatives;
    std::vector<ZeroMode> modes;
    Eigen::MatrixXd g;
};

PointAnalysis analyze_point(const ModuliPoint& q, const Grid2& grid, const ModuliOptions& opts = {},
                            const ScalarField2* warm_start = nullptr);

// Solves -Δχ + |φ|²χ = (iφ, ∂_μφ) with the far-field phase gradient as boundary data.
ScalarField2 solve_chi(const VortexSolution& sol, const FieldTriple& derivative, int mu, double tol = 1e-10);
// χ_v for a tangent v in raw coordinates, given the matching derivative of the solution.
ScalarField2 solve_chi_along(const VortexSolution& sol, const FieldTriple& derivative, const std::vector<double>& v,
                             double tol = 1e-10);
// Central difference along v: (u(q + h v̂) − u(q − h v̂)) |v| / 2h, warm-started from base.
FieldTriple directional_derivative(const VortexSolution& base, const std::vector<double>& v, double step = 1e-3,
                                   double newton_tol = 1e-10);
ZeroMode make_zero_mode(const VortexSolution& sol, const FieldTriple& derivative, int mu, double tol = 1e-10);

std::vector<ZeroMode> zero_modes(const ModuliPoint& q, const Grid2& grid, const ModuliOptions& opts = {});

// ∇·Ã − (iφ, Φ̃) for a tangent vector ũ at the solution.
ScalarField2 gauge_residual(const VortexSolution& sol, const FieldTriple& ut);

Eigen::MatrixXd metric_from_modes(const std::vector<ZeroMode>& modes);
Eigen::MatrixXd metric(const ModuliPoint& q, const Grid2& grid, const ModuliOptions& opts = {});

// Symmetric inverse square root; GeometryError when g is not positive definite.
Eigen::MatrixXd orthonormal_frame(const Eigen::MatrixXd& g);

// Christoffel symbols stored as gamma[mu](nu, lambda).
using Christoffels = std::vector<Eigen::MatrixXd>;

Christoffels christoffels_from_metric_derivatives(const Eigen::MatrixXd& g, const std::vector<Eigen::MatrixXd>& dg);

struct ChristoffelResult {
    Christoffels gamma;
    double min_eigenvalue = 0.0;
    bool near_degenerate = false;
    // Lowered symbols g(∇_μ ∂_ν, ∂_λ) from Koszul and from the field pairing (J_μν, ñ_λ),
    // indexed [λ](μ, ν). Filled only when requested.
    std::vector<Eigen::MatrixXd> lowered_koszul;
    std::vector<Eigen::MatrixXd> lowered_pairing;
};

ChristoffelResult christoffels(const ModuliPoint& q, const Grid2& grid, double fd_step = 1e-2,
                               bool pairing_check = false, const ModuliOptions& opts = {});
ChristoffelResult christoffels(const PointAnalysis& base, double fd_step = 1e-2, bool pairing_check = false,
                               const ModuliOptions& opts = {});

struct PotentialValue {
    double v0 = 0.0;
    Eigen::VectorXd grad;
};

double potential_v0_value(const ComplexField2& phi);
PotentialValue potential_v0(const PointAnalysis& a);
PotentialValue potential_v0(const ModuliPoint& q, const Grid2& grid, const ModuliOptions& opts = {});

enum class LinearOperator { GaugeFixed, Linearized };

// GaugeFixed is the operator L with the gauge term built in; Linearized is 𝓛.
FieldTriple apply_l(const VortexSolution& u, const FieldTriple& ut, LinearOperator mode);

struct ModuliGeometry {
    ModuliPoint q;
    Eigen::MatrixXd g;
    Eigen::MatrixXd frame;
    Christoffels gamma;
    double v0 = 0.0;
    Eigen::VectorXd grad_v0;
};

// Cached geometry over a sample set. N = 1 tables use a rectangular lattice in
// (Re q1, Im q1). N = 2 tables sample Q = q1² − 4q2 along the positive real axis
// with P = q1 = 0 and store everything in (P, Q) coordinates; translations and
// rotations z -> e^{iα}z carry the samples to every other point.
class GeometryTable {
public:
    enum class Kind { Lattice, Polar };

    struct LatticeSpec {
        double re_min = 0.0, re_max = 0.0, im_min = 0.0, im_max = 0.0;
        int nodes_re = 1, nodes_im = 1;
    };
    struct PolarSpec {
        std::vector<double> radii;  // strictly increasing, radii[0] = 0
    };

    GeometryTable() = default;

    static GeometryTable build_lattice(const LatticeSpec& spec, const Grid2& grid, bool use_translation_symmetry,
                                       const ModuliOptions& opts = {});
    static GeometryTable build_polar(const PolarSpec& spec, const Grid2& grid, const ModuliOptions& opts = {});

    Kind kind() const { return kind_; }
    int vortex_number() const { return n_; }
    int dim() const { return 2 * n_; }
    const Grid2& grid() const { return grid_; }
    const LatticeSpec& lattice() const { return lattice_; }
    const PolarSpec& polar() const { return polar_; }
    const std::vector<ModuliGeometry>& records() const { return records_; }

    // Lattice: x = (Re q1, Im q1). Polar: x = (P1, P2, Q1, Q2).
    bool contains(const std::vector<double>& x) const;
    // Lattice tables interpolate bilinearly. Polar tables return the product
    // metric c_P|dP|² + f(|Q|)|dQ|² with f and V0 as cubic splines in |Q|.
    ModuliGeometry interpolate(const std::vector<double>& x) const;

    // Product-form data for N = 2 at each radius.
    std::vector<double> p_block() const;
    std::vector<double> q_block() const;
    std::vector<double> v0_by_radius() const;
    double p_constant() const;

    // Writes json_path plus a companion json_path + ".bin" of little-endian f64 arrays.
    void save(const std::string& json_path) const;
    static GeometryTable load(const std::string& json_path);
    std::string content_hash() const;

private:
    Kind kind_ = Kind::Lattice;
    int n_ = 1;
    Grid2 grid_{8.0, 16};
    LatticeSpec lattice_;
    PolarSpec polar_;
    std::vector<ModuliGeometry> records_;

    std::vector<double> binary_payload() const;
    std::string metadata_json() const;
};

// Raw moduli coordinates for N = 2 to (P, Q) and back, with the tangent maps.
std::vector<double> raw_to_pq(const std::vector<double>& q);
std::vector<double> pq_to_raw(const std::vector<double>& pq);
Eigen::MatrixXd raw_to_pq_jacobian(const std::vector<double>& q);

// Geometry at a single point computed directly from field solves.
ModuliGeometry direct_geometry(const ModuliPoint& q, const Grid2& grid, double christoffel_step = 1e-2,
                               const ModuliOptions& opts = {});

}  // namespace ahm
