#pragma once

#include <string>
#include <vector>

#include "ahm/evolution.hpp"

namespace ahm {

// Temporal-gauge state of the planar model. Momenta are empty for parabolic runs.
struct GaugeState2D {
    double t = 0.0;
    long step = 0;
    double lambda = 1.0;  // 1 + ι ε²
    bool hyperbolic = true;
    ComplexField2 phi;
    ScalarField2 a1, a2;
    ComplexField2 pi;     // ∂_t Φ
    ScalarField2 e1, e2;  // ∂_t A_a

    explicit GaugeState2D(const Grid2& g) : phi(g), a1(g), a2(g), pi(g), e1(g), e2(g) {}
    const Grid2& grid() const { return phi.grid(); }
};

// Vortex fields for q with momenta Σ v^μ ñ_μ; v in raw moduli coordinates.
GaugeState2D init_from_moduli(const ModuliPoint& q, const std::vector<double>& v, const Grid2& grid,
                              double lambda = 1.0, const ModuliOptions& opts = {});

// Nodes this close to the edge keep their initial values.
inline constexpr int kFrozenRing = 2;

// −δE/δ(Φ, A): D_a D_a Φ − (λ/2)(|Φ|² − 1)Φ and ΔA_a − ∂_a ∇·A + (iΦ, D_a Φ).
FieldTriple forces(const GaugeState2D& s);

// Velocity Verlet; dt ≤ 0.5 h.
GaugeState2D step_hyperbolic(const GaugeState2D& s, double dt);
// Forward Euler on the gradient flow; dt ≤ 0.2 h².
GaugeState2D step_parabolic(const GaugeState2D& s, double dt);

struct Energy2D {
    double kinetic = 0.0;
    double potential = 0.0;
    double total = 0.0;
};

Energy2D energy(const GaugeState2D& s);

// L² norm of ∂_a E_a − (iΦ, ∂_t Φ) over nodes at least `margin` from the edge.
double gauss_residual(const GaugeState2D& s, int margin = kFrozenRing + 4);

struct Zero {
    double x = 0.0;
    double y = 0.0;
    int sign = 0;  // winding around the cell
};

using ZeroSet = std::vector<Zero>;

ZeroSet track_zeros(const ComplexField2& phi);

// Smallest over matchings of the largest distance; zeros of winding w count w times.
double zero_deviation(const ZeroSet& zeros, const std::vector<cplx>& roots);

struct ZeroTrack {
    std::vector<double> t;
    std::vector<ZeroSet> zeros;
};

void write_zero_track_csv(const ZeroTrack& track, const std::string& path);

struct RunRecord {
    ZeroTrack track;
    std::vector<double> energy;  // total energy at each track time
    std::vector<double> gauss;   // hyperbolic runs only
    GaugeState2D final_state;
};

// Integrates to T (hyperbolic when the state carries momenta), sampling every `sample_every` steps.
RunRecord simulate(const GaugeState2D& s0, double T, double dt, int sample_every);

struct AdiabaticReport {
    RunRecord run;
    std::vector<std::vector<cplx>> predicted;  // roots of the geodesic prediction at each track time
    std::vector<double> deviation;
    double max_deviation = 0.0;
};

// Largest relative departure of the sampled energy from its first value.
double energy_drift(const RunRecord& r);

struct AdiabaticOptions {
    double dt = 0.02;
    int sample_every = 10;
    double lambda = 1.0;
    double iota = 0.0;  // potential strength for the geodesic prediction
    ModuliOptions moduli;
};

// Runs the field dynamics from (q0, v) and compares the zeros with the geodesic of `model`.
AdiabaticReport adiabatic_compare(const ModuliPoint& q0, const std::vector<double>& v, double T, const Grid2& grid,
                                  const MetricModel& model, const AdiabaticOptions& opts = {});

// Orientation in degrees, in [0, 180), of the line through two zeros.
double axis_angle(const ZeroSet& zeros);

}  // namespace ahm
