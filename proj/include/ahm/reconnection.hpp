#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ahm/evolution.hpp"

namespace ahm {

std::vector<cplx> roots_of_moduli(const ModuliPoint& q);

// q1² − 4 q2 for N = 2.
cplx discriminant(const ModuliPoint& q);

// Coefficients of an N = 2 family on a rectangular (x3, t) lattice, bilinear in between.
class CoefficientLattice {
public:
    CoefficientLattice(std::vector<double> x3, std::vector<double> t);

    const std::vector<double>& x3() const { return x3_; }
    const std::vector<double>& t() const { return t_; }
    int nx() const { return static_cast<int>(x3_.size()); }
    int nt() const { return static_cast<int>(t_.size()); }

    void set(int j, int k, const ModuliPoint& q);
    ModuliPoint at(int j, int k) const;
    cplx d(int j, int k) const { return discriminant(at(j, k)); }

    bool contains(double x3, double t) const;
    ModuliPoint eval(double x3, double t) const;
    cplx d_eval(double x3, double t) const { return discriminant(eval(x3, t)); }

private:
    std::size_t index(int j, int k) const { return static_cast<std::size_t>(k) * x3_.size() + j; }
    std::vector<double> x3_, t_;
    std::vector<cplx> q1_, q2_;
};

CoefficientLattice sample_lattice(const std::function<ModuliPoint(double, double)>& q, const std::vector<double>& x3,
                                  const std::vector<double>& t);

// Node positions along x3 and snapshot times of an N = 2 trajectory.
CoefficientLattice trajectory_lattice(const Trajectory& tr, const MetricModel& model);

// Joins a run backward in time (t ↦ −t) with a forward run from the same initial data.
CoefficientLattice two_sided_lattice(const Trajectory& backward, const Trajectory& forward,
                                     const MetricModel& model);

struct ReconnectionEvent {
    double x3 = 0.0;
    double t = 0.0;
    cplx d;            // D at the refined location
    cplx d3, dt;       // ∂_{x3} D and ∂_t D as vectors in ℝ²
    double determinant = 0.0;
    int winding = 0;   // of D around the surrounding rectangle
    bool transversal = false;
    bool converged = false;
    bool merged = false;  // another candidate lay within two cells
    bool swapped = false;  // roots exchange around the rectangle
};

struct DetectOptions {
    double tol = 1e-10;
    int max_newton = 50;
    int window = 2;  // rectangle half-size in cells
    double merge_cells = 2.0;
};

std::vector<ReconnectionEvent> detect_events(const CoefficientLattice& lat, const DetectOptions& opts = {});

// Loop samples in order; the closing segment back to the first sample is included.
int winding_number(const std::vector<cplx>& loop);

struct BranchPath {
    std::vector<cplx> zeta;
    bool swapped = false;
};

// Follows the root starting at z1 by nearest-root matching.
BranchPath continue_branch(const std::vector<ModuliPoint>& path, cplx z1, bool closed);

struct CenterlinePoint {
    double x3 = 0.0;
    cplx z;
    int branch = -1;  // -1 within one sample of a discriminant zero
};

// Roots at snapshot index k, continued along x3.
std::vector<CenterlinePoint> centerlines(const CoefficientLattice& lat, int k);

void write_centerlines_csv(const std::vector<CenterlinePoint>& pts, const std::string& path);
void write_events_json(const std::vector<ReconnectionEvent>& events, const std::string& path);

}  // namespace ahm
