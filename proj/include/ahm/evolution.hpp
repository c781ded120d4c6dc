#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ahm/moduli.hpp"

namespace ahm {

// Geometry of the target manifold in the coordinates the evolution uses.
class MetricModel {
public:
    virtual ~MetricModel() = default;
    virtual int dim() const = 0;
    virtual bool contains(const Eigen::VectorXd& x) const = 0;
    virtual ModuliGeometry at(const Eigen::VectorXd& x) const = 0;
    // Raw moduli coordinates (Re q1, Im q1, ...) of x.
    virtual std::vector<double> to_raw(const Eigen::VectorXd& x) const;
    // Pushes a tangent vector at x forward to raw coordinates.
    virtual std::vector<double> to_raw_tangent(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const;
    // Inverses of the two maps above.
    virtual Eigen::VectorXd from_raw(const std::vector<double>& raw) const;
    virtual Eigen::VectorXd from_raw_tangent(const std::vector<double>& raw, const std::vector<double>& v) const;
    virtual std::string hash() const { return {}; }
};

// N = 1 uses raw coordinates; N = 2 uses (P, Q).
class TableModel : public MetricModel {
public:
    explicit TableModel(std::shared_ptr<const GeometryTable> table);
    int dim() const override { return table_->dim(); }
    bool contains(const Eigen::VectorXd& x) const override;
    ModuliGeometry at(const Eigen::VectorXd& x) const override;
    std::vector<double> to_raw(const Eigen::VectorXd& x) const override;
    std::vector<double> to_raw_tangent(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const override;
    Eigen::VectorXd from_raw(const std::vector<double>& raw) const override;
    Eigen::VectorXd from_raw_tangent(const std::vector<double>& raw, const std::vector<double>& v) const override;
    std::string hash() const override { return hash_; }
    const GeometryTable& table() const { return *table_; }

private:
    std::shared_ptr<const GeometryTable> table_;
    std::string hash_;
};

// Closed-form geometry, mostly for tests.
class FunctionModel : public MetricModel {
public:
    using Eval = std::function<ModuliGeometry(const Eigen::VectorXd&)>;
    FunctionModel(int dim, Eval eval, std::function<bool(const Eigen::VectorXd&)> inside = {});
    int dim() const override { return dim_; }
    bool contains(const Eigen::VectorXd& x) const override;
    ModuliGeometry at(const Eigen::VectorXd& x) const override { return eval_(x); }

private:
    int dim_;
    Eval eval_;
    std::function<bool(const Eigen::VectorXd&)> inside_;
};

// Flat metric c·I with no potential.
std::shared_ptr<MetricModel> flat_model(int dim, double c = 1.0);

enum class Domain { Line, Torus };

struct EvolutionParams {
    double kappa0 = 1.0;
    double kappa1 = 0.0;
    double iota = 0.0;
    Domain domain = Domain::Line;
    double x_min = 0.0;  // first node on a line; torus nodes start at 0
    double length = 1.0;  // line length or torus circumference
    double dt = 0.01;
    double dx = 0.05;

    int nodes() const;
    double x(int j) const { return x_min + j * dx; }
    void validate() const;
};

struct EvolutionState {
    long step = 0;
    double t0 = 0.0;
    Eigen::MatrixXd q;  // dim x nodes
    Eigen::MatrixXd p;  // ∂_t q, empty when kappa0 = 0

    double time(double dt) const { return t0 + static_cast<double>(step) * dt; }
};

// q(x) sampled on the node grid; velocity likewise (ignored when kappa0 = 0).
EvolutionState make_state(const EvolutionParams& params, const MetricModel& model,
                          const std::function<Eigen::VectorXd(double)>& q0,
                          const std::function<Eigen::VectorXd(double)>& v0 = {});

EvolutionState step(const EvolutionState& s, const EvolutionParams& params, const MetricModel& model);

double energy(const EvolutionState& s, const EvolutionParams& params, const MetricModel& model);

// ∂_t q: the carried momentum when kappa0 > 0, otherwise the heat-flow right-hand side.
Eigen::MatrixXd velocity(const EvolutionState& s, const EvolutionParams& params, const MetricModel& model);

// Left side of the reduced equation, κ0 ∇_t ∂_t q + κ1 ∂_t q − ∇_x ∂_x q + ι ∇V0,
// with ∂_t² q supplied by the caller.
Eigen::MatrixXd filament_residual(const Eigen::MatrixXd& q, const Eigen::MatrixXd& qt, const Eigen::MatrixXd& qtt,
                                  const EvolutionParams& params, const MetricModel& model);

struct Trajectory {
    EvolutionParams params;
    std::vector<EvolutionState> snapshots;
};

Trajectory run(const EvolutionState& s0, const EvolutionParams& params, const MetricModel& model, double T,
               int snapshot_every);

struct GeodesicSample {
    double t;
    Eigen::VectorXd q;
    Eigen::VectorXd v;
};

// RK4 for ∇_t ∂_t q + ι ∇V0 = 0.
std::vector<GeodesicSample> geodesic_ode(const Eigen::VectorXd& q0, const Eigen::VectorXd& v0, double T,
                                         const MetricModel& model, double iota = 0.0, double dt = 1e-3);

// CSV rows t, x3, Re q1, Im q1, ... in raw moduli coordinates.
void write_trajectory_csv(const Trajectory& tr, const MetricModel& model, const std::string& path);

}  // namespace ahm
