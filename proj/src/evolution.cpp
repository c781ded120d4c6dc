#include "ahm/evolution.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

namespace ahm {

namespace {

// Γ^μ(a, b) for every μ.
Eigen::VectorXd contract(const Christoffels& gamma, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd out(static_cast<int>(gamma.size()));
    for (std::size_t mu = 0; mu < gamma.size(); ++mu) out(static_cast<int>(mu)) = a.dot(gamma[mu] * b);
    return out;
}

// ½ aᵀ (∂_ρ g) a for every ρ, with ∂_ρ g_{μν} = g_{μσ}Γ^σ_{ρν} + g_{νσ}Γ^σ_{ρμ}.
Eigen::VectorXd half_metric_derivative(const ModuliGeometry& geo, const Eigen::VectorXd& a) {
    const int d = static_cast<int>(a.size());
    const Eigen::VectorXd ga = geo.g * a;
    Eigen::VectorXd out(d);
    for (int rho = 0; rho < d; ++rho) {
        double s = 0.0;
        for (int sigma = 0; sigma < d; ++sigma) s += ga(sigma) * geo.gamma[sigma].row(rho).dot(a);
        out(rho) = s;
    }
    return out;
}

int neighbor(int j, int offset, int m, Domain domain) {
    const int k = j + offset;
    if (domain == Domain::Torus) return (k % m + m) % m;
    return k;
}

bool is_moving(int j, int m, Domain domain) { return domain == Domain::Torus || (j > 0 && j + 1 < m); }

std::vector<ModuliGeometry> geometry_at(const Eigen::MatrixXd& q, const MetricModel& model, double t) {
    std::vector<ModuliGeometry> out;
    out.reserve(q.cols());
    for (int j = 0; j < q.cols(); ++j) {
        const Eigen::VectorXd x = q.col(j);
        if (!x.allFinite()) throw EvolutionError("non-finite filament sample", j, t);
        if (!model.contains(x)) throw EvolutionError("filament left the geometry table", j, t);
        out.push_back(model.at(x));
    }
    return out;
}

// Node forces −g⁻¹ ∂E_h/∂q_j / dx of the discrete energy
// E_h = Σ_links ½ Δᵀ ḡ Δ / dx + Σ_nodes ι V0 dx, with ḡ the average of the end metrics.
Eigen::MatrixXd node_forces(const Eigen::MatrixXd& q, const std::vector<ModuliGeometry>& geo,
                            const EvolutionParams& params) {
    const int d = static_cast<int>(q.rows()), m = static_cast<int>(q.cols());
    const double dx = params.dx;
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(d, m);
    const int links = params.domain == Domain::Torus ? m : m - 1;
    for (int k = 0; k < links; ++k) {
        const int a = k, b = neighbor(k, 1, m, params.domain);
        const Eigen::VectorXd delta = q.col(b) - q.col(a);
        const Eigen::VectorXd flux = 0.5 * (geo[a].g + geo[b].g) * delta / dx;
        grad.col(a) -= flux;
        grad.col(b) += flux;
        grad.col(a) += 0.5 * half_metric_derivative(geo[a], delta) / dx;
        grad.col(b) += 0.5 * half_metric_derivative(geo[b], delta) / dx;
    }
    Eigen::MatrixXd force(d, m);
    for (int j = 0; j < m; ++j) {
        Eigen::VectorXd gj = grad.col(j) / dx;
        if (params.iota != 0.0) gj += params.iota * geo[j].grad_v0;
        force.col(j) = -geo[j].g.ldlt().solve(gj);
    }
    return force;
}

}  // namespace

std::vector<double> MetricModel::to_raw(const Eigen::VectorXd& x) const { return {x.data(), x.data() + x.size()}; }

std::vector<double> MetricModel::to_raw_tangent(const Eigen::VectorXd&, const Eigen::VectorXd& v) const {
    return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd MetricModel::from_raw(const std::vector<double>& raw) const {
    return Eigen::Map<const Eigen::VectorXd>(raw.data(), static_cast<Eigen::Index>(raw.size()));
}

Eigen::VectorXd MetricModel::from_raw_tangent(const std::vector<double>&, const std::vector<double>& v) const {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

TableModel::TableModel(std::shared_ptr<const GeometryTable> table) : table_(std::move(table)) {
    if (!table_ || table_->records().empty()) throw ConfigError("empty geometry table");
    if (table_->vortex_number() > 2) throw ConfigError("evolution supports N = 1 and N = 2 tables");
    hash_ = table_->content_hash();
}

bool TableModel::contains(const Eigen::VectorXd& x) const {
    return table_->contains(std::vector<double>(x.data(), x.data() + x.size()));
}

ModuliGeometry TableModel::at(const Eigen::VectorXd& x) const {
    return table_->interpolate(std::vector<double>(x.data(), x.data() + x.size()));
}

std::vector<double> TableModel::to_raw(const Eigen::VectorXd& x) const {
    std::vector<double> v(x.data(), x.data() + x.size());
    return table_->kind() == GeometryTable::Kind::Polar ? pq_to_raw(v) : v;
}

std::vector<double> TableModel::to_raw_tangent(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const {
    if (table_->kind() != GeometryTable::Kind::Polar) return {v.data(), v.data() + v.size()};
    // q1 = P, q2 = (P² − Q)/4.
    const cplx P(x(0), x(1)), dP(v(0), v(1)), dQ(v(2), v(3));
    const cplx dq2 = 0.25 * (2.0 * P * dP - dQ);
    return {dP.real(), dP.imag(), dq2.real(), dq2.imag()};
}

Eigen::VectorXd TableModel::from_raw(const std::vector<double>& raw) const {
    const std::vector<double> x = table_->kind() == GeometryTable::Kind::Polar ? raw_to_pq(raw) : raw;
    return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

Eigen::VectorXd TableModel::from_raw_tangent(const std::vector<double>& raw, const std::vector<double>& v) const {
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    if (table_->kind() != GeometryTable::Kind::Polar) return w;
    return raw_to_pq_jacobian(raw) * w;
}

FunctionModel::FunctionModel(int dim, Eval eval, std::function<bool(const Eigen::VectorXd&)> inside)
    : dim_(dim), eval_(std::move(eval)), inside_(std::move(inside)) {}

bool FunctionModel::contains(const Eigen::VectorXd& x) const {
    return x.size() == dim_ && x.allFinite() && (!inside_ || inside_(x));
}

std::shared_ptr<MetricModel> flat_model(int dim, double c) {
    return std::make_shared<FunctionModel>(dim, [dim, c](const Eigen::VectorXd& x) {
        ModuliGeometry g;
        g.q = ModuliPoint::from_real(std::vector<double>(x.data(), x.data() + x.size()));
        g.g = c * Eigen::MatrixXd::Identity(dim, dim);
        g.frame = Eigen::MatrixXd::Identity(dim, dim) / std::sqrt(c);
        g.gamma.assign(dim, Eigen::MatrixXd::Zero(dim, dim));
        g.grad_v0 = Eigen::VectorXd::Zero(dim);
        return g;
    });
}

int EvolutionParams::nodes() const {
    const double cells = length / dx;
    const long m = std::lround(cells);
    if (std::abs(cells - static_cast<double>(m)) > 1e-9 * std::max(1.0, cells))
        throw ConfigError("domain length must be a multiple of dx");
    return static_cast<int>(domain == Domain::Torus ? m : m + 1);
}

void EvolutionParams::validate() const {
    if (!(kappa0 >= 0.0 && kappa0 <= 1.0) || !(kappa1 >= 0.0 && kappa1 <= 1.0))
        throw ConfigError("kappa0 and kappa1 must lie in [0, 1]");
    if (kappa0 == 0.0 && kappa1 <= 0.0) throw ConfigError("kappa1 must be positive when kappa0 = 0");
    if (!std::isfinite(iota)) throw ConfigError("iota must be finite");
    if (!(dx > 0.0) || !(dt > 0.0) || !(length > 0.0)) throw ConfigError("dx, dt and length must be positive");
    if (nodes() < 3) throw ConfigError("filament needs at least three nodes");
    constexpr double slack = 1.0 + 1e-12;
    if (kappa0 > 0.0 && dt > 0.5 * dx * std::sqrt(kappa0) * slack)
        throw ConfigError("time step violates dt <= 0.5 dx sqrt(kappa0)");
    if (kappa0 == 0.0 && dt > 0.25 * dx * dx * kappa1 * slack)
        throw ConfigError("time step violates dt <= 0.25 dx^2 kappa1");
}

EvolutionState make_state(const EvolutionParams& params, const MetricModel& model,
                          const std::function<Eigen::VectorXd(double)>& q0,
                          const std::function<Eigen::VectorXd(double)>& v0) {
    params.validate();
    const int m = params.nodes(), d = model.dim();
    EvolutionState s;
    s.q.resize(d, m);
    for (int j = 0; j < m; ++j) {
        const Eigen::VectorXd x = q0(params.x(j));
        if (x.size() != d) throw ConfigError("initial profile has the wrong dimension");
        if (!model.contains(x)) throw EvolutionError("initial profile outside the geometry table", j, 0.0);
        s.q.col(j) = x;
    }
    if (params.kappa0 > 0.0) {
        s.p = Eigen::MatrixXd::Zero(d, m);
        if (v0)
            for (int j = 0; j < m; ++j)
                if (is_moving(j, m, params.domain)) s.p.col(j) = v0(params.x(j));
    }
    return s;
}

EvolutionState step(const EvolutionState& s, const EvolutionParams& params, const MetricModel& model) {
    params.validate();
    const int m = static_cast<int>(s.q.cols());
    if (m != params.nodes() || s.q.rows() != model.dim()) throw ConfigError("state does not match parameters");
    if (params.kappa0 > 0.0 && (s.p.rows() != s.q.rows() || s.p.cols() != m))
        throw ConfigError("hyperbolic step needs a velocity for every node");
    const double dt = params.dt;
    const double t = s.time(dt);
    EvolutionState out = s;
    ++out.step;

    if (params.kappa0 == 0.0) {
        const std::vector<ModuliGeometry> geo = geometry_at(s.q, model, t);
        const Eigen::MatrixXd f = node_forces(s.q, geo, params);
        for (int j = 0; j < m; ++j)
            if (is_moving(j, m, params.domain)) out.q.col(j) += dt / params.kappa1 * f.col(j);
        geometry_at(out.q, model, t + dt);
        return out;
    }

    // Velocity Verlet for κ0(q̈ + Γ(q̇, q̇)) = F with the damping split off as exact
    // exponential half steps. The closing kick is implicit in q̇ and solved by
    // fixed-point iteration.
    const double k0 = params.kappa0;
    const double damp = std::exp(-0.5 * params.kappa1 * dt / k0);
    const auto accel = [&](const std::vector<ModuliGeometry>& geo, const Eigen::MatrixXd& f, const Eigen::MatrixXd& p,
                           int j) -> Eigen::VectorXd {
        return f.col(j) / k0 - contract(geo[j].gamma, p.col(j), p.col(j));
    };

    Eigen::MatrixXd p = damp * s.p;
    const std::vector<ModuliGeometry> geo0 = geometry_at(s.q, model, t);
    const Eigen::MatrixXd f0 = node_forces(s.q, geo0, params);
    Eigen::MatrixXd half = p;
    for (int j = 0; j < m; ++j)
        if (is_moving(j, m, params.domain)) {
            half.col(j) = p.col(j) + 0.5 * dt * accel(geo0, f0, p, j);
            out.q.col(j) += dt * half.col(j);
        }
    const std::vector<ModuliGeometry> geo1 = geometry_at(out.q, model, t + dt);
    const Eigen::MatrixXd f1 = node_forces(out.q, geo1, params);
    Eigen::MatrixXd next = half;
    for (int j = 0; j < m; ++j) {
        if (!is_moving(j, m, params.domain)) continue;
        Eigen::VectorXd v = half.col(j);
        for (int it = 0; it < 50; ++it) {
            const Eigen::VectorXd w = half.col(j) + 0.5 * dt * (f1.col(j) / k0 - contract(geo1[j].gamma, v, v));
            const double change = (w - v).lpNorm<Eigen::Infinity>();
            v = w;
            if (change <= 1e-15 * std::max(1.0, v.lpNorm<Eigen::Infinity>())) break;
        }
        next.col(j) = v;
    }
    out.p = damp * next;
    if (!out.p.allFinite()) throw EvolutionError("non-finite velocity", -1, t + dt);
    return out;
}

double energy(const EvolutionState& s, const EvolutionParams& params, const MetricModel& model) {
    const int m = static_cast<int>(s.q.cols());
    const std::vector<ModuliGeometry> geo = geometry_at(s.q, model, s.time(params.dt));
    double e = 0.0;
    for (int j = 0; j < m; ++j) {
        if (params.kappa0 > 0.0) e += 0.5 * params.kappa0 * s.p.col(j).dot(geo[j].g * s.p.col(j)) * params.dx;
        if (params.iota != 0.0) e += params.iota * geo[j].v0 * params.dx;
    }
    const int links = params.domain == Domain::Torus ? m : m - 1;
    for (int k = 0; k < links; ++k) {
        const int b = neighbor(k, 1, m, params.domain);
        const Eigen::VectorXd delta = s.q.col(b) - s.q.col(k);
        e += 0.5 * delta.dot(0.5 * (geo[k].g + geo[b].g) * delta) / params.dx;
    }
    return e;
}

Eigen::MatrixXd velocity(const EvolutionState& s, const EvolutionParams& params, const MetricModel& model) {
    if (params.kappa0 > 0.0) return s.p;
    const std::vector<ModuliGeometry> geo = geometry_at(s.q, model, s.time(params.dt));
    Eigen::MatrixXd v = node_forces(s.q, geo, params) / params.kappa1;
    const int m = static_cast<int>(s.q.cols());
    for (int j = 0; j < m; ++j)
        if (!is_moving(j, m, params.domain)) v.col(j).setZero();
    return v;
}

Eigen::MatrixXd filament_residual(const Eigen::MatrixXd& q, const Eigen::MatrixXd& qt, const Eigen::MatrixXd& qtt,
                                  const EvolutionParams& params, const MetricModel& model) {
    const std::vector<ModuliGeometry> geo = geometry_at(q, model, 0.0);
    Eigen::MatrixXd r = -node_forces(q, geo, params);
    for (int j = 0; j < q.cols(); ++j)
        r.col(j) += params.kappa0 * (qtt.col(j) + contract(geo[j].gamma, qt.col(j), qt.col(j))) +
                    params.kappa1 * qt.col(j);
    return r;
}

Trajectory run(const EvolutionState& s0, const EvolutionParams& params, const MetricModel& model, double T,
               int snapshot_every) {
    params.validate();
    if (!(T >= 0.0)) throw ConfigError("run time must be non-negative");
    if (snapshot_every < 1) throw ConfigError("snapshot_every must be at least 1");
    const long steps = static_cast<long>(std::floor(T / params.dt + 1e-9));
    Trajectory tr{params, {s0}};
    EvolutionState s = s0;
    for (long k = 1; k <= steps; ++k) {
        s = step(s, params, model);
        if (k % snapshot_every == 0) tr.snapshots.push_back(s);
    }
    return tr;
}

std::vector<GeodesicSample> geodesic_ode(const Eigen::VectorXd& q0, const Eigen::VectorXd& v0, double T,
                                         const MetricModel& model, double iota, double dt) {
    if (!(T >= 0.0) || !(dt > 0.0)) throw ConfigError("geodesic_ode needs T >= 0 and dt > 0");
    if (q0.size() != model.dim() || v0.size() != model.dim()) throw ConfigError("geodesic data has the wrong dimension");
    const long steps = std::max(1L, static_cast<long>(std::ceil(T / dt - 1e-9)));
    const double h = T / static_cast<double>(steps);
    const auto rhs = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& v, double t) {
        if (!q.allFinite() || !model.contains(q)) throw EvolutionError("geodesic left the geometry table", -1, t);
        const ModuliGeometry geo = model.at(q);
        Eigen::VectorXd a = -contract(geo.gamma, v, v);
        if (iota != 0.0) a -= iota * geo.g.ldlt().solve(geo.grad_v0);
        return a;
    };
    std::vector<GeodesicSample> path{{0.0, q0, v0}};
    if (T == 0.0) return path;
    Eigen::VectorXd q = q0, v = v0;
    for (long k = 0; k < steps; ++k) {
        const double t = k * h;
        const Eigen::VectorXd k1q = v, k1v = rhs(q, v, t);
        const Eigen::VectorXd k2q = v + 0.5 * h * k1v, k2v = rhs(q + 0.5 * h * k1q, k2q, t + 0.5 * h);
        const Eigen::VectorXd k3q = v + 0.5 * h * k2v, k3v = rhs(q + 0.5 * h * k2q, k3q, t + 0.5 * h);
        const Eigen::VectorXd k4q = v + h * k3v, k4v = rhs(q + h * k3q, k4q, t + h);
        q += h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q);
        v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        path.push_back({(k + 1) * h, q, v});
    }
    if (!model.contains(q)) throw EvolutionError("geodesic left the geometry table", -1, T);
    return path;
}

void write_trajectory_csv(const Trajectory& tr, const MetricModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    const int n = model.dim() / 2;
    out << "t,x3";
    for (int k = 1; k <= n; ++k) out << ",re_q" << k << ",im_q" << k;
    out << "\n" << std::setprecision(17);
    for (const auto& s : tr.snapshots) {
        const double t = s.time(tr.params.dt);
        for (int j = 0; j < s.q.cols(); ++j) {
            out << t << "," << tr.params.x(j);
            for (double v : model.to_raw(s.q.col(j))) out << "," << v;
            out << "\n";
        }
    }
}

}  // namespace ahm
