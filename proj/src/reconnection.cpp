#include "ahm/reconnection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>

namespace ahm {

namespace {

using Json = nlohmann::json;

void require_n2(const ModuliPoint& q) {
    if (q.n() != 2) throw ConfigError("the discriminant is defined for N = 2 only");
}

// Index of the cell [v[i], v[i+1]] holding x, clamped to the lattice.
int cell_of(const std::vector<double>& v, double x) {
    const auto it = std::upper_bound(v.begin(), v.end(), x);
    const int i = static_cast<int>(it - v.begin()) - 1;
    return std::clamp(i, 0, static_cast<int>(v.size()) - 2);
}

void check_axis(const std::vector<double>& v, const char* name) {
    if (v.size() < 2) throw ConfigError(std::string("lattice needs at least two ") + name + " samples");
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) throw ConfigError(std::string("lattice ") + name + " samples must increase");
}

// Perimeter of the node rectangle [j0, j1] x [k0, k1], counterclockwise in (x3, t),
// with `sub` interpolated points per lattice edge.
std::vector<std::pair<double, double>> perimeter(const CoefficientLattice& lat, int j0, int j1, int k0, int k1,
                                                 int sub) {
    const auto& x = lat.x3();
    const auto& t = lat.t();
    std::vector<std::pair<double, double>> pts;
    const auto edge = [&](double xa, double ta, double xb, double tb) {
        for (int s = 0; s < sub; ++s) {
            const double f = static_cast<double>(s) / sub;
            pts.emplace_back(xa + f * (xb - xa), ta + f * (tb - ta));
        }
    };
    for (int j = j0; j < j1; ++j) edge(x[j], t[k0], x[j + 1], t[k0]);
    for (int k = k0; k < k1; ++k) edge(x[j1], t[k], x[j1], t[k + 1]);
    for (int j = j1; j > j0; --j) edge(x[j], t[k1], x[j - 1], t[k1]);
    for (int k = k1; k > k0; --k) edge(x[j0], t[k], x[j0], t[k - 1]);
    return pts;
}

double min_root_gap(const std::vector<cplx>& r) {
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < r.size(); ++a)
        for (std::size_t b = a + 1; b < r.size(); ++b) gap = std::min(gap, std::abs(r[a] - r[b]));
    return gap;
}

}  // namespace

std::vector<cplx> roots_of_moduli(const ModuliPoint& q) {
    for (const cplx& c : q.coeffs)
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw ConfigError("non-finite moduli coordinates");
    return polynomial_roots(q);
}

cplx discriminant(const ModuliPoint& q) {
    require_n2(q);
    return q.coeffs[0] * q.coeffs[0] - 4.0 * q.coeffs[1];
}

CoefficientLattice::CoefficientLattice(std::vector<double> x3, std::vector<double> t)
    : x3_(std::move(x3)), t_(std::move(t)) {
    check_axis(x3_, "x3");
    check_axis(t_, "t");
    q1_.assign(x3_.size() * t_.size(), 0.0);
    q2_.assign(x3_.size() * t_.size(), 0.0);
}

void CoefficientLattice::set(int j, int k, const ModuliPoint& q) {
    require_n2(q);
    q1_.at(index(j, k)) = q.coeffs[0];
    q2_.at(index(j, k)) = q.coeffs[1];
}

ModuliPoint CoefficientLattice::at(int j, int k) const {
    return ModuliPoint({q1_.at(index(j, k)), q2_.at(index(j, k))});
}

bool CoefficientLattice::contains(double x3, double t) const {
    return x3 >= x3_.front() && x3 <= x3_.back() && t >= t_.front() && t <= t_.back();
}

ModuliPoint CoefficientLattice::eval(double x3, double t) const {
    if (!contains(x3, t)) throw RangeError("point outside the coefficient lattice");
    const int j = cell_of(x3_, x3), k = cell_of(t_, t);
    const double a = (x3 - x3_[j]) / (x3_[j + 1] - x3_[j]);
    const double b = (t - t_[k]) / (t_[k + 1] - t_[k]);
    const auto mix = [&](const std::vector<cplx>& v) {
        return (1 - a) * (1 - b) * v[index(j, k)] + a * (1 - b) * v[index(j + 1, k)] +
               a * b * v[index(j + 1, k + 1)] + (1 - a) * b * v[index(j, k + 1)];
    };
    return ModuliPoint({mix(q1_), mix(q2_)});
}

CoefficientLattice sample_lattice(const std::function<ModuliPoint(double, double)>& q, const std::vector<double>& x3,
                                  const std::vector<double>& t) {
    CoefficientLattice lat(x3, t);
    for (int k = 0; k < lat.nt(); ++k)
        for (int j = 0; j < lat.nx(); ++j) lat.set(j, k, q(x3[j], t[k]));
    return lat;
}

CoefficientLattice trajectory_lattice(const Trajectory& tr, const MetricModel& model) {
    if (tr.snapshots.empty()) throw ConfigError("empty trajectory");
    const int m = tr.params.nodes();
    std::vector<double> x(m), t;
    for (int j = 0; j < m; ++j) x[j] = tr.params.x(j);
    for (const auto& s : tr.snapshots) t.push_back(s.time(tr.params.dt));
    CoefficientLattice lat(x, t);
    for (int k = 0; k < lat.nt(); ++k)
        for (int j = 0; j < m; ++j)
            lat.set(j, k, ModuliPoint::from_real(model.to_raw(tr.snapshots[k].q.col(j))));
    return lat;
}

CoefficientLattice two_sided_lattice(const Trajectory& backward, const Trajectory& forward,
                                     const MetricModel& model) {
    const CoefficientLattice b = trajectory_lattice(backward, model);
    const CoefficientLattice f = trajectory_lattice(forward, model);
    if (b.x3() != f.x3()) throw ConfigError("backward and forward runs use different x3 nodes");
    if (b.t().front() != f.t().front()) throw ConfigError("backward and forward runs start at different times");
    const double t0 = f.t().front();
    std::vector<double> t;
    for (int k = b.nt() - 1; k > 0; --k) t.push_back(2.0 * t0 - b.t()[k]);
    t.insert(t.end(), f.t().begin(), f.t().end());
    CoefficientLattice out(f.x3(), t);
    int row = 0;
    for (int k = b.nt() - 1; k > 0; --k, ++row)
        for (int j = 0; j < out.nx(); ++j) out.set(j, row, b.at(j, k));
    for (int k = 0; k < f.nt(); ++k, ++row)
        for (int j = 0; j < out.nx(); ++j) out.set(j, row, f.at(j, k));
    return out;
}

int winding_number(const std::vector<cplx>& loop) {
    if (loop.empty()) throw RangeError("empty loop");
    double total = 0.0;
    for (std::size_t k = 0; k < loop.size(); ++k) {
        const cplx a = loop[k], b = loop[(k + 1) % loop.size()];
        if (std::abs(a) < 1e-12) throw RangeError("loop touches zero");
        const double step = std::arg(b / a);
        if (std::abs(step) >= M_PI - 1e-12) throw RangeError("loop is undersampled");
        total += step;
    }
    return static_cast<int>(std::lround(total / (2.0 * M_PI)));
}

BranchPath continue_branch(const std::vector<ModuliPoint>& path, cplx z1, bool closed) {
    if (path.empty()) throw ConfigError("empty continuation path");
    const int n = path.front().n();
    if (std::abs(path.front().eval(z1)) > 1e-8 * std::pow(1.0 + std::abs(z1), n))
        throw PreconditionError("starting point is not a root");
    const double gap0 = min_root_gap(roots_of_moduli(path.front()));
    BranchPath out;
    out.zeta.push_back(z1);
    const std::size_t steps = closed ? path.size() : path.size() - 1;
    for (std::size_t s = 1; s <= steps; ++s) {
        const ModuliPoint& q = path[s % path.size()];
        const std::vector<cplx> roots = roots_of_moduli(q);
        const cplx prev = out.zeta.back();
        std::vector<double> dist;
        for (const cplx& r : roots) dist.push_back(std::abs(r - prev));
        std::vector<std::size_t> order(roots.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
        if (order.size() > 1) {
            if (dist[order[1]] - dist[order[0]] < 1e-9)
                throw ContinuationError("nearest root is ambiguous; sample the path more densely");
            if (min_root_gap(roots) <= 2.0 * dist[order[0]])
                throw ContinuationError("roots move too far per step; sample the path more densely");
        }
        out.zeta.push_back(roots[order[0]]);
    }
    out.swapped = closed && std::abs(out.zeta.back() - z1) > 0.5 * gap0;
    return out;
}

std::vector<ReconnectionEvent> detect_events(const CoefficientLattice& lat, const DetectOptions& opts) {
    const auto& x = lat.x3();
    const auto& t = lat.t();
    const auto D = [&](double a, double b) { return lat.d_eval(a, b); };
    std::vector<ReconnectionEvent> events;
    std::vector<std::pair<int, int>> cells;
    for (int k = 0; k + 1 < lat.nt(); ++k) {
        for (int j = 0; j + 1 < lat.nx(); ++j) {
            const cplx c[4] = {lat.d(j, k), lat.d(j + 1, k), lat.d(j, k + 1), lat.d(j + 1, k + 1)};
            double re_lo = c[0].real(), re_hi = re_lo, im_lo = c[0].imag(), im_hi = im_lo;
            for (const cplx& v : c) {
                re_lo = std::min(re_lo, v.real());
                re_hi = std::max(re_hi, v.real());
                im_lo = std::min(im_lo, v.imag());
                im_hi = std::max(im_hi, v.imag());
            }
            if (re_lo > 0.0 || re_hi < 0.0 || im_lo > 0.0 || im_hi < 0.0) continue;

            const double hx = x[j + 1] - x[j], ht = t[k + 1] - t[k];
            ReconnectionEvent ev;
            double a = 0.5 * (x[j] + x[j + 1]), b = 0.5 * (t[k] + t[k + 1]);
            bool inside = true;
            for (int it = 0; it < opts.max_newton && inside; ++it) {
                const cplx f = D(a, b);
                if (std::abs(f) <= opts.tol) {
                    ev.converged = true;
                    break;
                }
                const double sx = 1e-6 * hx, st = 1e-6 * ht;
                const double a_lo = std::max(x.front(), a - sx), a_hi = std::min(x.back(), a + sx);
                const double b_lo = std::max(t.front(), b - st), b_hi = std::min(t.back(), b + st);
                const cplx fx = (D(a_hi, b) - D(a_lo, b)) / (a_hi - a_lo);
                const cplx ft = (D(a, b_hi) - D(a, b_lo)) / (b_hi - b_lo);
                const double det = fx.real() * ft.imag() - ft.real() * fx.imag();
                if (det == 0.0) break;
                a -= (f.real() * ft.imag() - ft.real() * f.imag()) / det;
                b -= (fx.real() * f.imag() - f.real() * fx.imag()) / det;
                inside = std::isfinite(a) && std::isfinite(b) && lat.contains(a, b);
            }
            if (!inside || !ev.converged) {
                ev.converged = false;
                a = 0.5 * (x[j] + x[j + 1]);
                b = 0.5 * (t[k] + t[k + 1]);
            }
            ev.x3 = a;
            ev.t = b;
            ev.d = D(a, b);

            // Drop repeats of an accepted event; nearby distinct candidates are merged and flagged.
            bool absorbed = false;
            for (auto& prev : events) {
                const double cx = std::abs(prev.x3 - a) / hx, ct = std::abs(prev.t - b) / ht;
                if (std::max(cx, ct) < 1e-6 && prev.converged == ev.converged) {
                    absorbed = true;
                    break;
                }
                if (std::max(cx, ct) <= opts.merge_cells) {
                    prev.merged = true;
                    absorbed = true;
                    break;
                }
            }
            if (absorbed) continue;

            const int jc = cell_of(x, a), kc = cell_of(t, b);
            const double ex = std::min({0.5 * hx, a - x.front(), x.back() - a});
            const double et = std::min({0.5 * ht, b - t.front(), t.back() - b});
            if (ex > 0.0) ev.d3 = (D(a + ex, b) - D(a - ex, b)) / (2.0 * ex);
            if (et > 0.0) ev.dt = (D(a, b + et) - D(a, b - et)) / (2.0 * et);
            ev.determinant = ev.d3.real() * ev.dt.imag() - ev.d3.imag() * ev.dt.real();
            const double scale = std::abs(ev.d3) * std::abs(ev.dt);
            const bool independent = scale > 0.0 && std::abs(ev.determinant) > 1e-8 * scale;

            const int j0 = std::max(0, jc - opts.window), j1 = std::min(lat.nx() - 1, jc + 1 + opts.window);
            const int k0 = std::max(0, kc - opts.window), k1 = std::min(lat.nt() - 1, kc + 1 + opts.window);
            const auto loop = perimeter(lat, j0, j1, k0, k1, 8);
            std::vector<cplx> dl;
            std::vector<ModuliPoint> ql;
            for (const auto& [px, pt] : loop) {
                ql.push_back(lat.eval(px, pt));
                dl.push_back(discriminant(ql.back()));
            }
            try {
                ev.winding = winding_number(dl);
                ev.swapped = continue_branch(ql, roots_of_moduli(ql.front())[0], true).swapped;
            } catch (const RangeError&) {
                ev.winding = 0;
            }
            // An isolated transversal zero has local degree ±1.
            ev.transversal = independent && std::abs(ev.winding) == 1;
            events.push_back(ev);
        }
    }
    return events;
}

std::vector<CenterlinePoint> centerlines(const CoefficientLattice& lat, int k) {
    if (k < 0 || k >= lat.nt()) throw RangeError("snapshot index outside the lattice");
    const int m = lat.nx();
    std::vector<std::vector<cplx>> roots(m);
    std::vector<cplx> d(m);
    for (int j = 0; j < m; ++j) {
        roots[j] = roots_of_moduli(lat.at(j, k));
        d[j] = lat.d(j, k);
    }
    // A segment is near a discriminant zero when the interpolated D passes within half its step of 0.
    std::vector<bool> near(m, false);
    for (int j = 0; j + 1 < m; ++j) {
        const cplx step = d[j + 1] - d[j];
        const double n2 = std::norm(step);
        const double s = n2 > 0.0 ? std::clamp(-std::real(std::conj(step) * d[j]) / n2, 0.0, 1.0) : 0.0;
        if (std::abs(d[j] + s * step) <= 0.5 * std::abs(step)) near[j] = near[j + 1] = true;
    }
    std::vector<cplx> cur = roots[0];
    std::sort(cur.begin(), cur.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    std::vector<CenterlinePoint> out;
    for (int j = 0; j < m; ++j) {
        if (j > 0) {
            std::vector<cplx> next(cur.size());
            std::vector<bool> used(roots[j].size(), false);
            for (std::size_t b = 0; b < cur.size(); ++b) {
                std::size_t best = 0;
                double bd = std::numeric_limits<double>::infinity();
                for (std::size_t r = 0; r < roots[j].size(); ++r) {
                    if (used[r]) continue;
                    const double dd = std::abs(roots[j][r] - cur[b]);
                    if (dd < bd) {
                        bd = dd;
                        best = r;
                    }
                }
                used[best] = true;
                next[b] = roots[j][best];
            }
            cur = next;
        }
        for (std::size_t b = 0; b < cur.size(); ++b)
            out.push_back({lat.x3()[j], cur[b], near[j] ? -1 : static_cast<int>(b)});
    }
    return out;
}

void write_centerlines_csv(const std::vector<CenterlinePoint>& pts, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << "x3,re_z,im_z,branch\n" << std::setprecision(17);
    for (const auto& p : pts) {
        out << p.x3 << "," << p.z.real() << "," << p.z.imag() << ",";
        if (p.branch >= 0) out << p.branch;
        out << "\n";
    }
}

void write_events_json(const std::vector<ReconnectionEvent>& events, const std::string& path) {
    Json arr = Json::array();
    for (const auto& e : events) {
        arr.push_back({{"x3", e.x3},
                       {"t", e.t},
                       {"d", {e.d.real(), e.d.imag()}},
                       {"d_x3", {e.d3.real(), e.d3.imag()}},
                       {"d_t", {e.dt.real(), e.dt.imag()}},
                       {"determinant", e.determinant},
                       {"winding", e.winding},
                       {"transversal", e.transversal},
                       {"converged", e.converged},
                       {"merged", e.merged},
                       {"swapped", e.swapped}});
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << std::setw(2) << Json{{"events", arr}} << "\n";
}

}  // namespace ahm
