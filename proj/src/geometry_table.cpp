#include "ahm/moduli.hpp"

#include <cmath>
#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>

#include "ahm/hash.hpp"

namespace ahm {

namespace {

using Json = nlohmann::json;

constexpr char kBinaryMagic[8] = {'A', 'H', 'M', 'G', '0', '0', '0', '1'};

// Cubic Hermite interpolant on increasing nodes with zero slope at the first
// node (functions of |Q| that are smooth in Q) and one-sided slope at the last.
struct EvenSpline {
    std::vector<double> x, y, m;

    EvenSpline(std::vector<double> xs, std::vector<double> ys) : x(std::move(xs)), y(std::move(ys)), m(x.size(), 0.0) {
        const std::size_t n = x.size();
        if (n < 2) return;
        for (std::size_t k = 1; k + 1 < n; ++k) {
            const double h0 = x[k] - x[k - 1], h1 = x[k + 1] - x[k];
            const double s0 = (y[k] - y[k - 1]) / h0, s1 = (y[k + 1] - y[k]) / h1;
            m[k] = (h1 * s0 + h0 * s1) / (h0 + h1);
        }
        m[n - 1] = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
    }

    // Value and derivative at t.
    std::pair<double, double> eval(double t) const {
        if (x.size() == 1) return {y[0], 0.0};
        std::size_t k = 0;
        while (k + 2 < x.size() && t > x[k + 1]) ++k;
        const double h = x[k + 1] - x[k];
        const double s = (t - x[k]) / h;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
        const double d00 = 6 * s * s - 6 * s, d10 = 3 * s * s - 4 * s + 1;
        const double d01 = 6 * s - 6 * s * s, d11 = 3 * s * s - 2 * s;
        const double v = h00 * y[k] + h10 * h * m[k] + h01 * y[k + 1] + h11 * h * m[k + 1];
        const double dv = (d00 * y[k] + d01 * y[k + 1]) / h + d10 * m[k] + d11 * m[k + 1];
        return {v, dv};
    }
};

// 2x2 real matrix of multiplication by w on C = R².
Eigen::Matrix2d cmul(cplx w) {
    Eigen::Matrix2d m;
    m << w.real(), -w.imag(), w.imag(), w.real();
    return m;
}

Christoffels zero_christoffels(int d) { return Christoffels(d, Eigen::MatrixXd::Zero(d, d)); }

}  // namespace

std::vector<double> raw_to_pq(const std::vector<double>& q) {
    if (q.size() != 4) throw ConfigError("(P, Q) coordinates need N = 2");
    const cplx q1(q[0], q[1]), q2(q[2], q[3]);
    const cplx Q = q1 * q1 - 4.0 * q2;
    return {q1.real(), q1.imag(), Q.real(), Q.imag()};
}

std::vector<double> pq_to_raw(const std::vector<double>& pq) {
    if (pq.size() != 4) throw ConfigError("(P, Q) coordinates need N = 2");
    const cplx P(pq[0], pq[1]), Q(pq[2], pq[3]);
    const cplx q2 = 0.25 * (P * P - Q);
    return {P.real(), P.imag(), q2.real(), q2.imag()};
}

Eigen::MatrixXd raw_to_pq_jacobian(const std::vector<double>& q) {
    if (q.size() != 4) throw ConfigError("(P, Q) coordinates need N = 2");
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(4, 4);
    j.block<2, 2>(0, 0) = Eigen::Matrix2d::Identity();
    j.block<2, 2>(2, 0) = cmul(2.0 * cplx(q[0], q[1]));
    j.block<2, 2>(2, 2) = -4.0 * Eigen::Matrix2d::Identity();
    return j;
}

ModuliGeometry direct_geometry(const ModuliPoint& q, const Grid2& grid, double christoffel_step,
                               const ModuliOptions& opts) {
    const PointAnalysis base = analyze_point(q, grid, opts);
    const ChristoffelResult cr = christoffels(base, christoffel_step, false, opts);
    if (cr.near_degenerate) throw GeometryError("metric nearly degenerate at requested point");
    const PotentialValue pv = potential_v0(base);
    return {q, base.g, orthonormal_frame(base.g), cr.gamma, pv.v0, pv.grad};
}

GeometryTable GeometryTable::build_lattice(const LatticeSpec& spec, const Grid2& grid, bool use_translation_symmetry,
                                           const ModuliOptions& opts) {
    if (spec.nodes_re < 1 || spec.nodes_im < 1) throw ConfigError("lattice needs at least one node per axis");
    if (spec.re_max < spec.re_min || spec.im_max < spec.im_min) throw ConfigError("lattice bounds are inverted");
    if ((spec.nodes_re == 1) != (spec.re_max == spec.re_min) || (spec.nodes_im == 1) != (spec.im_max == spec.im_min))
        throw ConfigError("single-node lattice axes must have zero extent");
    GeometryTable t;
    t.kind_ = Kind::Lattice;
    t.n_ = 1;
    t.grid_ = grid;
    t.lattice_ = spec;
    const auto node = [&](int a, int b) {
        const double re = spec.nodes_re == 1 ? spec.re_min
                                             : spec.re_min + (spec.re_max - spec.re_min) * a / (spec.nodes_re - 1);
        const double im = spec.nodes_im == 1 ? spec.im_min
                                             : spec.im_min + (spec.im_max - spec.im_min) * b / (spec.nodes_im - 1);
        return ModuliPoint({cplx(re, im)});
    };
    // Every node must be resolvable even when only one is solved.
    for (int b = 0; b < spec.nodes_im; ++b)
        for (int a = 0; a < spec.nodes_re; ++a) check_resolution(node(a, b), grid);
    std::optional<ModuliGeometry> shared;
    for (int b = 0; b < spec.nodes_im; ++b)
        for (int a = 0; a < spec.nodes_re; ++a) {
            const ModuliPoint q = node(a, b);
            if (use_translation_symmetry) {
                if (!shared) {
                    // A constant table metric has vanishing connection and a constant potential.
                    const PointAnalysis a = analyze_point(ModuliPoint({cplx(0.0, 0.0)}), grid, opts);
                    const PotentialValue pv = potential_v0(a);
                    shared = ModuliGeometry{a.sol.q, a.g, orthonormal_frame(a.g), zero_christoffels(2), pv.v0,
                                            Eigen::VectorXd::Zero(2)};
                }
                ModuliGeometry rec = *shared;
                rec.q = q;
                t.records_.push_back(std::move(rec));
            } else {
                t.records_.push_back(direct_geometry(q, grid, 1e-2, opts));
            }
        }
    return t;
}

GeometryTable GeometryTable::build_polar(const PolarSpec& spec, const Grid2& grid, const ModuliOptions& opts) {
    if (spec.radii.size() < 2) throw ConfigError("polar table needs at least two radii");
    if (spec.radii[0] != 0.0) throw ConfigError("polar table radii must start at 0");
    for (std::size_t k = 1; k < spec.radii.size(); ++k)
        if (!(spec.radii[k] > spec.radii[k - 1])) throw ConfigError("polar table radii must increase");
    check_resolution(ModuliPoint::from_real(pq_to_raw({0.0, 0.0, spec.radii.back(), 0.0})), grid);

    GeometryTable t;
    t.kind_ = Kind::Polar;
    t.n_ = 2;
    t.grid_ = grid;
    t.polar_ = spec;
    std::optional<VortexSolution> last;
    for (double r : spec.radii) {
        const std::vector<double> raw = pq_to_raw({0.0, 0.0, r, 0.0});
        const ModuliPoint q = ModuliPoint::from_real(raw);
        PointAnalysis a = analyze_point(q, grid, opts, last ? &last->v : nullptr);
        const PotentialValue pv = potential_v0(a);
        const Eigen::MatrixXd jinv = raw_to_pq_jacobian(raw).inverse();
        ModuliGeometry rec;
        rec.q = q;
        rec.g = jinv.transpose() * a.g * jinv;
        rec.frame = orthonormal_frame(rec.g);
        rec.v0 = pv.v0;
        rec.grad_v0 = jinv.transpose() * pv.grad;
        t.records_.push_back(std::move(rec));
        last = std::move(a.sol);
    }
    for (std::size_t k = 0; k < spec.radii.size(); ++k)
        t.records_[k].gamma = t.interpolate({0.0, 0.0, spec.radii[k], 0.0}).gamma;
    return t;
}

bool GeometryTable::contains(const std::vector<double>& x) const {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    if (kind_ == Kind::Lattice) {
        if (x.size() != 2) return false;
        constexpr double tol = 1e-12;
        return x[0] >= lattice_.re_min - tol && x[0] <= lattice_.re_max + tol && x[1] >= lattice_.im_min - tol &&
               x[1] <= lattice_.im_max + tol;
    }
    if (x.size() != 4) return false;
    return std::hypot(x[2], x[3]) <= polar_.radii.back() * (1.0 + 1e-12);
}

ModuliGeometry GeometryTable::interpolate(const std::vector<double>& x) const {
    if (records_.empty()) throw RangeError("geometry table is empty");
    if (!contains(x)) throw RangeError("query outside the geometry table");

    if (kind_ == Kind::Lattice) {
        const auto locate = [](double v, double lo, double hi, int nodes, int& k, double& w) {
            if (nodes == 1) {
                k = 0;
                w = 0.0;
                return;
            }
            const double s = std::clamp((v - lo) / (hi - lo) * (nodes - 1), 0.0, static_cast<double>(nodes - 1));
            k = std::min(static_cast<int>(s), nodes - 2);
            w = s - k;
        };
        int a = 0, b = 0;
        double wa = 0.0, wb = 0.0;
        locate(x[0], lattice_.re_min, lattice_.re_max, lattice_.nodes_re, a, wa);
        locate(x[1], lattice_.im_min, lattice_.im_max, lattice_.nodes_im, b, wb);
        const int a1 = std::min(a + 1, lattice_.nodes_re - 1), b1 = std::min(b + 1, lattice_.nodes_im - 1);
        const auto rec = [&](int i, int j) -> const ModuliGeometry& { return records_[j * lattice_.nodes_re + i]; };
        const ModuliGeometry* corner[4] = {&rec(a, b), &rec(a1, b), &rec(a, b1), &rec(a1, b1)};
        const double w[4] = {(1 - wa) * (1 - wb), wa * (1 - wb), (1 - wa) * wb, wa * wb};
        ModuliGeometry out;
        out.q = ModuliPoint({cplx(x[0], x[1])});
        out.g = w[0] * corner[0]->g;
        out.gamma = corner[0]->gamma;
        for (auto& m : out.gamma) m *= w[0];
        out.v0 = w[0] * corner[0]->v0;
        out.grad_v0 = w[0] * corner[0]->grad_v0;
        for (int c = 1; c < 4; ++c) {
            out.g += w[c] * corner[c]->g;
            for (std::size_t mu = 0; mu < out.gamma.size(); ++mu) out.gamma[mu] += w[c] * corner[c]->gamma[mu];
            out.v0 += w[c] * corner[c]->v0;
            out.grad_v0 += w[c] * corner[c]->grad_v0;
        }
        out.frame = orthonormal_frame(out.g);
        return out;
    }

    const double r = std::hypot(x[2], x[3]);
    const EvenSpline fs(polar_.radii, q_block());
    const EvenSpline vs(polar_.radii, v0_by_radius());
    const auto [f, df] = fs.eval(r);
    const auto [v, dv] = vs.eval(r);
    if (!(f > 0.0)) throw GeometryError("interpolated Q-block metric is not positive");
    const double cp = p_constant();

    ModuliGeometry out;
    out.q = ModuliPoint::from_real(pq_to_raw(x));
    out.g = Eigen::MatrixXd::Zero(4, 4);
    out.g.diagonal() << cp, cp, f, f;
    out.frame = Eigen::MatrixXd::Zero(4, 4);
    out.frame.diagonal() << 1 / std::sqrt(cp), 1 / std::sqrt(cp), 1 / std::sqrt(f), 1 / std::sqrt(f);
    // Conformal Q-block f = e^{2σ}: Γ^k_ij = δ_ik ∂_jσ + δ_jk ∂_iσ − δ_ij ∂_kσ.
    out.gamma = zero_christoffels(4);
    double s[2] = {0.0, 0.0};
    if (r > 0.0) {
        s[0] = 0.5 * df / f * x[2] / r;
        s[1] = 0.5 * df / f * x[3] / r;
    }
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                out.gamma[2 + k](2 + i, 2 + j) = (i == k ? s[j] : 0.0) + (j == k ? s[i] : 0.0) - (i == j ? s[k] : 0.0);
    out.v0 = v;
    out.grad_v0 = Eigen::VectorXd::Zero(4);
    if (r > 0.0) {
        out.grad_v0(2) = dv * x[2] / r;
        out.grad_v0(3) = dv * x[3] / r;
    }
    return out;
}

std::vector<double> GeometryTable::p_block() const {
    if (kind_ != Kind::Polar) throw ConfigError("p_block needs an N = 2 polar table");
    std::vector<double> out;
    for (const auto& r : records_) out.push_back(0.5 * (r.g(0, 0) + r.g(1, 1)));
    return out;
}

std::vector<double> GeometryTable::q_block() const {
    if (kind_ != Kind::Polar) throw ConfigError("q_block needs an N = 2 polar table");
    std::vector<double> out;
    for (const auto& r : records_) out.push_back(0.5 * (r.g(2, 2) + r.g(3, 3)));
    return out;
}

std::vector<double> GeometryTable::v0_by_radius() const {
    std::vector<double> out;
    for (const auto& r : records_) out.push_back(r.v0);
    return out;
}

double GeometryTable::p_constant() const {
    const std::vector<double> p = p_block();
    double s = 0.0;
    for (double v : p) s += v;
    return s / static_cast<double>(p.size());
}

std::string GeometryTable::metadata_json() const {
    Json j;
    j["format"] = "ahm-geometry-1";
    j["kind"] = kind_ == Kind::Lattice ? "lattice" : "polar";
    j["vortex_number"] = n_;
    j["grid"] = {{"half_width", grid_.half_width()}, {"points_per_axis", grid_.n()}};
    if (kind_ == Kind::Lattice)
        j["lattice"] = {{"re_min", lattice_.re_min}, {"re_max", lattice_.re_max},   {"im_min", lattice_.im_min},
                        {"im_max", lattice_.im_max}, {"nodes_re", lattice_.nodes_re}, {"nodes_im", lattice_.nodes_im}};
    else
        j["polar"] = {{"radii", polar_.radii}};
    j["records"] = records_.size();
    j["record_layout"] = "q[2N] g[d*d] frame[d*d] gamma[d*d*d] v0 grad_v0[d], d = 2N, row-major";
    return j.dump(2);
}

std::vector<double> GeometryTable::binary_payload() const {
    std::vector<double> out;
    const int d = dim();
    for (const auto& r : records_) {
        for (double v : r.q.real_coords()) out.push_back(v);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) out.push_back(r.g(a, b));
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) out.push_back(r.frame(a, b));
        for (int mu = 0; mu < d; ++mu)
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) out.push_back(r.gamma[mu](a, b));
        out.push_back(r.v0);
        for (int a = 0; a < d; ++a) out.push_back(r.grad_v0(a));
    }
    return out;
}

std::string GeometryTable::content_hash() const {
    const std::vector<double> payload = binary_payload();
    std::string bytes = metadata_json();
    bytes.append(reinterpret_cast<const char*>(payload.data()), payload.size() * sizeof(double));
    return sha256_hex(bytes);
}

void GeometryTable::save(const std::string& json_path) const {
    static_assert(sizeof(double) == 8);
    Json meta = Json::parse(metadata_json());
    const std::string bin_path = json_path + ".bin";
    meta["binary"] = std::filesystem::path(bin_path).filename().string();
    meta["content_hash"] = content_hash();
    std::ofstream js(json_path);
    if (!js) throw ConfigError("cannot write " + json_path);
    js << meta.dump(2) << "\n";
    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) throw ConfigError("cannot write " + bin_path);
    const std::vector<double> payload = binary_payload();
    bin.write(kBinaryMagic, sizeof kBinaryMagic);
    bin.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size() * 8));
    if (!js || !bin) throw ConfigError("failed writing geometry table " + json_path);
}

GeometryTable GeometryTable::load(const std::string& json_path) {
    std::ifstream js(json_path);
    if (!js) throw ConfigError("cannot open geometry table " + json_path);
    Json meta;
    try {
        meta = Json::parse(js);
    } catch (const Json::exception& e) {
        throw ConfigError("geometry table " + json_path + ": " + e.what());
    }
    GeometryTable t;
    try {
        if (meta.at("format") != "ahm-geometry-1") throw ConfigError("unknown geometry table format");
        t.n_ = meta.at("vortex_number").get<int>();
        t.grid_ = Grid2(meta.at("grid").at("half_width").get<double>(), meta.at("grid").at("points_per_axis").get<int>());
        if (meta.at("kind") == "lattice") {
            t.kind_ = Kind::Lattice;
            const Json& l = meta.at("lattice");
            t.lattice_ = {l.at("re_min"), l.at("re_max"), l.at("im_min"), l.at("im_max"), l.at("nodes_re"),
                          l.at("nodes_im")};
        } else if (meta.at("kind") == "polar") {
            t.kind_ = Kind::Polar;
            t.polar_.radii = meta.at("polar").at("radii").get<std::vector<double>>();
        } else {
            throw ConfigError("unknown geometry table kind");
        }
    } catch (const Json::exception& e) {
        throw ConfigError("geometry table " + json_path + ": " + e.what());
    }
    const std::size_t count = meta.at("records").get<std::size_t>();
    const std::string bin_path =
        (std::filesystem::path(json_path).parent_path() / meta.at("binary").get<std::string>()).string();
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw ConfigError("cannot open " + bin_path);
    char magic[8];
    bin.read(magic, 8);
    if (!bin || std::memcmp(magic, kBinaryMagic, 8) != 0) throw ConfigError("bad geometry binary header");
    const int d = 2 * t.n_;
    const std::size_t per = 2 * t.n_ + 2 * d * d + d * d * d + 1 + d;
    std::vector<double> data(per * count);
    bin.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * 8));
    if (!bin) throw ConfigError("truncated geometry binary " + bin_path);
    std::size_t k = 0;
    for (std::size_t r = 0; r < count; ++r) {
        ModuliGeometry rec;
        std::vector<double> q(data.begin() + k, data.begin() + k + 2 * t.n_);
        k += 2 * t.n_;
        rec.q = ModuliPoint::from_real(q);
        rec.g.resize(d, d);
        rec.frame.resize(d, d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) rec.g(a, b) = data[k++];
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) rec.frame(a, b) = data[k++];
        rec.gamma = zero_christoffels(d);
        for (int mu = 0; mu < d; ++mu)
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) rec.gamma[mu](a, b) = data[k++];
        rec.v0 = data[k++];
        rec.grad_v0.resize(d);
        for (int a = 0; a < d; ++a) rec.grad_v0(a) = data[k++];
        t.records_.push_back(std::move(rec));
    }
    if (meta.contains("content_hash") && meta.at("content_hash") != t.content_hash())
        throw ConfigError("geometry table content hash mismatch for " + json_path);
    return t;
}

}  // namespace ahm
