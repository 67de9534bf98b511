#pragma once

// Finite-volume analogue of the sticky form. Nodes sit on a uniform vertex grid
// in the transverse coordinate; each sticky wall becomes a layer of boundary
// nodes carrying the (1 - theta) mass, and the interior carries theta. Edge
// coefficients use the geometric mean of the normalised densities, and the
// wall-to-interior edges use the interior formula with the trace of e^V, so
// the sticky coupling comes from the mass split alone.

#include "sticky/error.hpp"
#include "sticky/model.hpp"
#include "sticky/model_json.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace sticky {

/// Nodes whose normalised interior weight falls below this fraction of the
/// largest are cut off the far end of a half-line: they carry no measurable
/// mass and would only push the smallest node weight below double precision.
inline constexpr double kHalfLineMassFloor = 1e-13;

struct Node {
    Point p;
    bool boundary = false;
};

struct Edge {
    std::size_t i = 0;
    std::size_t j = 0;
    double w = 0.0;
};

struct InstanceMetadata {
    std::uint64_t model_hash = 0;
    std::size_t n_x = 0;
    std::size_t n_y = 1;
    double theta = 0.5;
    double delta = 0.0;
    double h_x = 0.0;
    double h_y = 0.0;
    double period_y = 0.0;
    double effective_length = 0.0;
};

/// A reversible finite-state model: weights m (summing to one) and a
/// symmetric form f^T E f = sum_edges w (f_i - f_j)^2.
struct DiscreteInstance {
    std::vector<Node> nodes;
    std::vector<double> m;
    std::vector<Edge> edges;
    InstanceMetadata metadata;

    std::size_t size() const { return m.size(); }

    bool is_boundary(std::size_t i) const { return nodes[i].boundary; }

    std::vector<std::uint8_t> boundary_mask() const {
        std::vector<std::uint8_t> out(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) out[i] = nodes[i].boundary ? 1 : 0;
        return out;
    }

    /// Orders the edges and builds the adjacency lists; must be called after
    /// edges change.
    void finalize() {
        const std::size_t n = size();
        for (auto& e : edges)
            if (e.i > e.j) std::swap(e.i, e.j);
        std::sort(edges.begin(), edges.end(),
                  [](const Edge& a, const Edge& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
        adj_start_.assign(n + 1, 0);
        for (const auto& e : edges) {
            ++adj_start_[e.i + 1];
            ++adj_start_[e.j + 1];
        }
        std::partial_sum(adj_start_.begin(), adj_start_.end(), adj_start_.begin());
        adj_node_.assign(2 * edges.size(), 0);
        adj_w_.assign(2 * edges.size(), 0.0);
        std::vector<std::size_t> fill(adj_start_.begin(), adj_start_.end() - 1);
        for (const auto& e : edges) {
            adj_node_[fill[e.i]] = e.j;
            adj_w_[fill[e.i]++] = e.w;
            adj_node_[fill[e.j]] = e.i;
            adj_w_[fill[e.j]++] = e.w;
        }
        degree_.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = adj_start_[i]; k < adj_start_[i + 1]; ++k) degree_[i] += adj_w_[k];
    }

    template <class Visit>
    void for_each_neighbor(std::size_t i, Visit&& visit) const {
        for (std::size_t k = adj_start_[i]; k < adj_start_[i + 1]; ++k) visit(adj_node_[k], adj_w_[k]);
    }

    /// Diagonal of E: the total edge weight at each node.
    const std::vector<double>& degree() const { return degree_; }

    double energy(std::span<const double> f) const {
        double s = 0.0;
        for (const auto& e : edges) {
            const double d = f[e.i] - f[e.j];
            s += e.w * d * d;
        }
        return s;
    }

    void apply_E(std::span<const double> f, std::span<double> out) const {
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i) {
            double s = degree_[i] * f[i];
            for (std::size_t k = adj_start_[i]; k < adj_start_[i + 1]; ++k) s -= adj_w_[k] * f[adj_node_[k]];
            out[i] = s;
        }
    }

    std::vector<double> apply_E(std::span<const double> f) const {
        std::vector<double> out(size());
        apply_E(f, out);
        return out;
    }

    double mean(std::span<const double> f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < size(); ++i) s += m[i] * f[i];
        return s;
    }

    double mean_square(std::span<const double> f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < size(); ++i) s += m[i] * f[i] * f[i];
        return s;
    }

    double mean_abs(std::span<const double> f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < size(); ++i) s += m[i] * std::abs(f[i]);
        return s;
    }

    /// Full E (diagonal included) as (row, col, value), row-major.
    std::vector<std::tuple<std::size_t, std::size_t, double>> triplets() const {
        std::vector<std::tuple<std::size_t, std::size_t, double>> out;
        out.reserve(size() + 2 * edges.size());
        for (std::size_t i = 0; i < size(); ++i) {
            out.emplace_back(i, i, degree_[i]);
            for (std::size_t k = adj_start_[i]; k < adj_start_[i + 1]; ++k) out.emplace_back(i, adj_node_[k], -adj_w_[k]);
        }
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
        });
        return out;
    }

    Eigen::MatrixXd dense_E() const {
        Eigen::MatrixXd E = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(size()));
        for (const auto& e : edges) {
            const auto i = static_cast<Eigen::Index>(e.i), j = static_cast<Eigen::Index>(e.j);
            E(i, i) += e.w;
            E(j, j) += e.w;
            E(i, j) -= e.w;
            E(j, i) -= e.w;
        }
        return E;
    }

    Eigen::SparseMatrix<double> sparse_E() const {
        std::vector<Eigen::Triplet<double>> t;
        for (const auto& [i, j, v] : triplets())
            t.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
        Eigen::SparseMatrix<double> E(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(size()));
        E.setFromTriplets(t.begin(), t.end());
        return E;
    }

    /// Periodic-aware distance between nodes (the y coordinate wraps on a strip).
    double distance(std::size_t i, std::size_t j) const {
        const double dx = nodes[i].p.x - nodes[j].p.x;
        double dy = std::abs(nodes[i].p.y - nodes[j].p.y);
        if (metadata.period_y > 0) dy = std::min(dy, metadata.period_y - dy);
        return std::hypot(dx, dy);
    }

private:
    std::vector<std::size_t> adj_start_;
    std::vector<std::size_t> adj_node_;
    std::vector<double> adj_w_;
    std::vector<double> degree_;
};

/// Checks the structural invariants; throws InvalidModel (or NegativeRate for a
/// negative edge) on failure.
inline void validate_instance(const DiscreteInstance& inst, bool check_theta_split = true) {
    require(inst.size() >= 2 && inst.nodes.size() == inst.size(), ErrorCode::InvalidModel, "instance needs >= 2 nodes");
    double total = 0.0, interior = 0.0;
    for (std::size_t i = 0; i < inst.size(); ++i) {
        require(inst.m[i] > 0 && std::isfinite(inst.m[i]), ErrorCode::InvalidModel, "node weights must be positive");
        total += inst.m[i];
        if (!inst.is_boundary(i)) interior += inst.m[i];
    }
    require(std::abs(total - 1.0) <= 1e-12, ErrorCode::InvalidModel, "node weights must sum to 1");
    for (const auto& e : inst.edges) {
        require(e.i < inst.size() && e.j < inst.size() && e.i != e.j, ErrorCode::InvalidModel, "bad edge endpoints");
        require(std::isfinite(e.w), ErrorCode::InvalidModel, "edge coefficient is not finite");
        require(e.w >= 0, ErrorCode::NegativeRate, "edge coefficient must be nonnegative");
    }
    if (check_theta_split) {
        const double th = inst.metadata.theta;
        require(std::abs(interior - th) <= 1e-10, ErrorCode::InvalidModel, "interior weights must sum to theta");
        require(std::abs((total - interior) - (1.0 - th)) <= 1e-10, ErrorCode::InvalidModel,
                "boundary weights must sum to 1 - theta");
    }
}

namespace detail {

/// Transverse layout of the vertex grid: coordinates, which levels are sticky
/// walls, and the dual-cell length of each interior level (the half cell of a
/// sticky wall is merged into its neighbour).
struct TransverseGrid {
    std::vector<double> x;
    std::vector<bool> wall;
    std::vector<double> cell;
    double h = 0.0;
};

inline double half_line_effective_length(const ModelSpec& model) {
    const double L = model.domain.x_max();
    constexpr std::size_t scan = 20000;
    std::vector<double> v(scan + 1);
    for (std::size_t k = 0; k <= scan; ++k) v[k] = model.V({L * static_cast<double>(k) / scan, 0.0});
    const double cut = *std::max_element(v.begin(), v.end()) + std::log(kHalfLineMassFloor);
    std::size_t last = scan;
    while (last > 0 && v[last] < cut) --last;
    return last == scan ? L : L * static_cast<double>(last + 1) / scan;
}

inline TransverseGrid transverse_grid(const ModelSpec& model, std::size_t n_interior, double length) {
    const auto& d = model.domain;
    const std::size_t walls = (d.sticky_left ? 1 : 0) + (d.sticky_right ? 1 : 0);
    const std::size_t intervals = n_interior - 1 + walls;
    TransverseGrid g;
    g.h = length / static_cast<double>(intervals);
    g.x.resize(intervals + 1);
    g.wall.assign(intervals + 1, false);
    g.cell.assign(intervals + 1, 0.0);
    for (std::size_t k = 0; k <= intervals; ++k)
        g.x[k] = k == intervals ? d.x_min() + length : d.x_min() + g.h * static_cast<double>(k);
    g.wall.front() = d.sticky_left;
    g.wall.back() = d.sticky_right;
    for (std::size_t k = 0; k <= intervals; ++k) {
        if (g.wall[k]) continue;
        double len = g.h;
        if (k == 0 || k == intervals) len = 0.5 * g.h; // plain reflecting end
        if (k >= 1 && g.wall[k - 1]) len += 0.5 * g.h;
        if (k + 1 <= intervals && g.wall[k + 1]) len += 0.5 * g.h;
        g.cell[k] = len;
    }
    return g;
}

} // namespace detail

/// Builds the discrete instance. For a strip, n_interior is the number of
/// interior transverse levels and n_boundary the number of nodes around each
/// circle; on one-dimensional domains n_boundary is ignored.
inline DiscreteInstance build_instance(const ModelSpec& model, std::size_t n_interior, std::size_t n_boundary = 8) {
    model.validate();
    require(n_interior >= 4, ErrorCode::GridTooCoarse, "n_interior must be >= 4");
    const auto& d = model.domain;
    const bool strip = d.is_strip();
    if (strip) require(n_boundary >= 8, ErrorCode::GridTooCoarse, "n_boundary must be >= 8 per sticky circle");

    const MeasureSummary ms = partition_constants(model);
    const double th = ms.theta;
    const double length = d.is_half_line() ? detail::half_line_effective_length(model) : d.thickness();
    const auto g = detail::transverse_grid(model, n_interior, length);
    const std::size_t levels = g.x.size();
    const std::size_t ny = strip ? n_boundary : 1;
    const double hy = strip ? d.period_y() / static_cast<double>(ny) : 1.0;
    auto y_of = [&](std::size_t k) { return strip ? (static_cast<double>(k) + 0.5) * hy : 0.0; };

    DiscreteInstance inst;
    inst.metadata.model_hash = model_hash(model);
    inst.metadata.n_x = levels;
    inst.metadata.n_y = ny;
    inst.metadata.theta = th;
    inst.metadata.delta = model.delta;
    inst.metadata.h_x = g.h;
    inst.metadata.h_y = strip ? hy : 0.0;
    inst.metadata.period_y = strip ? d.period_y() : 0.0;
    inst.metadata.effective_length = length;

    // Unnormalised densities and cell masses.
    std::vector<double> eV(levels * ny), eW(levels * ny, 0.0);
    double zv = 0.0, zw = 0.0;
    inst.nodes.resize(levels * ny);
    for (std::size_t lx = 0; lx < levels; ++lx)
        for (std::size_t ky = 0; ky < ny; ++ky) {
            const std::size_t id = lx * ny + ky;
            const Point p{g.x[lx], y_of(ky)};
            inst.nodes[id] = Node{p, static_cast<bool>(g.wall[lx])};
            eV[id] = std::exp(model.V(p));
            if (g.wall[lx]) {
                eW[id] = std::exp(model.W(p));
                zw += eW[id] * (strip ? hy : 1.0);
            } else {
                zv += eV[id] * g.cell[lx] * (strip ? hy : 1.0);
            }
        }
    require(zv > 0 && std::isfinite(zv) && zw > 0 && std::isfinite(zw), ErrorCode::InvalidModel,
            "discrete partition sums must be finite and positive");

    inst.m.resize(inst.nodes.size());
    for (std::size_t lx = 0; lx < levels; ++lx)
        for (std::size_t ky = 0; ky < ny; ++ky) {
            const std::size_t id = lx * ny + ky;
            inst.m[id] = g.wall[lx] ? (1.0 - th) * eW[id] * (strip ? hy : 1.0) / zw
                                    : th * eV[id] * g.cell[lx] * (strip ? hy : 1.0) / zv;
        }

    auto rhoV = [&](std::size_t id) { return eV[id] / zv; };
    auto rhoW = [&](std::size_t id) { return eW[id] / zw; };
    for (std::size_t lx = 0; lx + 1 < levels; ++lx)
        for (std::size_t ky = 0; ky < ny; ++ky) {
            const std::size_t a = lx * ny + ky, b = (lx + 1) * ny + ky;
            const double cross = strip ? hy : 1.0;
            inst.edges.push_back({a, b, th * std::sqrt(rhoV(a) * rhoV(b)) * cross / g.h});
        }
    if (strip) {
        for (std::size_t lx = 0; lx < levels; ++lx)
            for (std::size_t ky = 0; ky < ny; ++ky) {
                const std::size_t a = lx * ny + ky, b = lx * ny + (ky + 1) % ny;
                double w = 0.0;
                if (g.wall[lx]) {
                    if (model.delta <= 0) continue;
                    w = (1.0 - th) * model.delta * std::sqrt(rhoW(a) * rhoW(b)) / hy;
                } else {
                    w = th * std::sqrt(rhoV(a) * rhoV(b)) * g.cell[lx] / hy;
                }
                inst.edges.push_back({std::min(a, b), std::max(a, b), w});
            }
    }
    inst.finalize();
    validate_instance(inst);
    return inst;
}

/// Jump rates q(i -> j) = w_ij / m_i in compressed rows.
struct Generator {
    std::vector<std::size_t> row_start;
    std::vector<std::size_t> target;
    std::vector<double> rate;
    std::vector<double> total_rate;
    std::vector<double> m;
    std::vector<std::uint8_t> boundary_mask;

    std::size_t size() const { return total_rate.size(); }

    double q(std::size_t i, std::size_t j) const {
        for (std::size_t k = row_start[i]; k < row_start[i + 1]; ++k)
            if (target[k] == j) return rate[k];
        return 0.0;
    }

    /// (m^T Q)_j for every j.
    std::vector<double> left_apply(std::span<const double> v) const {
        std::vector<double> out(size(), 0.0);
        for (std::size_t i = 0; i < size(); ++i) {
            out[i] -= v[i] * total_rate[i];
            for (std::size_t k = row_start[i]; k < row_start[i + 1]; ++k) out[target[k]] += v[i] * rate[k];
        }
        return out;
    }

    /// (Q f)_i for every i.
    std::vector<double> apply(std::span<const double> f) const {
        std::vector<double> out(size(), 0.0);
        for (std::size_t i = 0; i < size(); ++i) {
            double s = -total_rate[i] * f[i];
            for (std::size_t k = row_start[i]; k < row_start[i + 1]; ++k) s += rate[k] * f[target[k]];
            out[i] = s;
        }
        return out;
    }
};

inline Generator generator_of(const DiscreteInstance& inst) {
    for (const auto& e : inst.edges)
        require(e.w >= 0, ErrorCode::NegativeRate, "positive off-diagonal entry in E");
    const std::size_t n = inst.size();
    Generator gen;
    gen.m = inst.m;
    gen.boundary_mask = inst.boundary_mask();
    gen.row_start.assign(n + 1, 0);
    gen.total_rate.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t count = 0;
        inst.for_each_neighbor(i, [&](std::size_t, double w) { count += w > 0 ? 1 : 0; });
        gen.row_start[i + 1] = gen.row_start[i] + count;
    }
    gen.target.resize(gen.row_start[n]);
    gen.rate.resize(gen.row_start[n]);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = gen.row_start[i];
        inst.for_each_neighbor(i, [&](std::size_t j, double w) {
            if (w <= 0) return;
            gen.target[k] = j;
            gen.rate[k] = w / inst.m[i];
            gen.total_rate[i] += gen.rate[k];
            ++k;
        });
    }
    return gen;
}

/// A free-standing instance from weights and edges (weights need not be normalised
/// on input; they are divided by their sum).
inline DiscreteInstance make_instance(std::vector<double> m, std::vector<Edge> edges,
                                      std::vector<bool> boundary = {}) {
    DiscreteInstance inst;
    const double total = std::accumulate(m.begin(), m.end(), 0.0);
    require(total > 0, ErrorCode::InvalidModel, "weights must have positive sum");
    for (auto& v : m) v /= total;
    inst.m = std::move(m);
    inst.nodes.resize(inst.m.size());
    double interior = 0.0;
    for (std::size_t i = 0; i < inst.m.size(); ++i) {
        inst.nodes[i].p = Point{static_cast<double>(i), 0.0};
        inst.nodes[i].boundary = i < boundary.size() && boundary[i];
        if (!inst.nodes[i].boundary) interior += inst.m[i];
    }
    inst.edges = std::move(edges);
    inst.metadata.n_x = inst.m.size();
    inst.metadata.theta = interior;
    inst.finalize();
    validate_instance(inst, false);
    return inst;
}

/// The interior nodes with weights m / theta and interior-interior edges / theta:
/// the discrete (mu_V, E_V) pair.
inline DiscreteInstance interior_subinstance(const DiscreteInstance& inst) {
    const double th = inst.metadata.theta;
    std::vector<std::size_t> index(inst.size(), inst.size());
    DiscreteInstance out;
    for (std::size_t i = 0; i < inst.size(); ++i)
        if (!inst.is_boundary(i)) {
            index[i] = out.m.size();
            out.m.push_back(inst.m[i] / th);
            out.nodes.push_back(Node{inst.nodes[i].p, false});
        }
    for (const auto& e : inst.edges)
        if (index[e.i] < inst.size() && index[e.j] < inst.size())
            out.edges.push_back({index[e.i], index[e.j], e.w / th});
    const double total = std::accumulate(out.m.begin(), out.m.end(), 0.0);
    for (auto& v : out.m) v /= total;
    out.metadata = inst.metadata;
    out.metadata.theta = 1.0;
    out.finalize();
    return out;
}

/// The boundary nodes with weights m / (1 - theta) and boundary edges divided by
/// (1 - theta) delta: the discrete (mu_W, boundary form) pair.
inline DiscreteInstance boundary_subinstance(const DiscreteInstance& inst) {
    const double th = inst.metadata.theta, delta = inst.metadata.delta;
    std::vector<std::size_t> index(inst.size(), inst.size());
    DiscreteInstance out;
    for (std::size_t i = 0; i < inst.size(); ++i)
        if (inst.is_boundary(i)) {
            index[i] = out.m.size();
            out.m.push_back(inst.m[i] / (1.0 - th));
            out.nodes.push_back(Node{inst.nodes[i].p, false});
        }
    if (delta > 0)
        for (const auto& e : inst.edges)
            if (index[e.i] < inst.size() && index[e.j] < inst.size())
                out.edges.push_back({index[e.i], index[e.j], e.w / ((1.0 - th) * delta)});
    const double total = std::accumulate(out.m.begin(), out.m.end(), 0.0);
    for (auto& v : out.m) v /= total;
    out.metadata = inst.metadata;
    out.metadata.theta = 1.0;
    out.finalize();
    return out;
}

inline Json instance_to_json(const DiscreteInstance& inst) {
    Json nodes = Json::array();
    for (const auto& n : inst.nodes) nodes.push_back(Json::array({n.p.x, n.p.y}));
    Json E = Json::array();
    for (const auto& [i, j, v] : inst.triplets()) E.push_back(Json::array({i, j, v}));
    const auto& md = inst.metadata;
    return Json{{"nodes", nodes},
                {"m", inst.m},
                {"E", E},
                {"boundary_mask", inst.boundary_mask()},
                {"metadata",
                 {{"model_hash", md.model_hash},
                  {"n_x", md.n_x},
                  {"n_y", md.n_y},
                  {"theta", md.theta},
                  {"delta", md.delta},
                  {"h_x", md.h_x},
                  {"h_y", md.h_y},
                  {"period_y", md.period_y},
                  {"effective_length", md.effective_length}}}};
}

/// Inverse of instance_to_json. Edges are read from the strictly upper
/// off-diagonal triplets.
inline DiscreteInstance instance_from_json(const Json& j) {
    try {
        DiscreteInstance inst;
        const auto& nodes = j.at("nodes");
        const auto mask = j.at("boundary_mask").get<std::vector<int>>();
        inst.m = j.at("m").get<std::vector<double>>();
        require(nodes.size() == inst.m.size() && mask.size() == inst.m.size(), ErrorCode::ParseError,
                "nodes, m and boundary_mask must have equal length");
        for (std::size_t i = 0; i < nodes.size(); ++i)
            inst.nodes.push_back(Node{Point{nodes[i].at(0).get<double>(), nodes[i].at(1).get<double>()}, mask[i] != 0});
        for (const auto& t : j.at("E")) {
            const auto a = t.at(0).get<std::size_t>(), b = t.at(1).get<std::size_t>();
            if (a < b) inst.edges.push_back({a, b, -t.at(2).get<double>()});
        }
        const auto& md = j.at("metadata");
        inst.metadata.model_hash = md.at("model_hash").get<std::uint64_t>();
        inst.metadata.n_x = md.at("n_x").get<std::size_t>();
        inst.metadata.n_y = md.at("n_y").get<std::size_t>();
        inst.metadata.theta = md.at("theta").get<double>();
        inst.metadata.delta = md.at("delta").get<double>();
        inst.metadata.h_x = md.at("h_x").get<double>();
        inst.metadata.h_y = md.at("h_y").get<double>();
        inst.metadata.period_y = md.at("period_y").get<double>();
        inst.metadata.effective_length = md.at("effective_length").get<double>();
        inst.finalize();
        return inst;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("instance JSON: ") + e.what());
    }
}

} // namespace sticky
