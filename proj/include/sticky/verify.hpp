#pragma once

// Oracles on a discrete instance: the Poincare constant, lower bounds on the
// smallest super and weak Poincare rates by multi-start projected gradient
// ascent, randomized inequality checks, and power-law fits.

#include "sticky/discretize.hpp"
#include "sticky/error.hpp"
#include "sticky/numeric.hpp"
#include "sticky/rate_function.hpp"
#include "sticky/rng.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <queue>
#include <span>
#include <vector>

namespace sticky {

inline bool is_connected(const DiscreteInstance& inst) {
    std::vector<bool> seen(inst.size(), false);
    std::queue<std::size_t> todo;
    todo.push(0);
    seen[0] = true;
    std::size_t count = 1;
    while (!todo.empty()) {
        const std::size_t i = todo.front();
        todo.pop();
        inst.for_each_neighbor(i, [&](std::size_t j, double w) {
            if (w > 0 && !seen[j]) {
                seen[j] = true;
                ++count;
                todo.push(j);
            }
        });
    }
    return count == inst.size();
}

/// C(P) = 1 / lambda_1 for E f = lambda diag(m) f, from the full spectrum of
/// diag(m)^{-1/2} E diag(m)^{-1/2}.
inline double poincare_constant(const DiscreteInstance& inst) {
    require(is_connected(inst), ErrorCode::Disconnected, "the form's graph is disconnected");
    const Eigen::Index n = static_cast<Eigen::Index>(inst.size());
    Eigen::MatrixXd S = inst.dense_E();
    Eigen::VectorXd s(n);
    for (Eigen::Index i = 0; i < n; ++i) s(i) = 1.0 / std::sqrt(inst.m[static_cast<std::size_t>(i)]);
    S = s.asDiagonal() * S * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Eigen::EigenvaluesOnly);
    require(eig.info() == Eigen::Success, ErrorCode::NonConvergent, "eigen-decomposition failed");
    const double lambda1 = eig.eigenvalues()(1);
    require(lambda1 > 0, ErrorCode::Disconnected, "lambda_1 vanishes");
    return 1.0 / lambda1;
}

/// Eigenfunction of the smallest nonzero eigenvalue of E f = lambda diag(m) f by
/// shifted inverse iteration, m-normalised.
inline std::vector<double> fiedler_vector(const DiscreteInstance& inst, int iterations = 200) {
    require(is_connected(inst), ErrorCode::Disconnected, "the form's graph is disconnected");
    const std::size_t n = inst.size();
    Eigen::SparseMatrix<double> A = inst.sparse_E();
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, inst.degree()[i] / inst.m[i]);
    const double shift = 1e-9 * std::max(scale, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        A.coeffRef(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += shift * inst.m[i];
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    require(solver.info() == Eigen::Success, ErrorCode::NonConvergent, "factorisation failed");
    Eigen::VectorXd v(static_cast<Eigen::Index>(n)), b(static_cast<Eigen::Index>(n));
    Rng rng(0x5eed);
    for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = rng.uniform(-1.0, 1.0);
    auto center_and_normalise = [&](Eigen::VectorXd& x) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += inst.m[i] * x(static_cast<Eigen::Index>(i));
        for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i)) -= mean;
        for (std::size_t i = 0; i < n; ++i) sq += inst.m[i] * x(static_cast<Eigen::Index>(i)) * x(static_cast<Eigen::Index>(i));
        x /= std::sqrt(sq);
    };
    center_and_normalise(v);
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) b(static_cast<Eigen::Index>(i)) = inst.m[i] * v(static_cast<Eigen::Index>(i));
        Eigen::VectorXd next = solver.solve(b);
        center_and_normalise(next);
        const double change = (next - v).cwiseAbs().maxCoeff();
        v = next;
        if (change < 1e-13) break;
    }
    return std::vector<double>(v.data(), v.data() + v.size());
}

struct OptimizerStatus {
    bool converged = true;       ///< every restart met the relative-change criterion
    bool max_iter = false;       ///< some restart hit the iteration cap
    double multi_start_spread = 0.0;
    int restarts = 0;
    long iterations = 0;
};

struct OracleResult {
    double r = 0.0;
    double value = 0.0;
    std::vector<double> maximizer;
    OptimizerStatus status;
    std::vector<double> restart_values;
};

struct OracleOptions {
    int restarts = 32;
    std::uint64_t seed = 0;
    int max_iter = 10000;
    double rel_tol = 1e-10;
};

namespace detail {

/// Euclidean projection in the m-metric onto {f >= 0, sum m f = 1}:
/// f = (g - lambda)^+, lambda by the active-set fixed point.
inline void project_weighted_simplex(std::span<const double> g, std::span<const double> m, std::span<double> out) {
    const std::size_t n = g.size();
    std::vector<char> active(n, 1);
    double lambda = 0.0;
    for (int pass = 0; pass < 1000; ++pass) {
        double sm = 0.0, smg = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (active[i]) {
                sm += m[i];
                smg += m[i] * g[i];
            }
        if (sm <= 0) throw Error(ErrorCode::NonConvergent, "simplex projection lost every coordinate");
        lambda = (smg - 1.0) / sm;
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i)
            if (active[i] && g[i] <= lambda) {
                active[i] = 0;
                changed = true;
            }
        if (!changed) break;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = active[i] ? g[i] - lambda : 0.0;
        total += m[i] * out[i];
    }
    if (!(total > 0) || !std::isfinite(total)) throw Error(ErrorCode::NonConvergent, "simplex projection failed");
    for (std::size_t i = 0; i < n; ++i) out[i] /= total;
}

/// f = g / sum m g for g >= 0 with positive mass: keeps the shape of a start.
inline void scale_to_simplex(std::span<const double> g, std::span<const double> m, std::span<double> out) {
    double mass = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) mass += m[i] * g[i];
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] / mass;
}

/// Projection in the m-metric onto {-1 <= f <= 1, sum m f = 0}:
/// f = clamp(g - lambda), lambda by bisection.
inline void project_box_mean_zero(std::span<const double> g, std::span<const double> m, std::span<double> out) {
    const std::size_t n = g.size();
    auto mean_at = [&](double lambda) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += m[i] * std::clamp(g[i] - lambda, -1.0, 1.0);
        return s;
    };
    double lo = *std::min_element(g.begin(), g.end()) - 1.0, hi = *std::max_element(g.begin(), g.end()) + 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mean_at(mid) > 0)
            lo = mid;
        else
            hi = mid;
    }
    const double lambda = 0.5 * (lo + hi);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::clamp(g[i] - lambda, -1.0, 1.0);
    // Remove the residual mean exactly; it is below the bisection resolution.
    const double residual = numeric::dot_weighted(m, out, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i) out[i] = std::clamp(out[i] - residual, -1.0, 1.0);
}

/// Smooth bump cos^2(pi d / (2 width)) on the nodes within `width` of `center`.
inline std::vector<double> raised_cosine(const DiscreteInstance& inst, std::size_t center, double width) {
    std::vector<double> f(inst.size(), 0.0);
    for (std::size_t i = 0; i < inst.size(); ++i) {
        const double d = inst.distance(i, center);
        if (d < width) {
            const double c = std::cos(0.5 * std::numbers::pi * d / width);
            f[i] = c * c;
        }
    }
    return f;
}

inline double instance_diameter(const DiscreteInstance& inst) {
    double xmin = numeric::kInfinity, xmax = -numeric::kInfinity;
    for (const auto& n : inst.nodes) {
        xmin = std::min(xmin, n.p.x);
        xmax = std::max(xmax, n.p.x);
    }
    return std::max(xmax - xmin, 0.5 * inst.metadata.period_y);
}

inline double min_spacing(const DiscreteInstance& inst) {
    double h = numeric::kInfinity;
    for (const auto& e : inst.edges) h = std::min(h, inst.distance(e.i, e.j));
    return std::isfinite(h) && h > 0 ? h : 1.0;
}

/// Distance from each node to the nearest boundary node (infinite if none).
inline std::vector<double> distance_to_boundary(const DiscreteInstance& inst) {
    std::vector<double> d(inst.size(), numeric::kInfinity);
    std::vector<std::size_t> walls;
    for (std::size_t i = 0; i < inst.size(); ++i)
        if (inst.is_boundary(i)) walls.push_back(i);
    for (std::size_t i = 0; i < inst.size(); ++i)
        for (std::size_t b : walls) d[i] = std::min(d[i], inst.distance(i, b));
    return d;
}

/// Start k of the beta-oracle. Small instances: the vertex at node k for
/// k < n, then sparse random points (u^6 per node). Otherwise a raised-cosine
/// bump of log-uniform width centred at a random node, kept clear of the
/// boundary nodes.
inline std::vector<double> random_bump_start(const DiscreteInstance& inst, Rng& rng,
                                             const std::vector<double>& wall_distance, double h, double diam,
                                             std::size_t k) {
    const std::size_t n = inst.size();
    std::vector<double> f(n);
    if (n < 16) {
        if (k < n) {
            std::fill(f.begin(), f.end(), 1e-3);
            f[k] = 1.0;
        } else {
            for (auto& v : f) v = std::pow(rng.uniform(), 6) + 1e-3;
        }
        return f;
    }
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < n; ++i)
        if (wall_distance[i] > 3.0 * h) eligible.push_back(i);
    if (eligible.empty())
        for (std::size_t i = 0; i < n; ++i) eligible.push_back(i);
    const std::size_t c = eligible[rng.below(eligible.size())];
    const double lo = std::log(2.0 * h), hi = std::log(std::max(0.5 * diam, 4.0 * h));
    double width = std::exp(rng.uniform(lo, hi));
    width = std::min(width, std::max(wall_distance[c] - h, 1.5 * h));
    return raised_cosine(inst, c, width);
}

/// Index of the node nearest to q (periodic in y when the instance is).
inline std::size_t nearest_node(const DiscreteInstance& inst, Point q) {
    const double period = inst.metadata.period_y;
    std::size_t best = 0;
    double best_d = numeric::kInfinity;
    for (std::size_t i = 0; i < inst.size(); ++i) {
        const double dx = inst.nodes[i].p.x - q.x;
        double dy = std::abs(inst.nodes[i].p.y - q.y);
        if (period > 0) dy = std::min(std::fmod(dy, period), period - std::fmod(dy, period));
        const double d = dx * dx + dy * dy;
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

/// f translated so that node `from` lands on node `to`; zero where the
/// preimage leaves the grid.
inline std::vector<double> relocate(const DiscreteInstance& inst, std::span<const double> f, std::size_t from,
                                    std::size_t to) {
    const Point shift{inst.nodes[to].p.x - inst.nodes[from].p.x, inst.nodes[to].p.y - inst.nodes[from].p.y};
    double xmin = numeric::kInfinity, xmax = -numeric::kInfinity;
    for (const auto& nd : inst.nodes) {
        xmin = std::min(xmin, nd.p.x);
        xmax = std::max(xmax, nd.p.x);
    }
    const double slack = 0.5 * min_spacing(inst);
    std::vector<double> g(inst.size(), 0.0);
    for (std::size_t i = 0; i < inst.size(); ++i) {
        const Point q{inst.nodes[i].p.x - shift.x, inst.nodes[i].p.y - shift.y};
        if (q.x < xmin - slack || q.x > xmax + slack) continue;
        g[i] = f[nearest_node(inst, q)];
    }
    return g;
}

struct AscentOutcome {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Projected gradient ascent with Nesterov momentum, monotone restarts and
/// backtracking on the quadratic model, in the m-weighted metric.
template <class Objective, class Gradient, class Project>
AscentOutcome projected_ascent(std::vector<double>& f, Objective&& objective, Gradient&& gradient, Project&& project,
                               std::span<const double> m, const OracleOptions& opt) {
    const std::size_t n = f.size();
    std::vector<double> y = f, prev = f, g(n), trial(n), z(n);
    double F = objective(f);
    double step = 1.0, momentum_t = 1.0;
    AscentOutcome out;
    for (int it = 0; it < opt.max_iter; ++it) {
        out.iterations = it + 1;
        const double Fy = objective(y);
        gradient(y, g);
        double Fz = 0.0;
        for (int bt = 0; bt < 200; ++bt) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = y[i] + step * g[i];
            project(trial, z);
            double lin = 0.0, quad = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = z[i] - y[i];
                lin += m[i] * g[i] * d;
                quad += m[i] * d * d;
            }
            Fz = objective(z);
            if (Fz >= Fy + lin - quad / (2.0 * step) - 1e-15 * std::abs(Fy)) break;
            step *= 0.5;
        }
        if (Fz < F) {
            // Momentum overshot: restart from the last accepted point.
            if (y == f) {
                out.converged = true;
                break;
            }
            y = f;
            momentum_t = 1.0;
            continue;
        }
        const double change = std::abs(Fz - F) / std::max(std::abs(Fz), 1e-300);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum_t * momentum_t));
        const double beta = (momentum_t - 1.0) / t_next;
        momentum_t = t_next;
        prev.swap(f);
        f = z;
        for (std::size_t i = 0; i < n; ++i) y[i] = f[i] + beta * (f[i] - prev[i]);
        F = Fz;
        step *= 2.0;
        if (change < opt.rel_tol && it > 0) {
            out.converged = true;
            break;
        }
    }
    out.value = F;
    return out;
}

inline void finish_status(OracleResult& res, const std::vector<double>& random_values) {
    res.status.restarts = static_cast<int>(random_values.size());
    if (!random_values.empty()) {
        const auto [lo, hi] = std::minmax_element(random_values.begin(), random_values.end());
        res.status.multi_start_spread = *hi > 0 ? (*hi - *lo) / *hi : 0.0;
    }
}

} // namespace detail

/// Lower bound on beta(r) = sup{mu(f^2) - r E(f, f) : mu(|f|) = 1}, maximised
/// over f >= 0 (|f| never does worse). The constant function is always tried;
/// the spread is taken over the random restarts, each of which is a local
/// ascent followed by two relocation hops.
inline OracleResult beta_hat(const DiscreteInstance& inst, double r, const OracleOptions& opt = {}) {
    require(r > 0, ErrorCode::InvalidArgument, "r must be > 0");
    require(opt.restarts >= 8, ErrorCode::InvalidArgument, "restarts must be >= 8");
    const std::size_t n = inst.size();
    const std::span<const double> m(inst.m);
    std::vector<double> Ef(n);
    auto objective = [&](const std::vector<double>& f) { return inst.mean_square(f) - r * inst.energy(f); };
    auto gradient = [&](const std::vector<double>& f, std::vector<double>& g) {
        inst.apply_E(f, Ef);
        for (std::size_t i = 0; i < n; ++i) g[i] = 2.0 * f[i] - 2.0 * r * Ef[i] / m[i];
    };
    auto project = [&](const std::vector<double>& g, std::vector<double>& out) {
        detail::project_weighted_simplex(g, m, out);
    };

    OracleResult res;
    res.r = r;
    res.maximizer.assign(n, 1.0);
    res.value = objective(res.maximizer);
    const auto walls = detail::distance_to_boundary(inst);
    const double h = detail::min_spacing(inst), diam = detail::instance_diameter(inst);
    std::vector<std::size_t> hop_targets;
    std::size_t deepest = 0;
    if (n >= 16) {
        for (std::size_t i = 0; i < n; ++i)
            if (inst.is_boundary(i)) hop_targets.push_back(i);
        for (std::size_t i = 0; i < n; ++i)
            if (walls[i] > walls[deepest]) deepest = i;
    }
    std::vector<double> random_values;
    for (int k = 0; k < opt.restarts; ++k) {
        Rng rng(derive_seed(opt.seed, {static_cast<std::uint64_t>(std::llround(std::log(r) * 1e6)), static_cast<std::uint64_t>(k)}));
        std::vector<double> start = detail::random_bump_start(inst, rng, walls, h, diam, static_cast<std::size_t>(k));
        std::vector<double> f(n);
        detail::scale_to_simplex(start, m, f);
        auto ascend = [&](std::vector<double>& x) {
            const auto out = detail::projected_ascent(x, objective, gradient, project, m, opt);
            res.status.iterations += out.iterations;
            res.status.converged = res.status.converged && out.converged;
            res.status.max_iter = res.status.max_iter || !out.converged;
            return objective(x);
        };
        double v = ascend(f);
        // Basin hops: move the profile's peak onto the nearest boundary node and
        // onto the node deepest inside, re-ascend, keep the better one.
        if (!hop_targets.empty()) {
            const auto peak = static_cast<std::size_t>(std::max_element(f.begin(), f.end()) - f.begin());
            std::size_t to_wall = hop_targets.front();
            for (std::size_t b : hop_targets)
                if (inst.distance(peak, b) < inst.distance(peak, to_wall)) to_wall = b;
            for (std::size_t target : {to_wall, deepest}) {
                const auto moved = detail::relocate(inst, f, peak, target);
                if (std::all_of(moved.begin(), moved.end(), [](double x) { return x <= 0; })) continue;
                std::vector<double> g(n);
                detail::scale_to_simplex(moved, m, g);
                const double vg = ascend(g);
                if (vg > v) {
                    v = vg;
                    f.swap(g);
                }
            }
        }
        random_values.push_back(v);
        res.restart_values.push_back(v);
        if (v > res.value) {
            res.value = v;
            res.maximizer = f;
        }
    }
    detail::finish_status(res, random_values);
    return res;
}

/// (mu(f^2) - r ||f||_inf^2)^+ / E(f, f) for m-mean-zero f.
inline double weak_poincare_quotient(const DiscreteInstance& inst, std::span<const double> f, double r) {
    double sup = 0.0;
    for (double v : f) sup = std::max(sup, std::abs(v));
    const double e = inst.energy(f);
    const double num = numeric::positive_part(inst.mean_square(f) - r * sup * sup);
    if (num == 0.0) return 0.0;
    return e > 0 ? num / e : numeric::kInfinity;
}

/// Lower bound on alpha(r) = sup{(mu(f^2) - r ||f||_inf^2)^+ : mu(f) = 0, E(f, f) = 1}.
/// Maximises (mu(f^2) - r) / E(f, f) over the box [-1, 1]^n intersected with the
/// mean-zero hyperplane, which has the same supremum, and reports the exact
/// quotient of the final iterate. Starts: the first nonconstant eigenfunction
/// and random smooth fields.
inline OracleResult alpha_hat(const DiscreteInstance& inst, double r, const OracleOptions& opt = {}) {
    require(r > 0, ErrorCode::InvalidArgument, "r must be > 0");
    require(opt.restarts >= 8, ErrorCode::InvalidArgument, "restarts must be >= 8");
    const std::size_t n = inst.size();
    OracleResult res;
    res.r = r;
    res.maximizer.assign(n, 0.0);
    if (r >= 1.0) {
        res.value = 0.0;
        return res;
    }
    const std::span<const double> m(inst.m);
    std::vector<double> Ef(n);
    auto objective = [&](const std::vector<double>& f) {
        const double e = inst.energy(f);
        return e > 0 ? (inst.mean_square(f) - r) / e : -numeric::kInfinity;
    };
    auto gradient = [&](const std::vector<double>& f, std::vector<double>& g) {
        const double e = inst.energy(f);
        const double G = (inst.mean_square(f) - r) / e;
        inst.apply_E(f, Ef);
        for (std::size_t i = 0; i < n; ++i) g[i] = (2.0 * f[i] - 2.0 * G * Ef[i] / m[i]) / e;
    };
    auto project = [&](const std::vector<double>& g, std::vector<double>& out) {
        detail::project_box_mean_zero(g, m, out);
    };
    auto scale_to_box = [&](std::vector<double>& f) {
        double sup = 0.0;
        for (double v : f) sup = std::max(sup, std::abs(v));
        if (sup > 0)
            for (auto& v : f) v /= sup;
    };

    std::vector<std::vector<double>> starts;
    if (is_connected(inst)) starts.push_back(fiedler_vector(inst));
    const double h = detail::min_spacing(inst), diam = detail::instance_diameter(inst);
    std::vector<double> random_values;
    for (int k = 0; k < opt.restarts; ++k) {
        Rng rng(derive_seed(opt.seed, {static_cast<std::uint64_t>(std::llround(std::log(r) * 1e6)), static_cast<std::uint64_t>(k), 1}));
        std::vector<double> f(n);
        if (n < 16 && static_cast<std::size_t>(k) + 2 < (std::size_t{1} << n)) {
            // Sign patterns: the vertices of the box.
            for (std::size_t i = 0; i < n; ++i) f[i] = ((static_cast<std::size_t>(k) + 1) >> i) & 1 ? 1.0 : -1.0;
        } else if (n < 16) {
            for (auto& v : f) v = rng.uniform(-1.0, 1.0);
        } else {
            // Difference of two bumps: a smooth mean-zero profile.
            const double w1 = std::exp(rng.uniform(std::log(2.0 * h), std::log(std::max(diam, 4.0 * h))));
            const double w2 = std::exp(rng.uniform(std::log(2.0 * h), std::log(std::max(diam, 4.0 * h))));
            const auto a = detail::raised_cosine(inst, rng.below(n), w1);
            const auto b = detail::raised_cosine(inst, rng.below(n), w2);
            for (std::size_t i = 0; i < n; ++i) f[i] = a[i] - b[i] + 1e-3 * rng.uniform(-1.0, 1.0);
        }
        starts.push_back(std::move(f));
    }
    for (std::size_t k = 0; k < starts.size(); ++k) {
        std::vector<double> f = starts[k];
        const double mean = inst.mean(f);
        for (auto& v : f) v -= mean;
        scale_to_box(f);
        std::vector<double> projected(n);
        detail::project_box_mean_zero(f, m, projected);
        f = projected;
        if (inst.energy(f) <= 0) continue;
        const auto out = detail::projected_ascent(f, objective, gradient, project, m, opt);
        res.status.iterations += out.iterations;
        res.status.converged = res.status.converged && out.converged;
        res.status.max_iter = res.status.max_iter || !out.converged;
        const double v = weak_poincare_quotient(inst, f, r);
        res.restart_values.push_back(v);
        random_values.push_back(v);
        if (v > res.value) {
            res.value = v;
            res.maximizer = f;
        }
    }
    detail::finish_status(res, random_values);
    return res;
}

/// beta = k * shape with k fitted from beta_hat on an increasing coarse grid.
/// Between grid points beta_hat can only fall, so k is the margin times the
/// largest beta_hat(r_j) / shape(r_{j+1}); the result holds on [r_0, r_last].
struct Calibration {
    double scale = 0.0;
    RateFunction rate = RateFunction::constant(1.0);
    std::vector<OracleResult> samples;
    double worst_spread = 0.0;
};

inline Calibration calibrate_beta(const DiscreteInstance& inst, const RateFunction& shape,
                                  std::span<const double> r_grid, const OracleOptions& opt = {},
                                  double margin = 1.25) {
    require(r_grid.size() >= 2, ErrorCode::InvalidArgument, "calibration needs >= 2 grid points");
    require(margin >= 1.0, ErrorCode::InvalidArgument, "margin must be >= 1");
    Calibration out;
    double k = 0.0;
    for (std::size_t j = 0; j < r_grid.size(); ++j) {
        require(j == 0 || r_grid[j] > r_grid[j - 1], ErrorCode::InvalidArgument, "calibration grid must increase");
        out.samples.push_back(beta_hat(inst, r_grid[j], opt));
        out.worst_spread = std::max(out.worst_spread, out.samples.back().status.multi_start_spread);
        const double next = shape(r_grid[std::min(j + 1, r_grid.size() - 1)]);
        k = std::max(k, out.samples.back().value / next);
    }
    out.scale = margin * k;
    out.rate = shape.scaled(out.scale);
    return out;
}

/// calibrate_beta over a grid wide enough for the result to hold at every
/// r > 0: beta_hat <= 1 / min m everywhere and beta_hat = 1 from C(P) on, so
/// the grid runs from where k * shape reaches that cap up to max(hi, C(P)).
inline Calibration calibrate_beta_global(const DiscreteInstance& inst, const RateFunction& shape, double lo, double hi,
                                         const OracleOptions& opt = {}, double margin = 1.25, int per_decade = 4) {
    require(lo > 0 && hi >= lo, ErrorCode::InvalidArgument, "need 0 < lo <= hi");
    require(per_decade >= 1, ErrorCode::InvalidArgument, "per_decade must be >= 1");
    const double cap = 1.0 / *std::min_element(inst.m.begin(), inst.m.end());
    const double top = inst.size() > 1 ? std::max(hi, poincare_constant(inst)) : hi;
    auto points = [&](double a, double b) {
        return static_cast<std::size_t>(std::ceil(std::log10(b / a) * per_decade)) + 1;
    };
    std::vector<double> grid = numeric::log_grid(lo, top, std::max<std::size_t>(points(lo, top), 2));
    Calibration out;
    for (double r : grid) out.samples.push_back(beta_hat(inst, r, opt));
    auto fit = [&] {
        double k = 0.0;
        for (std::size_t j = 0; j < out.samples.size(); ++j)
            k = std::max(k, out.samples[j].value / shape(out.samples[std::min(j + 1, out.samples.size() - 1)].r));
        return std::max(margin * k, 1.0 / shape.infimum());
    };
    for (int extend = 0; fit() * shape(out.samples.front().r) < cap; ++extend) {
        require(extend < 40, ErrorCode::NonConvergent, "shape never reaches the finite-state cap");
        const double front = out.samples.front().r;
        const auto more = numeric::log_grid(front / 10.0, front, static_cast<std::size_t>(per_decade) + 1);
        std::vector<OracleResult> added;
        for (std::size_t k = 0; k + 1 < more.size(); ++k) added.push_back(beta_hat(inst, more[k], opt));
        out.samples.insert(out.samples.begin(), added.begin(), added.end());
    }
    for (const auto& s : out.samples) out.worst_spread = std::max(out.worst_spread, s.status.multi_start_spread);
    out.scale = fit();
    out.rate = shape.scaled(out.scale);
    return out;
}

/// mu(f^2) <= r E(f, f) + beta(r) mu(|f|)^2 or the weak form, counted over
/// (f, r) pairs.
struct ViolationReport {
    long trials = 0;      ///< (function, r) evaluations
    long functions = 0;   ///< sampled functions
    long violations = 0;
    double worst_margin = -numeric::kInfinity; ///< max of (LHS - RHS) / RHS
    std::uint64_t seed = 0;

    void record(double lhs, double rhs) {
        ++trials;
        if (lhs > rhs * (1.0 + 1e-10) + 1e-14) ++violations;
        if (lhs <= 1e-14) return; // rounding-level functions carry no margin information
        const double margin = rhs > 0 ? (lhs - rhs) / rhs : (lhs > 0 ? numeric::kInfinity : 0.0);
        worst_margin = std::max(worst_margin, margin);
    }
    void merge(const ViolationReport& other) {
        trials += other.trials;
        functions += other.functions;
        violations += other.violations;
        worst_margin = std::max(worst_margin, other.worst_margin);
    }
};

/// Random test functions: node-iid Gaussian, smoothed Gaussian fields
/// (M + sE)^{-1} M xi at fixed smoothing scales, sharp indicators of balls,
/// and raised-cosine bumps, cycled in that order.
class FunctionSampler {
public:
    explicit FunctionSampler(const DiscreteInstance& inst) : inst_(inst) {
        h_ = detail::min_spacing(inst);
        diam_ = detail::instance_diameter(inst);
        for (std::size_t i = 0; i < inst.size(); ++i)
            if (inst.is_boundary(i)) boundary_.push_back(i);
        const Eigen::SparseMatrix<double> E = inst.sparse_E();
        // Smoothing lengths from a few grid spacings up to the diameter.
        for (double len : numeric::log_grid(2.0 * h_, std::max(diam_, 4.0 * h_), 4)) {
            Eigen::SparseMatrix<double> A = E * (len * len);
            for (std::size_t i = 0; i < inst.size(); ++i)
                A.coeffRef(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += inst.m[i];
            auto solver = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(A);
            if (solver->info() == Eigen::Success) smoothers_.push_back(solver);
        }
    }

    static constexpr int kEnsembles = 4;

    std::vector<double> sample(Rng& rng, long index) {
        const std::size_t n = inst_.size();
        std::vector<double> f(n, 0.0);
        switch (index % kEnsembles) {
        case 0:
            for (auto& v : f) v = rng.normal();
            break;
        case 1: {
            if (smoothers_.empty()) {
                for (auto& v : f) v = rng.normal();
                break;
            }
            Eigen::VectorXd xi(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) xi(static_cast<Eigen::Index>(i)) = inst_.m[i] * rng.normal();
            const auto& solver = smoothers_[rng.below(smoothers_.size())];
            const Eigen::VectorXd g = solver->solve(xi);
            for (std::size_t i = 0; i < n; ++i) f[i] = g(static_cast<Eigen::Index>(i));
            break;
        }
        case 2: {
            const std::size_t c = center(rng);
            const double width = std::exp(rng.uniform(std::log(0.5 * h_), std::log(std::max(diam_, h_))));
            for (std::size_t i = 0; i < n; ++i) f[i] = inst_.distance(i, c) <= width ? 1.0 : 0.0;
            break;
        }
        default: {
            const std::size_t c = center(rng);
            const double width = std::exp(rng.uniform(std::log(h_), std::log(std::max(diam_, 2.0 * h_))));
            f = detail::raised_cosine(inst_, c, width);
            const double amp = rng.uniform(0.5, 2.0);
            for (auto& v : f) v *= amp;
            break;
        }
        }
        return f;
    }

private:
    // Half of the localised samples sit on the sticky boundary.
    std::size_t center(Rng& rng) const {
        if (!boundary_.empty() && rng.uniform() < 0.5) return boundary_[rng.below(boundary_.size())];
        return rng.below(inst_.size());
    }

    const DiscreteInstance& inst_;
    std::vector<std::size_t> boundary_;
    double h_ = 1.0;
    double diam_ = 1.0;
    std::vector<std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>> smoothers_;
};

/// Checks mu(f^2) <= r E(f, f) + beta(r) mu(|f|)^2 for `trials` random f at
/// every r of the grid.
inline ViolationReport check_super_poincare(const DiscreteInstance& inst, const RateFunction& beta,
                                            std::span<const double> r_grid, long trials, std::uint64_t seed) {
    require(!r_grid.empty(), ErrorCode::InvalidArgument, "empty r grid");
    ViolationReport rep;
    rep.seed = seed;
    FunctionSampler sampler(inst);
    std::vector<double> b(r_grid.size());
    for (std::size_t k = 0; k < r_grid.size(); ++k) {
        require(r_grid[k] > 0, ErrorCode::InvalidArgument, "r grid must be positive");
        b[k] = beta(r_grid[k]);
        require(b[k] > 0, ErrorCode::InvalidArgument, "beta must be positive on the r grid");
    }
    for (long t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
        const auto f = sampler.sample(rng, t);
        ++rep.functions;
        const double sq = inst.mean_square(f), ab = inst.mean_abs(f), e = inst.energy(f);
        for (std::size_t k = 0; k < r_grid.size(); ++k) rep.record(sq, r_grid[k] * e + b[k] * ab * ab);
    }
    return rep;
}

/// Checks mu(f^2) <= alpha(r) E(f, f) + r ||f||_inf^2 for `trials` random
/// m-mean-zero f at every r of the grid.
inline ViolationReport check_weak_poincare(const DiscreteInstance& inst, const RateFunction& alpha,
                                           std::span<const double> r_grid, long trials, std::uint64_t seed) {
    require(!r_grid.empty(), ErrorCode::InvalidArgument, "empty r grid");
    ViolationReport rep;
    rep.seed = seed;
    FunctionSampler sampler(inst);
    std::vector<double> a(r_grid.size());
    for (std::size_t k = 0; k < r_grid.size(); ++k) {
        require(r_grid[k] > 0, ErrorCode::InvalidArgument, "r grid must be positive");
        a[k] = alpha(r_grid[k]);
    }
    for (long t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
        auto f = sampler.sample(rng, t);
        const double mean = inst.mean(f);
        double sup = 0.0;
        for (auto& v : f) {
            v -= mean;
            sup = std::max(sup, std::abs(v));
        }
        ++rep.functions;
        const double sq = inst.mean_square(f), e = inst.energy(f);
        for (std::size_t k = 0; k < r_grid.size(); ++k) rep.record(sq, a[k] * e + r_grid[k] * sup * sup);
    }
    return rep;
}

struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

enum class FitCoordinates {
    LogLog,    ///< log value against log r
    LogLogLog, ///< log log value against log r
};

/// Least-squares line through (log r, log value), or (log r, log log value).
inline ScalingFit fit_scaling_exponent(std::span<const std::pair<double, double>> samples,
                                       FitCoordinates coords = FitCoordinates::LogLog) {
    require(samples.size() >= 5, ErrorCode::InsufficientSpan, "need at least 5 samples");
    double rmin = numeric::kInfinity, rmax = 0.0;
    for (const auto& [r, v] : samples) {
        require(r > 0 && v > 0, ErrorCode::InvalidArgument, "samples must be positive");
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
    }
    require(std::log10(rmax / rmin) >= 2.0 - 1e-12, ErrorCode::InsufficientSpan, "r must span at least 2 decades");
    std::vector<double> xs, ys;
    for (const auto& [r, v] : samples) {
        xs.push_back(std::log(r));
        const double y = coords == FitCoordinates::LogLog ? std::log(v) : std::log(std::log(v));
        require(std::isfinite(y), ErrorCode::InvalidArgument, "log log needs values > 1");
        ys.push_back(y);
    }
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
        syy += (ys[k] - my) * (ys[k] - my);
    }
    ScalingFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    return fit;
}

} // namespace sticky
