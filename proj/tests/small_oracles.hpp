#pragma once

// Brute-force oracles for three-node instances, shared by the unit and
// acceptance tests.

#include "sticky/rng.hpp"
#include "sticky/verify.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace sticky::testing {

struct Three {
    std::array<double, 3> m;
    std::array<double, 3> w; // edges 01, 12, 02
    DiscreteInstance inst() const {
        return make_instance({m[0], m[1], m[2]}, {{0, 1, w[0]}, {1, 2, w[1]}, {0, 2, w[2]}});
    }
    double energy(const std::array<double, 3>& f) const {
        return w[0] * (f[0] - f[1]) * (f[0] - f[1]) + w[1] * (f[1] - f[2]) * (f[1] - f[2]) +
               w[2] * (f[0] - f[2]) * (f[0] - f[2]);
    }
    double mean_square(const std::array<double, 3>& f) const {
        return m[0] * f[0] * f[0] + m[1] * f[1] * f[1] + m[2] * f[2] * f[2];
    }
};

inline Three random_three(Rng& rng) {
    Three t;
    double s = 0.0;
    for (auto& v : t.m) s += (v = rng.uniform(0.1, 1.0));
    for (auto& v : t.m) v /= s;
    for (auto& v : t.w) v = rng.uniform(0.05, 2.0);
    if (rng.uniform() < 0.3) t.w[2] = 0.0;
    return t;
}

/// sup of Q(f) = mu(f^2) - r E(f, f) over {f >= 0, sum m f = 1}, by enumerating
/// the faces of the simplex: vertices, the maximum of a quadratic along each
/// edge, and the stationary point of the relative interior.
inline double beta_oracle(const Three& t, double r) {
    auto Q = [&](const std::array<double, 3>& f) { return t.mean_square(f) - r * t.energy(f); };
    std::array<std::array<double, 3>, 3> vert{};
    for (int i = 0; i < 3; ++i) vert[i][i] = 1.0 / t.m[i];
    double best = -numeric::kInfinity;
    for (const auto& v : vert) best = std::max(best, Q(v));
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            // Q along (1 - s) v_i + s v_j is a quadratic a s^2 + b s + c.
            auto at = [&](double s) {
                std::array<double, 3> f{};
                for (int k = 0; k < 3; ++k) f[k] = (1 - s) * vert[i][k] + s * vert[j][k];
                return Q(f);
            };
            const double c = at(0), q1 = at(1), qh = at(0.5);
            const double a = 2 * (q1 + c - 2 * qh), b = q1 - c - a;
            if (a < 0) {
                const double s = -b / (2 * a);
                if (s > 0 && s < 1) best = std::max(best, at(s));
            }
        }
    // Interior: grad Q = 2 (M - r E) f = nu m with sum m f = 1.
    Eigen::Matrix3d E = Eigen::Matrix3d::Zero();
    const std::array<std::pair<int, int>, 3> edges{{{0, 1}, {1, 2}, {0, 2}}};
    for (int k = 0; k < 3; ++k) {
        const auto [i, j] = edges[k];
        E(i, i) += t.w[k];
        E(j, j) += t.w[k];
        E(i, j) -= t.w[k];
        E(j, i) -= t.w[k];
    }
    Eigen::Matrix4d K = Eigen::Matrix4d::Zero();
    Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) K(i, j) = (i == j ? t.m[i] : 0.0) - r * E(i, j);
        K(i, 3) = -t.m[i];
        K(3, i) = t.m[i];
    }
    rhs(3) = 1.0;
    const Eigen::Vector4d sol = K.fullPivLu().solve(rhs);
    if ((K * sol - rhs).norm() < 1e-10 && sol(0) > 0 && sol(1) > 0 && sol(2) > 0)
        best = std::max(best, Q({sol(0), sol(1), sol(2)}));
    return best;
}

/// sup of (mu(f^2) - r)^+ / E(f, f) over mean-zero f with ||f||_inf = 1 (the
/// quotient only grows as f is scaled up), by a scan over directions in the
/// mean-zero plane followed by golden-section refinement.
inline double alpha_oracle(const Three& t, double r) {
    const Eigen::Vector3d m(t.m[0], t.m[1], t.m[2]);
    const Eigen::Vector3d u = Eigen::Vector3d(m(1), -m(0), 0.0).normalized();
    const Eigen::Vector3d v = m.cross(u).normalized();
    auto q = [&](double phi) {
        Eigen::Vector3d f = std::cos(phi) * u + std::sin(phi) * v;
        f /= f.cwiseAbs().maxCoeff();
        const std::array<double, 3> g{f(0), f(1), f(2)};
        return std::max(0.0, t.mean_square(g) - r) / t.energy(g);
    };
    const int N = 200000;
    const double step = std::numbers::pi / N;
    int arg = 0;
    double best = -1.0;
    for (int k = 0; k < N; ++k)
        if (q(k * step) > best) best = q((arg = k) * step);
    double a = (arg - 2) * step, b = (arg + 2) * step;
    const double g = (std::sqrt(5.0) - 1) / 2;
    for (int it = 0; it < 200; ++it) {
        const double x1 = b - g * (b - a), x2 = a + g * (b - a);
        if (q(x1) < q(x2)) a = x1;
        else b = x2;
    }
    return std::max(best, q(0.5 * (a + b)));
}

} // namespace sticky::testing
