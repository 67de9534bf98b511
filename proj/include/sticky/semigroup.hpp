#pragma once

// The semigroup P_t = e^{tL} of a discrete instance through the dense
// eigen-decomposition of its symmetrised generator.

#include "sticky/discretize.hpp"
#include "sticky/error.hpp"
#include "sticky/numeric.hpp"
#include "sticky/rate_function.hpp"
#include "sticky/rng.hpp"
#include "sticky/transforms.hpp"
#include "sticky/verify.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sticky {

inline constexpr std::size_t kMaxSpectralNodes = 2500;

/// Eigenvalues 0 = lambda_0 <= lambda_1 <= ... of -L and an m-orthonormal
/// eigenbasis (columns of phi).
struct SpectralData {
    std::vector<double> m;
    Eigen::VectorXd lambda;
    Eigen::MatrixXd phi;

    std::size_t size() const { return m.size(); }
    double gap() const { return lambda.size() > 1 ? lambda(1) : 0.0; }

    /// Coefficients <phi_k, f>_m.
    Eigen::VectorXd coefficients(std::span<const double> f) const {
        Eigen::VectorXd mf(static_cast<Eigen::Index>(size()));
        for (std::size_t i = 0; i < size(); ++i) mf(static_cast<Eigen::Index>(i)) = m[i] * f[i];
        return phi.transpose() * mf;
    }
};

inline SpectralData spectral_data(const DiscreteInstance& inst) {
    require(inst.size() <= kMaxSpectralNodes, ErrorCode::InvalidArgument, "instance too large for a dense decomposition");
    const Eigen::Index n = static_cast<Eigen::Index>(inst.size());
    Eigen::VectorXd s(n);
    for (Eigen::Index i = 0; i < n; ++i) s(i) = 1.0 / std::sqrt(inst.m[static_cast<std::size_t>(i)]);
    const Eigen::MatrixXd S = s.asDiagonal() * inst.dense_E() * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
    require(eig.info() == Eigen::Success, ErrorCode::NonConvergent, "eigen-decomposition failed");
    SpectralData out;
    out.m = inst.m;
    out.lambda = eig.eigenvalues();
    out.phi = s.asDiagonal() * eig.eigenvectors();
    // The ground state is the constant; pin its sign and clear rounding in lambda_0.
    out.lambda(0) = 0.0;
    if (out.phi(0, 0) < 0) out.phi.col(0) *= -1.0;
    return out;
}

/// P_t f.
inline std::vector<double> evolve(const SpectralData& sd, std::span<const double> f, double t) {
    require(t >= 0, ErrorCode::InvalidArgument, "t must be >= 0");
    const Eigen::VectorXd c = sd.coefficients(f);
    const Eigen::VectorXd decay = (-t * sd.lambda.array()).exp();
    const Eigen::VectorXd g = sd.phi * (c.array() * decay.array()).matrix();
    return std::vector<double>(g.data(), g.data() + g.size());
}

/// ||P_t - mu||_{2->2} = e^{-lambda_1 t}.
inline double decay_2to2(const SpectralData& sd, double t) {
    require(t >= 0, ErrorCode::InvalidArgument, "t must be >= 0");
    return std::exp(-sd.gap() * t);
}

/// Transition densities p_t(x, y) / m_y for all x, y.
inline Eigen::MatrixXd kernel_density(const SpectralData& sd, double t) {
    const Eigen::VectorXd decay = (-t * sd.lambda.array()).exp();
    return sd.phi * decay.asDiagonal() * sd.phi.transpose();
}

/// max_{x,y} p_t(x, y) / m_y. By symmetry of the density and Cauchy-Schwarz
/// through P_{t/2} the maximum sits on the diagonal.
inline double kernel_sup(const SpectralData& sd, double t) {
    require(t >= 0, ErrorCode::InvalidArgument, "t must be >= 0");
    const Eigen::VectorXd decay = (-t * sd.lambda.array()).exp();
    const Eigen::VectorXd diag = sd.phi.array().square().matrix() * decay;
    return diag.maxCoeff();
}

struct NormBracket {
    double lower = 0.0;
    double upper = 0.0;
};

/// Bracket on ||P_t - mu||_{inf->2}: the lower end maximises over random sign
/// vectors and the sign pattern of the first eigenfunction; the upper end is
/// min(||P_t - mu||_{2->2}, sqrt(sum_x m_x (sum_y |(P_t - mu)_{xy}|)^2)).
inline NormBracket norm_infty_to_2_bounds(const SpectralData& sd, double t, long trials, std::uint64_t seed) {
    require(t >= 0, ErrorCode::InvalidArgument, "t must be >= 0");
    const std::size_t n = sd.size();
    const Eigen::VectorXd decay = (-t * sd.lambda.array()).exp();
    auto centred_norm = [&](const std::vector<double>& s) {
        Eigen::VectorXd c = sd.coefficients(s);
        c(0) = 0.0;
        return std::sqrt((c.array().square() * decay.array().square()).sum());
    };
    NormBracket out;
    if (n >= 2) {
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = sd.phi(static_cast<Eigen::Index>(i), 1) >= 0 ? 1.0 : -1.0;
        out.lower = centred_norm(s);
    }
    for (long k = 0; k < trials; ++k) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(k)}));
        std::vector<double> s(n);
        for (auto& v : s) v = rng.uniform() < 0.5 ? -1.0 : 1.0;
        out.lower = std::max(out.lower, centred_norm(s));
    }
    const Eigen::MatrixXd K = kernel_density(sd, t);
    double rows = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        double row = 0.0;
        for (std::size_t y = 0; y < n; ++y)
            row += std::abs(K(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) - 1.0) * sd.m[y];
        rows += sd.m[x] * row * row;
    }
    out.upper = std::min(decay_2to2(sd, t), std::sqrt(rows));
    out.lower = std::min(out.lower, out.upper * (1.0 + 1e-12));
    return out;
}

namespace detail {

inline std::vector<double> normalised(std::span<const double> f, std::span<const double> m) {
    double sq = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) sq += m[i] * f[i] * f[i];
    std::vector<double> g(f.begin(), f.end());
    if (sq > 0)
        for (auto& v : g) v /= std::sqrt(sq);
    return g;
}

} // namespace detail

/// mu((P_t f)^2 1{|P_t f| > s}) with f rescaled to mu(f^2) = 1.
inline double tail_functional(const SpectralData& sd, double t, std::span<const double> f, double s) {
    require(s >= 0, ErrorCode::InvalidArgument, "s must be >= 0");
    const auto g = evolve(sd, detail::normalised(f, sd.m), t);
    double out = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (std::abs(g[i]) > s) out += sd.m[i] * g[i] * g[i];
    return out;
}

/// mu((P_t f)^2 exp[C_t (log(1 + (P_t f)^2))^delta]) with f rescaled to mu(f^2) = 1.
inline double ui_statistic(const SpectralData& sd, double t, double Ct, double delta, std::span<const double> f) {
    require(Ct >= 0 && delta > 0, ErrorCode::InvalidArgument, "need C_t >= 0 and delta > 0");
    const auto g = evolve(sd, detail::normalised(f, sd.m), t);
    double out = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double sq = g[i] * g[i];
        out += sd.m[i] * sq * std::exp(Ct * std::pow(std::log1p(sq), delta));
    }
    return out;
}

/// mu((P_t f)^2) <= e^{-2rt} mu(f^2) + beta(1/r)(1 - e^{-2rt}) mu(|f|)^2 over
/// random f and every (r, t).
inline ViolationReport check_tt1_forward(const DiscreteInstance& inst, const SpectralData& sd, const RateFunction& beta,
                                         std::span<const double> r_grid, std::span<const double> t_grid, long trials,
                                         std::uint64_t seed) {
    require(!r_grid.empty() && !t_grid.empty(), ErrorCode::InvalidArgument, "empty grid");
    ViolationReport rep;
    rep.seed = seed;
    FunctionSampler sampler(inst);
    std::vector<double> b(r_grid.size());
    for (std::size_t k = 0; k < r_grid.size(); ++k) b[k] = beta(1.0 / r_grid[k]);
    for (long n = 0; n < trials; ++n) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(n)}));
        const auto f = sampler.sample(rng, n);
        ++rep.functions;
        const Eigen::VectorXd c2 = sd.coefficients(f).array().square();
        const double sq = inst.mean_square(f), ab = inst.mean_abs(f);
        for (double t : t_grid) {
            const double lhs = (c2.array() * (-2.0 * t * sd.lambda.array()).exp()).sum();
            for (std::size_t k = 0; k < r_grid.size(); ++k) {
                const double e = std::exp(-2.0 * r_grid[k] * t);
                rep.record(lhs, e * sq + b[k] * (1.0 - e) * ab * ab);
            }
        }
    }
    return rep;
}

/// tail_functional(t, f, s) <= exp[-2t Gamma_t(eps s)] / (1 - eps)^2 over
/// random f and every (t, s).
inline ViolationReport check_tt1_tail(const DiscreteInstance& inst, const SpectralData& sd, const RateFunction& beta,
                                      std::span<const double> t_grid, std::span<const double> s_grid, long trials,
                                      std::uint64_t seed, double eps = 0.5) {
    require(!t_grid.empty() && !s_grid.empty(), ErrorCode::InvalidArgument, "empty grid");
    ViolationReport rep;
    rep.seed = seed;
    FunctionSampler sampler(inst);
    std::vector<std::vector<double>> bound(t_grid.size(), std::vector<double>(s_grid.size()));
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        for (std::size_t j = 0; j < s_grid.size(); ++j) bound[i][j] = gamma_tail_bound(beta, t_grid[i], s_grid[j], eps);
    for (long n = 0; n < trials; ++n) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(n)}));
        const auto f = detail::normalised(sampler.sample(rng, n), sd.m);
        ++rep.functions;
        for (std::size_t i = 0; i < t_grid.size(); ++i) {
            const auto g = evolve(sd, f, t_grid[i]);
            for (std::size_t j = 0; j < s_grid.size(); ++j) {
                double lhs = 0.0;
                for (std::size_t x = 0; x < g.size(); ++x)
                    if (std::abs(g[x]) > s_grid[j]) lhs += sd.m[x] * g[x] * g[x];
                rep.record(lhs, bound[i][j]);
            }
        }
    }
    return rep;
}

/// One row of the decay table.
struct DecayRow {
    double t = 0.0;
    double decay_2to2 = 0.0;
    double kernel_sup = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double xi_bound = numeric::kInfinity;
};

/// Decay curves on a t grid; xi_bound is xi(t) from alpha when given.
inline std::vector<DecayRow> decay_table(const SpectralData& sd, std::span<const double> t_grid,
                                         const std::optional<RateFunction>& alpha, long sign_trials,
                                         std::uint64_t seed) {
    std::vector<DecayRow> rows;
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        const double t = t_grid[k];
        DecayRow row;
        row.t = t;
        row.decay_2to2 = decay_2to2(sd, t);
        row.kernel_sup = kernel_sup(sd, t);
        const auto br = norm_infty_to_2_bounds(sd, t, sign_trials, derive_seed(seed, {k}));
        row.lower = br.lower;
        row.upper = br.upper;
        if (alpha && t > 0) row.xi_bound = xi_from_alpha(*alpha, t);
        rows.push_back(row);
    }
    return rows;
}

} // namespace sticky
