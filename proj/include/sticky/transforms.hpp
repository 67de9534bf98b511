#pragma once

// Transforms between rate functions and semigroup behaviour: the tail index
// Gamma_t, beta from a tail profile phi_t, the ultraboundedness integral Psi
// and its kernel bound, the decay profile xi from alpha, and its converse.

#include "sticky/error.hpp"
#include "sticky/numeric.hpp"
#include "sticky/rate_function.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace sticky {

/// Gamma_t(s) = inf{r >= 0 : beta(1/r)(e^{2rt} - 1) >= s^2}.
inline double gamma_tail(const RateFunction& beta, double t, double s) {
    require(t > 0, ErrorCode::InvalidArgument, "t must be > 0");
    require(s >= 0, ErrorCode::InvalidArgument, "s must be >= 0");
    if (s == 0) return 0.0;
    const double target = s * s;
    auto ok = [&](double r) { return r > 0 && beta(1.0 / r) * std::expm1(2.0 * r * t) >= target; };
    double hi = 1.0;
    while (!ok(hi)) {
        hi *= 2.0;
        require(hi < 1e300, ErrorCode::NonFinite, "Gamma_t bracket did not close");
    }
    return numeric::bisect_first_true(ok, 0.0, hi);
}

/// exp[-2t Gamma_t(eps s)] / (1 - eps)^2, the bound on mu((P_t f)^2 1{|P_t f| > s}).
inline double gamma_tail_bound(const RateFunction& beta, double t, double s, double eps = 0.5) {
    require(eps > 0 && eps < 1, ErrorCode::InvalidArgument, "eps must lie in (0, 1)");
    return std::exp(-2.0 * t * gamma_tail(beta, t, eps * s)) / ((1.0 - eps) * (1.0 - eps));
}

/// A non-increasing function given by knots; phi^{-1}(u) is the smallest knot
/// abscissa whose value is <= u (no interpolation, so the inverse is never
/// underestimated between knots).
struct MonotoneTable {
    std::vector<double> x;
    std::vector<double> value;

    void validate(ErrorCode code, const char* what) const {
        require(x.size() == value.size() && x.size() >= 2, code, std::string(what) + " table needs >= 2 knots");
        for (std::size_t k = 1; k < x.size(); ++k) {
            require(x[k] > x[k - 1], code, std::string(what) + " abscissae must increase");
            require(value[k] <= value[k - 1], code, std::string(what) + " must be non-increasing");
        }
    }

    /// inf{x_k : value_k <= u}, or +inf when no knot reaches u.
    double inverse(double u) const {
        // value is non-increasing, so the first qualifying knot is found by bisection.
        auto it = std::partition_point(value.begin(), value.end(), [u](double v) { return v > u; });
        if (it == value.end()) return numeric::kInfinity;
        return x[static_cast<std::size_t>(it - value.begin())];
    }
};

/// beta(r) = r [phi^{-1}(e^{-2t/r} / 2)]^2 e^{2t/r} / (4t). Requires phi to reach
/// the level e^{-2t/r_min}/2 inside the table (r_min = 0 demands it reach 0);
/// below r_min the returned function is +inf.
inline RateFunction beta_from_phi(const MonotoneTable& phi, double t, double r_min = 0.0) {
    require(t > 0, ErrorCode::InvalidArgument, "t must be > 0");
    phi.validate(ErrorCode::PhiNotDecaying, "phi");
    const double needed = r_min > 0 ? 0.5 * std::exp(-2.0 * t / r_min) : 0.0;
    require(phi.value.back() <= needed, ErrorCode::PhiNotDecaying,
            "phi does not decay to the level required on the requested r range");
    return RateFunction::composed(
        [phi, t](double r) {
            const double level = 0.5 * std::exp(-2.0 * t / r);
            const double inv = phi.inverse(level);
            if (!std::isfinite(inv)) return numeric::kInfinity;
            return r * inv * inv * std::exp(2.0 * t / r) / (4.0 * t);
        },
        std::nullopt, "beta from phi_t");
}

/// beta^{-1}(s) = inf{r > 0 : beta(r) <= s} for a non-increasing beta, by
/// bisection in log r.
inline double rate_inverse(const RateFunction& beta, double s) {
    constexpr double lo = 1e-300, hi_cap = 1e300;
    if (beta(lo) <= s) return 0.0;
    double hi = 1.0;
    while (beta(hi) > s) {
        hi *= 16.0;
        if (hi > hi_cap) return numeric::kInfinity;
    }
    return numeric::bisect_first_true_log([&](double r) { return beta(r) <= s; }, lo, hi);
}

struct PsiResult {
    double psi = 0.0;
    double kernel_bound = 0.0;
};

namespace detail {

/// Whether Psi converges: decided from the order class when one is known,
/// otherwise from the decay of v log beta(v) as v -> 0.
inline bool psi_converges(const RateFunction& beta) {
    if (beta.family() == Family::Constant) return false;
    if (const auto& o = beta.order()) {
        switch (o->family) {
        case Family::ExpPower: return o->exponent < 1.0;
        case Family::Poly: return o->exponent > 0.0;
        case Family::LogPower: return true;
        default: return false;
        }
    }
    const double a = 1e-6 * beta.log_value(1e-6), b = 1e-10 * beta.log_value(1e-10), c = 1e-14 * beta.log_value(1e-14);
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) return false;
    if (beta(1e-14) <= beta(1.0) * (1 + 1e-12)) return false; // no decay to invert
    return std::abs(c) < std::abs(b) && std::abs(b) < std::abs(a) && std::abs(c) < 1e-6;
}

} // namespace detail

/// Psi(u) = int_u^inf beta^{-1}(r) / r dr. Integrating by parts with
/// v = beta^{-1}(r) gives int_0^{v_u} log beta(v) dv - v_u log u, which only
/// needs one inversion.
class PsiUltra {
public:
    explicit PsiUltra(RateFunction beta) : beta_(std::move(beta)) {
        if (!detail::psi_converges(beta_))
            throw Error(ErrorCode::NotUltra, "Psi diverges for " + beta_.to_string());
        inf_beta_ = beta_.infimum();
    }

    double inf_beta() const { return inf_beta_; }

    double psi(double u) const {
        const double v = rate_inverse(beta_, u);
        if (!std::isfinite(v)) return numeric::kInfinity;
        if (v == 0.0) return 0.0;
        boost::math::quadrature::tanh_sinh<double> integrator;
        const auto log_beta = [&](double x) { return beta_.log_value(x); };
        const double integral = integrator.integrate(log_beta, 0.0, v);
        return integral - v * std::log(u);
    }

    /// Psi^{-1}(t) = inf{r >= inf beta : Psi(r) <= t}; +inf beyond double range.
    double psi_inverse(double t) const {
        require(t > 0, ErrorCode::InvalidArgument, "t must be > 0");
        const double lo = std::max(inf_beta_, std::numeric_limits<double>::min());
        auto ok = [&](double r) { return r >= inf_beta_ && psi(r) <= t; };
        if (std::isfinite(rate_inverse(beta_, lo)) && ok(lo)) return lo;
        double hi = std::max(2.0 * lo, 1.0);
        while (!ok(hi)) {
            hi *= 4.0;
            if (hi > 1e300) return numeric::kInfinity;
        }
        return numeric::bisect_first_true_log(ok, lo * (1 + 1e-15), hi);
    }

    /// inf over eps in (0, 1) of max{inf beta / eps, Psi^{-1}((1 - eps) t)}.
    double kernel_bound(double t) const {
        auto objective = [&](double eps) { return std::max(inf_beta_ / eps, psi_inverse((1.0 - eps) * t)); };
        const double eps = numeric::golden_section_min(objective, 1e-9, 1.0 - 1e-9, 1e-7);
        double best = objective(eps);
        // The objective is quasi-convex; guard the golden-section answer with a coarse scan.
        for (double e : numeric::linear_grid(0.02, 0.98, 49)) best = std::min(best, objective(e));
        return best;
    }

private:
    RateFunction beta_;
    double inf_beta_ = 0.0;
};

/// Psi(t) and the ultraboundedness kernel bound at t.
inline PsiResult psi_ultra(const RateFunction& beta, double t) {
    require(t > 0, ErrorCode::InvalidArgument, "t must be > 0");
    PsiUltra ultra(beta);
    PsiResult out;
    out.psi = t > ultra.inf_beta() ? ultra.psi(t) : numeric::kInfinity;
    out.kernel_bound = ultra.kernel_bound(t);
    return out;
}

/// xi(t) = inf{2r : r > 0, -alpha(r) log(r) / 2 <= t}; at most 2 since every
/// r >= 1 qualifies.
inline double xi_from_alpha(const RateFunction& alpha, double t) {
    require(t > 0, ErrorCode::InvalidArgument, "t must be > 0");
    auto ok = [&](double r) { return r >= 1.0 || -0.5 * alpha(r) * std::log(r) <= t; };
    constexpr double lo = 1e-300;
    if (ok(lo)) return 2.0 * lo;
    return 2.0 * numeric::bisect_first_true_log(ok, lo, 1.0);
}

/// alpha(r) = 2r inf_{s > 0} xi^{-1}(s e^{1 - s/r}) / s, the inner infimum over
/// a log grid in s refined by golden section. +inf where no s reaches the
/// table's range.
inline RateFunction alpha_from_xi(const MonotoneTable& xi) {
    xi.validate(ErrorCode::XiNotDecaying, "xi");
    require(xi.value.back() < xi.value.front() && xi.value.back() <= 1e-2 * xi.value.front(), ErrorCode::XiNotDecaying,
            "xi does not decay within the table");
    return RateFunction::composed(
        [xi](double r) {
            auto g = [&](double s) {
                const double inv = xi.inverse(s * std::exp(1.0 - s / r));
                return inv / s;
            };
            double best = numeric::kInfinity, best_s = r;
            for (double s : numeric::log_grid(r * 1e-8, r * 1e3, 400)) {
                const double v = g(s);
                if (v < best) {
                    best = v;
                    best_s = s;
                }
            }
            if (std::isfinite(best)) {
                const double s = numeric::golden_section_min(g, best_s / 1.06, best_s * 1.06, best_s * 1e-8);
                best = std::min(best, g(s));
            }
            return 2.0 * r * best;
        },
        std::nullopt, "alpha from xi");
}

} // namespace sticky
