#pragma once

// Reads semigroup regimes off the small-r order of beta and alpha.

#include "sticky/error.hpp"
#include "sticky/rate_function.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace sticky {

namespace regime {
inline constexpr const char* kHyperbounded = "hyperbounded";
inline constexpr const char* kSuperbounded = "superbounded";
inline constexpr const char* kUltrabounded = "ultrabounded";
inline constexpr const char* kUniformlyIntegrable = "L2-uniformly-integrable";
inline constexpr const char* kExponential = "exponential-ergodic";
inline constexpr const char* kSubexponential = "subexponential";
inline constexpr const char* kAlgebraic = "algebraic";
inline constexpr const char* kLogarithmic = "logarithmic";
} // namespace regime

struct RegimeReport {
    /// Every implied label, strongest first within each of the beta and alpha groups.
    std::vector<std::string> labels;
    std::optional<std::string> beta_label;  ///< strongest label read from beta
    std::optional<std::string> alpha_label; ///< the label read from alpha
    std::optional<double> ui_exponent;           ///< Orlicz exponent of the uniform integrability
    std::optional<double> kernel_exponent;       ///< ||P_t||_{1->inf} grows like exp(t^-k) or t^-k
    bool kernel_exponential = false;             ///< whether the kernel growth is exp(t^-k)
    std::optional<double> subexponential_exponent; ///< decay exp(-c t^eps)
    std::optional<double> algebraic_exponent;    ///< decay t^k (k < 0)
    std::optional<double> logarithmic_exponent;  ///< decay log(1 + t)^-p

    bool has(const std::string& label) const { return std::find(labels.begin(), labels.end(), label) != labels.end(); }
};

namespace detail {

inline Order require_order(const RateFunction& f, const char* which) {
    if (!f.order())
        throw Error(ErrorCode::Unclassified, std::string(which) + " has no parametric order (" + f.to_string() + ")");
    return *f.order();
}

inline bool near(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

} // namespace detail

inline RegimeReport classify_regime(const std::optional<RateFunction>& beta, const std::optional<RateFunction>& alpha) {
    require(beta.has_value() || alpha.has_value(), ErrorCode::InvalidArgument, "classify_regime needs beta or alpha");
    RegimeReport out;
    if (beta) {
        const Order o = detail::require_order(*beta, "beta");
        auto bounded_chain = [&] {
            out.labels.insert(out.labels.end(), {regime::kUltrabounded, regime::kSuperbounded, regime::kHyperbounded});
            out.beta_label = regime::kUltrabounded;
        };
        switch (o.family) {
        case Family::ExpPower:
            if (detail::near(o.exponent, 1.0)) {
                out.labels.insert(out.labels.end(), {regime::kHyperbounded, regime::kUniformlyIntegrable});
                out.beta_label = regime::kHyperbounded;
                out.ui_exponent = 1.0;
            } else if (o.exponent > 1.0) {
                out.labels.push_back(regime::kUniformlyIntegrable);
                out.beta_label = regime::kUniformlyIntegrable;
                out.ui_exponent = 1.0 / o.exponent;
            } else {
                bounded_chain();
                out.kernel_exponent = o.exponent / (1.0 - o.exponent);
                out.kernel_exponential = true;
            }
            break;
        case Family::Poly:
            bounded_chain();
            out.kernel_exponent = o.exponent;
            break;
        case Family::LogPower: bounded_chain(); break;
        case Family::Constant:
            bounded_chain();
            out.kernel_exponent = 0.0;
            break;
        default: throw Error(ErrorCode::Unclassified, "beta has no parametric order");
        }
    }
    if (alpha) {
        const Order o = detail::require_order(*alpha, "alpha");
        switch (o.family) {
        case Family::Constant:
            out.labels.push_back(regime::kExponential);
            out.alpha_label = regime::kExponential;
            break;
        case Family::LogPower:
            out.labels.push_back(regime::kSubexponential);
            out.alpha_label = regime::kSubexponential;
            out.subexponential_exponent = 1.0 / (1.0 + o.exponent);
            break;
        case Family::Poly:
            out.labels.push_back(regime::kAlgebraic);
            out.alpha_label = regime::kAlgebraic;
            out.algebraic_exponent = -1.0 / o.exponent;
            break;
        case Family::ExpPower:
            out.labels.push_back(regime::kLogarithmic);
            out.alpha_label = regime::kLogarithmic;
            out.logarithmic_exponent = 1.0 / o.exponent;
            break;
        default: throw Error(ErrorCode::Unclassified, "alpha has no parametric order");
        }
    }
    return out;
}

/// The Orlicz exponent delta of the uniform integrability functional when beta
/// is exp[c(1 + r^{-1/delta})] with delta in (0, 1].
inline std::optional<double> ui_functional_exponent(const RateFunction& beta) {
    const auto& o = beta.order();
    if (!o || o->family != Family::ExpPower || o->exponent < 1.0 - 1e-12) return std::nullopt;
    return 1.0 / o->exponent;
}

} // namespace sticky
