#pragma once

// Rate functions of the sticky form from those of the interior and boundary
// parts: with boundary diffusion (delta > 0) and without it.

#include "sticky/constants.hpp"
#include "sticky/error.hpp"
#include "sticky/rate_function.hpp"

#include <optional>
#include <sstream>

namespace sticky {

/// r -> max{beta_V(r) / theta, beta_W(delta r) / (1 - theta)}.
inline RateFunction compose_beta_with_boundary(const RateFunction& beta_V, const RateFunction& beta_W, double theta,
                                               double delta) {
    require(theta > 0 && theta < 1, ErrorCode::InvalidArgument, "theta must lie in (0, 1)");
    require(delta > 0, ErrorCode::InvalidArgument, "delta must be > 0");
    std::ostringstream name;
    name << "max{" << beta_V.to_string() << " / " << theta << ", " << beta_W.to_string() << "(" << delta << " r) / "
         << 1 - theta << "}";
    return RateFunction::composed(
        [beta_V, beta_W, theta, delta](double r) {
            return std::max(beta_V(r) / theta, beta_W(delta * r) / (1.0 - theta));
        },
        dominant(beta_V.order(), beta_W.order()), name.str(), [beta_V, beta_W, theta, delta](double r) {
            return std::max(beta_V.log_value(r) - std::log(theta), beta_W.log_value(delta * r) - std::log1p(-theta));
        });
}

enum class AlphaConstantForm {
    GradientSquared, ///< additive constant (1 - theta)/theta C0^2 C2^2
    LiteralC1,       ///< the same constant written with C1^2
};

/// r -> max{(1 + C0^2 C1^2) alpha_V(s) + ((1 - theta)/theta) C0^2 C2^2, alpha_W(s) / delta}
/// with s = r / (4 + 4 theta C0^2 C1^2).
inline RateFunction compose_alpha_with_boundary(const RateFunction& alpha_V, const RateFunction& alpha_W,
                                                const Constants& c, double delta,
                                                AlphaConstantForm form = AlphaConstantForm::GradientSquared) {
    require(c.C1.has_value() && c.C2.has_value(), ErrorCode::MissingConstants, "composition needs C1 and C2");
    require(delta > 0, ErrorCode::InvalidArgument, "delta must be > 0");
    require(c.theta > 0 && c.theta < 1, ErrorCode::InvalidArgument, "theta must lie in (0, 1)");
    const double th = c.theta, c0sq = c.C0 * c.C0, c1sq = *c.C1 * *c.C1;
    const double k2 = form == AlphaConstantForm::GradientSquared ? *c.C2 * *c.C2 : c1sq;
    const double factor = 1.0 + c0sq * c1sq;
    const double additive = (1.0 - th) / th * c0sq * k2;
    const double divisor = 4.0 + 4.0 * th * c0sq * c1sq;
    std::ostringstream name;
    name << "max{" << factor << " " << alpha_V.to_string() << "(r/" << divisor << ") + " << additive << ", "
         << alpha_W.to_string() << "(r/" << divisor << ") / " << delta << "}";
    return RateFunction::composed(
        [=](double r) {
            const double s = r / divisor;
            return std::max(factor * alpha_V(s) + additive, alpha_W(s) / delta);
        },
        dominant(alpha_V.order(), alpha_W.order()), name.str());
}

namespace detail {

/// Order of r -> (a/r + b) beta_V(k r^2 / (1 + l r)) as r -> 0.
inline std::optional<Order> order_after_square(const std::optional<Order>& inner, bool has_prefactor_pole) {
    if (!inner) return std::nullopt;
    switch (inner->family) {
    case Family::ExpPower: return Order{Family::ExpPower, 2.0 * inner->exponent};
    case Family::Poly: return Order{Family::Poly, (has_prefactor_pole ? 1.0 : 0.0) + 2.0 * inner->exponent};
    case Family::Constant:
        return has_prefactor_pole ? Order{Family::Poly, 1.0} : Order{Family::Constant, 0.0};
    default: return std::nullopt;
    }
}

} // namespace detail

/// r -> (2 C0^2 C2bar^2 / (theta r) + C0 C1bar) beta_V(theta^2 r^2 / (4 C0^2 C2bar^2 + 2 theta C0 C1bar r)).
inline RateFunction compose_beta_no_boundary(const RateFunction& beta_V, const Constants& c) {
    require(c.C1bar.has_value() && c.C2bar.has_value(), ErrorCode::MissingConstants,
            "composition needs C1bar and C2bar");
    require(c.theta > 0 && c.theta < 1, ErrorCode::InvalidArgument, "theta must lie in (0, 1)");
    const double th = c.theta, q2 = c.C0 * c.C0 * *c.C2bar * *c.C2bar, q1 = c.C0 * *c.C1bar;
    require(q2 > 0 || q1 > 0, ErrorCode::MissingConstants, "C0 C1bar and C0 C2bar vanish together");
    std::ostringstream name;
    name << "(" << 2 * q2 / th << "/r + " << q1 << ") " << beta_V.to_string() << "(" << th * th << " r^2 / ("
         << 4 * q2 << " + " << 2 * th * q1 << " r))";
    return RateFunction::composed(
        [=](double r) {
            const double prefactor = 2.0 * q2 / (th * r) + q1;
            const double arg = th * th * r * r / (4.0 * q2 + 2.0 * th * q1 * r);
            return prefactor * beta_V(arg);
        },
        detail::order_after_square(beta_V.order(), q2 > 0), name.str(), [=](double r) {
            const double prefactor = 2.0 * q2 / (th * r) + q1;
            const double arg = th * th * r * r / (4.0 * q2 + 2.0 * th * q1 * r);
            return std::log(prefactor) + beta_V.log_value(arg);
        });
}

/// r -> (A / theta) alpha_V(r / (4 A)) + B / theta.
inline RateFunction compose_alpha_no_boundary(const RateFunction& alpha_V, const Constants& c) {
    require(c.A.has_value() && c.B.has_value(), ErrorCode::MissingConstants, "composition needs A and B");
    require(c.theta > 0 && c.theta <= 1, ErrorCode::InvalidArgument, "theta must lie in (0, 1]");
    const double th = c.theta, A = *c.A, B = *c.B;
    std::ostringstream name;
    name << A / th << " " << alpha_V.to_string() << "(r/" << 4 * A << ") + " << B / th;
    return RateFunction::composed([=](double r) { return A / th * alpha_V(r / (4.0 * A)) + B / th; },
                                  alpha_V.order(), name.str());
}

struct InteriorRates {
    std::optional<RateFunction> beta_V;
    std::optional<RateFunction> alpha_V;
};

/// Interior rate orders for V = W = -|x|^tau on the half-line, with the
/// calibration constant c.
inline InteriorRates example31_rates(double tau, double c = 1.0) {
    require(tau > 0, ErrorCode::InvalidArgument, "tau must be > 0");
    require(c > 0, ErrorCode::InvalidArgument, "calibration constant must be > 0");
    InteriorRates out;
    if (tau > 1)
        out.beta_V = RateFunction::exp_power(c, tau / (2.0 * (tau - 1.0)));
    else if (tau == 1)
        out.alpha_V = RateFunction::constant(c);
    else
        out.alpha_V = RateFunction::log_power(0.0, c, 4.0 * (1.0 - tau) / tau);
    return out;
}

} // namespace sticky
