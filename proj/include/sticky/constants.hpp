#pragma once

// The bound constants built from a collar function h with unit inward normal
// derivative on the sticky boundary.

#include "sticky/error.hpp"
#include "sticky/model.hpp"
#include "sticky/numeric.hpp"

#include <cmath>
#include <optional>

namespace sticky {

struct Constants {
    double theta = 0.5;
    double C0 = 0.0;
    std::optional<double> C1;
    std::optional<double> C2;
    std::optional<double> C1bar;
    std::optional<double> C2bar;
    std::optional<double> A;
    std::optional<double> B;
};

/// A = theta + (1 - theta)(C0^2 C2bar^2 + C0 C1bar)((1 - theta) C0^2 C1^2 + 1).
inline double constant_A(double theta, double C0, double C1, double C1bar, double C2bar) {
    return theta + (1.0 - theta) * (C0 * C0 * C2bar * C2bar + C0 * C1bar) * ((1.0 - theta) * C0 * C0 * C1 * C1 + 1.0);
}

/// B = 1 - theta + ((1 - theta)^2 / theta) C0^2 C2^2.
inline double constant_B(double theta, double C0, double C2) {
    return 1.0 - theta + (1.0 - theta) * (1.0 - theta) / theta * C0 * C0 * C2 * C2;
}

inline void fill_AB(Constants& c) {
    if (c.C1 && c.C1bar && c.C2bar) c.A = constant_A(c.theta, c.C0, *c.C1, *c.C1bar, *c.C2bar);
    if (c.C2) c.B = constant_B(c.theta, c.C0, *c.C2);
}

/// C0 = Z_V exp(sup over the sticky boundary of (W - V)^+) / Z_W.
inline double constant_C0(const ModelSpec& model, const MeasureSummary& ms, std::size_t boundary_points = 4097) {
    double sup = 0.0;
    const auto& d = model.domain;
    for (BoundarySide side : d.sticky_sides()) {
        const double xb = d.boundary_x(side);
        const std::size_t n = d.is_strip() ? boundary_points : 1;
        for (std::size_t k = 0; k < n; ++k) {
            const Point p{xb, d.is_strip() ? d.period_y() * static_cast<double>(k) / static_cast<double>(n) : 0.0};
            sup = std::max(sup, numeric::positive_part(model.W(p) - model.V(p)));
        }
    }
    return ms.Z_V * std::exp(sup) / ms.Z_W_boundary;
}

namespace detail {

inline void check_normal_derivative(const ModelSpec& model, const CollarFunction& h) {
    const auto& d = model.domain;
    const double e = 1e-4;
    for (BoundarySide side : d.sticky_sides()) {
        const double xb = d.boundary_x(side);
        const double dir = side == BoundarySide::Left ? 1.0 : -1.0;
        const std::size_t ny = d.is_strip() ? 16 : 1;
        for (std::size_t k = 0; k < ny; ++k) {
            const double y = d.is_strip() ? d.period_y() * static_cast<double>(k) / static_cast<double>(ny) : 0.0;
            const double nh = (-3.0 * h({xb, y}) + 4.0 * h({xb + dir * e, y}) - h({xb + 2 * dir * e, y})) / (2 * e);
            if (!(std::abs(nh - 1.0) <= 1e-4))
                throw Error(ErrorCode::NormalDerivativeMismatch,
                            "inward normal derivative of h is " + std::to_string(nh) + ", expected 1");
        }
    }
}

} // namespace detail

/// C1 = ||(L_V h)^-||_{L2(mu_V)}, C2 = ||grad h||_{L2(mu_V)} by refined
/// quadrature; C1bar, C2bar as sup norms by grid maximisation (left empty when
/// unbounded); A and B whenever their inputs exist.
inline Constants constants_from_h(const ModelSpec& model, const CollarFunction& h,
                                  std::size_t quadrature_points = kDefaultQuadraturePoints) {
    detail::check_normal_derivative(model, h);
    const MeasureSummary ms = partition_constants(model, quadrature_points);
    Constants c;
    c.theta = ms.theta;
    c.C0 = constant_C0(model, ms);

    const Potential V = model.V;
    auto LVh = [&](Point p) {
        const Point gv = V.gradient(p), gh = h.gradient(p);
        return h.laplacian(p) + gv.x * gh.x + gv.y * gh.y;
    };
    auto grad2 = [&](Point p) {
        const Point g = h.gradient(p);
        return g.x * g.x + g.y * g.y;
    };
    const std::size_t pts = model.domain.is_strip() ? std::min<std::size_t>(quadrature_points, 257) : quadrature_points;
    std::function<double(Point)> f1 = [&](Point p) {
        const double neg = numeric::negative_part(LVh(p));
        return neg == 0.0 ? 0.0 : neg * neg * ms.density_V(p);
    };
    std::function<double(Point)> f2 = [&](Point p) {
        const double g = grad2(p);
        return g == 0.0 ? 0.0 : g * ms.density_V(p);
    };
    c.C1 = std::sqrt(numeric::refined([&](std::size_t n) { return detail::interior_integral(model, f1, n); }, pts, 1e-3,
                                      ErrorCode::NonFinite, "C1 quadrature"));
    c.C2 = std::sqrt(numeric::refined([&](std::size_t n) { return detail::interior_integral(model, f2, n); }, pts, 1e-3,
                                      ErrorCode::NonFinite, "C2 quadrature"));

    const auto& d = model.domain;
    const std::size_t nx = 8 * quadrature_points;
    const std::size_t ny = d.is_strip() ? 64 : 1;
    double sup1 = 0.0, sup2 = 0.0;
    for (std::size_t i = 0; i <= nx; ++i) {
        const double x = d.x_min() + d.thickness() * static_cast<double>(i) / static_cast<double>(nx);
        for (std::size_t k = 0; k < ny; ++k) {
            const Point p{x, d.is_strip() ? d.period_y() * static_cast<double>(k) / static_cast<double>(ny) : 0.0};
            sup1 = std::max(sup1, numeric::negative_part(LVh(p)));
            sup2 = std::max(sup2, grad2(p));
        }
    }
    if (std::isfinite(sup1)) c.C1bar = sup1;
    if (std::isfinite(sup2)) c.C2bar = std::sqrt(sup2);
    fill_AB(c);
    return c;
}

} // namespace sticky
