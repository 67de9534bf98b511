#pragma once

// Continuum sticky models: domain, potentials, reflection strength, boundary
// diffusion weight, and the partition constants that fix the invariant
// measure  mu = theta * mu_V + (1 - theta) * mu_W.

#include "sticky/error.hpp"
#include "sticky/numeric.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace sticky {

/// A point of a desk domain. One-dimensional domains leave y at zero; on the
/// strip, x is the transverse coordinate and y the periodic one.
struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct Interval {
    double a = 0.0;
    double b = 1.0;
};

/// (0, L] with the sticky boundary at 0 and a plain reflecting wall at L.
struct TruncatedHalfLine {
    double L = 10.0;
};

/// [0, width] x (R / circumference Z); boundary circles at x = 0 and x = width.
struct Strip {
    double width = 1.0;
    double circumference = 1.0;
};

enum class BoundarySide { Left, Right };

struct DomainSpec {
    std::variant<Interval, TruncatedHalfLine, Strip> kind = Interval{};
    bool sticky_left = true;
    bool sticky_right = true;

    bool is_strip() const { return std::holds_alternative<Strip>(kind); }
    bool is_half_line() const { return std::holds_alternative<TruncatedHalfLine>(kind); }

    double x_min() const {
        if (auto* iv = std::get_if<Interval>(&kind)) return iv->a;
        return 0.0;
    }
    double x_max() const {
        if (auto* iv = std::get_if<Interval>(&kind)) return iv->b;
        if (auto* hl = std::get_if<TruncatedHalfLine>(&kind)) return hl->L;
        return std::get<Strip>(kind).width;
    }
    double thickness() const { return x_max() - x_min(); }
    double period_y() const { return is_strip() ? std::get<Strip>(kind).circumference : 0.0; }
    int dimension() const { return is_strip() ? 2 : 1; }
    int boundary_dimension() const { return dimension() - 1; }

    bool sticky(BoundarySide side) const { return side == BoundarySide::Left ? sticky_left : sticky_right; }
    double boundary_x(BoundarySide side) const { return side == BoundarySide::Left ? x_min() : x_max(); }

    std::vector<BoundarySide> sticky_sides() const {
        std::vector<BoundarySide> out;
        if (sticky_left) out.push_back(BoundarySide::Left);
        if (sticky_right) out.push_back(BoundarySide::Right);
        return out;
    }

    /// Distance from x to the nearest sticky boundary component.
    double distance_to_sticky(double x) const {
        double d = numeric::kInfinity;
        if (sticky_left) d = std::min(d, x - x_min());
        if (sticky_right) d = std::min(d, x_max() - x);
        return d;
    }

    std::string kind_name() const {
        if (std::holds_alternative<Interval>(kind)) return "Interval";
        if (std::holds_alternative<TruncatedHalfLine>(kind)) return "TruncatedHalfLine";
        return "Strip";
    }

    void validate() const {
        if (auto* iv = std::get_if<Interval>(&kind))
            require(iv->a < iv->b, ErrorCode::InvalidModel, "Interval needs a < b");
        if (auto* hl = std::get_if<TruncatedHalfLine>(&kind)) {
            require(hl->L > 0, ErrorCode::InvalidModel, "TruncatedHalfLine needs L > 0");
            require(!sticky_right, ErrorCode::InvalidModel, "TruncatedHalfLine is sticky only at 0");
        }
        if (auto* st = std::get_if<Strip>(&kind))
            require(st->width > 0 && st->circumference > 0, ErrorCode::InvalidModel,
                    "Strip needs width > 0 and circumference > 0");
        require(sticky_left || sticky_right, ErrorCode::InvalidModel, "at least one boundary component must be sticky");
    }

    static DomainSpec interval(double a, double b) { return DomainSpec{Interval{a, b}, true, true}; }
    static DomainSpec half_line(double L) { return DomainSpec{TruncatedHalfLine{L}, true, false}; }
    static DomainSpec strip(double width, double circumference, bool left = true, bool right = true) {
        return DomainSpec{Strip{width, circumference}, left, right};
    }
};

/// A potential on the closed domain, with its gradient. PowerTau is
/// V(p) = -|p.x|^tau (the distance along the transverse coordinate).
class Potential {
public:
    enum class Form { Zero, PowerTau, Tabulated };

    using ValueFn = std::function<double(Point)>;
    using GradientFn = std::function<Point(Point)>;

    static Potential zero() { return Potential(Form::Zero, 0.0, {}, {}, {}); }

    static Potential power_tau(double tau) {
        require(tau > 0, ErrorCode::InvalidModel, "PowerTau needs tau > 0");
        return Potential(Form::PowerTau, tau, {}, {}, {});
    }

    /// A user-supplied potential. Without a gradient, central differences are used.
    static Potential tabulated(ValueFn value, GradientFn gradient = {}, std::string description = "callable") {
        require(static_cast<bool>(value), ErrorCode::InvalidModel, "tabulated potential needs a callable");
        return Potential(Form::Tabulated, 0.0, std::move(value), std::move(gradient), std::move(description));
    }

    /// Piecewise-linear interpolation of (x_k, v_k) in the transverse coordinate,
    /// held constant outside the table.
    static Potential from_table(std::vector<double> xs, std::vector<double> vs) {
        require(xs.size() == vs.size() && xs.size() >= 2, ErrorCode::InvalidModel, "potential table needs >= 2 points");
        for (std::size_t k = 1; k < xs.size(); ++k)
            require(xs[k] > xs[k - 1], ErrorCode::InvalidModel, "potential table x must increase");
        auto table = std::make_shared<std::pair<std::vector<double>, std::vector<double>>>(xs, vs);
        auto locate = [table](double x) {
            const auto& [tx, tv] = *table;
            if (x <= tx.front()) return std::size_t{0};
            if (x >= tx.back()) return tx.size() - 2;
            auto it = std::upper_bound(tx.begin(), tx.end(), x);
            return static_cast<std::size_t>(it - tx.begin()) - 1;
        };
        ValueFn value = [table, locate](Point p) {
            const auto& [tx, tv] = *table;
            const double x = std::clamp(p.x, tx.front(), tx.back());
            const std::size_t k = locate(x);
            const double s = (x - tx[k]) / (tx[k + 1] - tx[k]);
            return tv[k] + s * (tv[k + 1] - tv[k]);
        };
        GradientFn gradient = [table, locate](Point p) {
            const auto& [tx, tv] = *table;
            if (p.x < tx.front() || p.x > tx.back()) return Point{0.0, 0.0};
            const std::size_t k = locate(p.x);
            return Point{(tv[k + 1] - tv[k]) / (tx[k + 1] - tx[k]), 0.0};
        };
        Potential out(Form::Tabulated, 0.0, std::move(value), std::move(gradient), "table");
        out.table_ = table;
        return out;
    }

    Form form() const { return form_; }
    double tau() const { return tau_; }
    const std::string& description() const { return description_; }
    const std::vector<double>* table_x() const { return table_ ? &table_->first : nullptr; }
    const std::vector<double>* table_values() const { return table_ ? &table_->second : nullptr; }

    double operator()(Point p) const {
        switch (form_) {
        case Form::Zero: return 0.0;
        case Form::PowerTau: return -std::pow(std::abs(p.x), tau_);
        case Form::Tabulated: return value_(p);
        }
        return 0.0;
    }

    Point gradient(Point p) const {
        switch (form_) {
        case Form::Zero: return {0.0, 0.0};
        case Form::PowerTau: {
            // d/dx -|x|^tau = -tau |x|^(tau-1) sign(x); one-sided (inward) at x = 0.
            const double sign = p.x < 0 ? -1.0 : 1.0;
            return {-tau_ * std::pow(std::abs(p.x), tau_ - 1.0) * sign, 0.0};
        }
        case Form::Tabulated:
            if (gradient_) return gradient_(p);
            {
                const double e = 1e-6;
                return {(value_({p.x + e, p.y}) - value_({p.x - e, p.y})) / (2 * e),
                        (value_({p.x, p.y + e}) - value_({p.x, p.y - e})) / (2 * e)};
            }
        }
        return {0.0, 0.0};
    }

private:
    Potential(Form form, double tau, ValueFn value, GradientFn gradient, std::string description)
        : form_(form), tau_(tau), value_(std::move(value)), gradient_(std::move(gradient)),
          description_(std::move(description)) {}

    Form form_;
    double tau_;
    ValueFn value_;
    GradientFn gradient_;
    std::string description_;
    std::shared_ptr<const std::pair<std::vector<double>, std::vector<double>>> table_;
};

struct ModelSpec {
    DomainSpec domain;
    Potential V = Potential::zero();
    Potential W = Potential::zero();
    double gamma = 1.0;
    double delta = 0.0;

    void validate() const {
        domain.validate();
        require(gamma > 0 && std::isfinite(gamma), ErrorCode::InvalidModel, "gamma must be > 0");
        require(delta >= 0 && std::isfinite(delta), ErrorCode::InvalidModel, "delta must be >= 0");
    }

    /// Non-fatal observations about the model.
    std::vector<std::string> warnings() const {
        std::vector<std::string> out;
        if (domain.boundary_dimension() == 0 && delta > 0)
            out.push_back("boundary is zero-dimensional: delta > 0 yields the same form as delta = 0");
        if (domain.is_half_line())
            out.push_back("half-line truncated at L with a plain reflecting wall; L is a convergence knob");
        return out;
    }
};

/// theta = gamma Z_W / (gamma Z_W + Z_V).
inline double theta_from(double gamma, double Z_W_boundary, double Z_V) {
    require(gamma > 0, ErrorCode::InvalidModel, "gamma must be > 0");
    require(Z_V > 0 && Z_W_boundary > 0, ErrorCode::InvalidModel, "partition constants must be > 0");
    return gamma * Z_W_boundary / (gamma * Z_W_boundary + Z_V);
}

struct MeasureSummary {
    double Z_V = 1.0;
    double Z_W_boundary = 1.0;
    double theta = 0.5;
    /// Density of mu_V with respect to volume on the domain.
    std::function<double(Point)> density_V;
    /// Density of mu_W with respect to boundary measure; on a zero-dimensional
    /// boundary this is the point mass of each sticky endpoint.
    std::function<double(Point)> density_W;
};

inline constexpr std::size_t kDefaultQuadraturePoints = 1025;

namespace detail {

inline double interior_integral(const ModelSpec& model, const std::function<double(Point)>& f, std::size_t points) {
    const auto& d = model.domain;
    if (d.is_strip())
        return numeric::simpson2d([&](double x, double y) { return f({x, y}); }, d.x_min(), d.x_max(), 0.0,
                                  d.period_y(), points);
    return numeric::simpson([&](double x) { return f({x, 0.0}); }, d.x_min(), d.x_max(), points);
}

inline double boundary_integral(const ModelSpec& model, const std::function<double(Point)>& f, std::size_t points) {
    const auto& d = model.domain;
    double sum = 0.0;
    for (BoundarySide side : d.sticky_sides()) {
        const double xb = d.boundary_x(side);
        if (d.is_strip())
            sum += numeric::simpson([&](double y) { return f({xb, y}); }, 0.0, d.period_y(), points);
        else
            sum += f({xb, 0.0});
    }
    return sum;
}

} // namespace detail

/// Z_V over the domain and Z_W over the sticky boundary by composite Simpson
/// with two refinement doublings; theta from the closed formula.
inline MeasureSummary partition_constants(const ModelSpec& model,
                                          std::size_t quadrature_points = kDefaultQuadraturePoints) {
    model.validate();
    require(quadrature_points >= 16, ErrorCode::InvalidArgument, "quadrature_points must be >= 16");
    const std::size_t pts = model.domain.is_strip() ? std::min<std::size_t>(quadrature_points, 257) : quadrature_points;
    const Potential V = model.V, W = model.W;
    std::function<double(Point)> expV = [V](Point p) { return std::exp(V(p)); };
    std::function<double(Point)> expW = [W](Point p) { return std::exp(W(p)); };

    MeasureSummary out;
    if (model.domain.is_strip()) {
        out.Z_V = numeric::refined([&](std::size_t n) { return detail::interior_integral(model, expV, n); }, pts,
                                   1e-3, ErrorCode::NonIntegrable, "Z_V");
    } else {
        // exp(V) may have an unbounded derivative at the wall (|x|^tau, tau < 2).
        boost::math::quadrature::tanh_sinh<double> integrator;
        double err = 0.0;
        out.Z_V = integrator.integrate([&](double x) { return expV({x, 0.0}); }, model.domain.x_min(),
                                       model.domain.x_max(), 1e-15, &err);
        require(std::isfinite(out.Z_V) && err <= 1e-12 * out.Z_V, ErrorCode::NonIntegrable, "Z_V quadrature");
    }
    if (model.domain.boundary_dimension() == 0)
        out.Z_W_boundary = detail::boundary_integral(model, expW, pts);
    else
        out.Z_W_boundary = numeric::refined([&](std::size_t n) { return detail::boundary_integral(model, expW, n); },
                                            pts, 1e-3, ErrorCode::NonIntegrable, "Z_W");
    require(std::isfinite(out.Z_W_boundary) && out.Z_W_boundary > 0, ErrorCode::NonIntegrable,
            "Z_W is not finite and positive");
    require(out.Z_V > 0, ErrorCode::NonIntegrable, "Z_V must be positive");
    out.theta = theta_from(model.gamma, out.Z_W_boundary, out.Z_V);
    const double zv = out.Z_V, zw = out.Z_W_boundary;
    out.density_V = [V, zv](Point p) { return std::exp(V(p)) / zv; };
    out.density_W = [W, zw](Point p) { return std::exp(W(p)) / zw; };
    return out;
}

inline double theta(const ModelSpec& model) { return partition_constants(model).theta; }

/// A collar function with closed-form derivatives: value, gradient, Laplacian.
struct CollarFunction {
    std::function<double(Point)> value;
    std::function<Point(Point)> gradient;
    std::function<double(Point)> laplacian;
    std::string note;

    double operator()(Point p) const { return value(p); }

    /// Derivatives by central differences of a value-only callable.
    static CollarFunction from_values(std::function<double(Point)> f, double step = 1e-4) {
        CollarFunction h;
        h.value = f;
        h.gradient = [f, step](Point p) {
            return Point{(f({p.x + step, p.y}) - f({p.x - step, p.y})) / (2 * step),
                         (f({p.x, p.y + step}) - f({p.x, p.y - step})) / (2 * step)};
        };
        h.laplacian = [f, step](Point p) {
            const double c = f(p);
            return (f({p.x + step, p.y}) - 2 * c + f({p.x - step, p.y})) / (step * step) +
                   (f({p.x, p.y + step}) - 2 * c + f({p.x, p.y - step})) / (step * step);
        };
        h.note = "finite-difference derivatives";
        return h;
    }
};

/// The polynomial bump xi(s) = (1 - (s/s0)^2)^3 on [0, s0], zero beyond, and
/// its first two derivatives. C^2 across s0.
struct CollarCutoff {
    double s0;

    double value(double s) const {
        if (s >= s0) return 0.0;
        const double u = s / s0, q = 1.0 - u * u;
        return q * q * q;
    }
    double d1(double s) const {
        if (s >= s0) return 0.0;
        const double u = s / s0, q = 1.0 - u * u;
        return -6.0 * u * q * q / s0;
    }
    double d2(double s) const {
        if (s >= s0) return 0.0;
        const double u = s / s0, q = 1.0 - u * u;
        return (-6.0 * q * q + 24.0 * u * u * q) / (s0 * s0);
    }
};

/// h = rho * xi(rho), rho the distance to the sticky boundary: vanishes on the
/// sticky boundary, has unit inward normal derivative there, and vanishes at
/// depth >= s0.
inline CollarFunction default_h(const DomainSpec& domain, double s0) {
    domain.validate();
    require(s0 > 0, ErrorCode::InvalidArgument, "collar depth s0 must be > 0");
    require(s0 < 0.5 * domain.thickness(), ErrorCode::CollarTooDeep, "collar depth must be below half the thickness");
    const CollarCutoff xi{s0};
    const DomainSpec d = domain;
    // Signed direction of increasing distance: +1 near the left wall, -1 near the right.
    auto nearest = [d](double x) {
        const double dl = d.sticky_left ? x - d.x_min() : numeric::kInfinity;
        const double dr = d.sticky_right ? d.x_max() - x : numeric::kInfinity;
        return dl <= dr ? std::pair{dl, 1.0} : std::pair{dr, -1.0};
    };
    CollarFunction h;
    h.value = [nearest, xi](Point p) {
        const auto [rho, dir] = nearest(p.x);
        (void)dir;
        return rho * xi.value(rho);
    };
    h.gradient = [nearest, xi](Point p) {
        const auto [rho, dir] = nearest(p.x);
        return Point{dir * (xi.value(rho) + rho * xi.d1(rho)), 0.0};
    };
    h.laplacian = [nearest, xi](Point p) {
        const auto [rho, dir] = nearest(p.x);
        (void)dir;
        return 2.0 * xi.d1(rho) + rho * xi.d2(rho);
    };
    if (domain.is_half_line())
        h.note = "h(x) = x xi(x); the uncut h(x) = x is also admissible on the truncated domain";
    else
        h.note = "h = rho xi(rho), rho the distance to the sticky boundary";
    return h;
}

/// The uncut distance h = rho (admissible on the truncated half-line, where
/// its gradient norms are taken over [0, L]).
inline CollarFunction uncut_distance_h(const DomainSpec& domain) {
    domain.validate();
    require(domain.is_half_line(), ErrorCode::InvalidArgument, "uncut distance collar is for the half-line");
    CollarFunction h;
    h.value = [](Point p) { return p.x; };
    h.gradient = [](Point) { return Point{1.0, 0.0}; };
    h.laplacian = [](Point) { return 0.0; };
    h.note = "h(x) = x";
    return h;
}

} // namespace sticky
