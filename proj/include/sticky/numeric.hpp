#pragma once

#include "sticky/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace sticky::numeric {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Inversion tolerances shared by every bisection in the library.
inline constexpr double kBisectionTolerance = 1e-10;
inline constexpr int kBisectionMaxIter = 200;

/// Composite Simpson rule with `points` nodes (rounded up to odd).
template <class F>
double simpson(F&& f, double a, double b, std::size_t points) {
    if (points < 3) points = 3;
    if (points % 2 == 0) ++points;
    const std::size_t intervals = points - 1;
    const double h = (b - a) / static_cast<double>(intervals);
    double sum = f(a) + f(b);
    for (std::size_t k = 1; k < intervals; ++k) {
        const double x = a + h * static_cast<double>(k);
        sum += (k % 2 == 1 ? 4.0 : 2.0) * f(x);
    }
    return sum * h / 3.0;
}

/// Tensor-product composite Simpson on [ax,bx] x [ay,by].
template <class F>
double simpson2d(F&& f, double ax, double bx, double ay, double by, std::size_t points) {
    return simpson([&](double x) { return simpson([&](double y) { return f(x, y); }, ay, by, points); },
                   ax, bx, points);
}

/// Runs `rule(n)` at n, 2n-1 and 4n-3 nodes (two interval doublings). Throws
/// `code` when the result is non-finite or the last doubling moved the value by
/// more than `rel_tol` relative. Returns the finest estimate.
template <class Rule>
double refined(Rule&& rule, std::size_t points, double rel_tol, ErrorCode code, const std::string& what) {
    if (points % 2 == 0) ++points;
    const double coarse = rule(points);
    const double mid = rule(2 * points - 1);
    const double fine = rule(4 * points - 3);
    if (!std::isfinite(coarse) || !std::isfinite(mid) || !std::isfinite(fine))
        throw Error(code, what + " is not finite");
    const double scale = std::max(std::abs(fine), std::numeric_limits<double>::min());
    if (std::abs(fine - mid) > rel_tol * scale)
        throw Error(code, what + " did not settle under grid refinement");
    return fine;
}

/// Smallest x in [lo, hi] with pred(x) true, for pred monotone false -> true.
/// Assumes pred(hi) is true. Absolute tolerance on the argument.
template <class Pred>
double bisect_first_true(Pred&& pred, double lo, double hi, double tol = kBisectionTolerance,
                         int max_iter = kBisectionMaxIter) {
    for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (pred(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

/// Same as bisect_first_true but bisects in log-space over (lo, hi), lo > 0,
/// with a relative tolerance. Used where the argument spans many decades.
template <class Pred>
double bisect_first_true_log(Pred&& pred, double lo, double hi, double rel_tol = kBisectionTolerance,
                             int max_iter = kBisectionMaxIter) {
    double a = std::log(lo), b = std::log(hi);
    for (int it = 0; it < max_iter && b - a > rel_tol; ++it) {
        const double mid = 0.5 * (a + b);
        if (pred(std::exp(mid)))
            b = mid;
        else
            a = mid;
    }
    return std::exp(b);
}

/// Golden-section minimisation of a unimodal function on [a, b].
template <class F>
double golden_section_min(F&& f, double a, double b, double tol = 1e-10, int max_iter = 200) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < max_iter && std::abs(b - a) > tol; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t points) {
    require(lo > 0 && hi >= lo && points >= 1, ErrorCode::InvalidArgument, "log grid needs 0 < lo <= hi, points >= 1");
    std::vector<double> out(points);
    if (points == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t k = 0; k < points; ++k)
        out[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(points - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

inline std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
    std::vector<double> out(points);
    for (std::size_t k = 0; k < points; ++k)
        out[k] = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    return out;
}

inline double dot_weighted(std::span<const double> w, std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * a[i] * b[i];
    return s;
}

inline double positive_part(double x) { return x > 0 ? x : 0.0; }
inline double negative_part(double x) { return x < 0 ? -x : 0.0; }

} // namespace sticky::numeric
