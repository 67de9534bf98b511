#pragma once

// Decreasing rate functions (0, inf) -> [0, inf) with a parametric family tag.
// A RateFunction also carries its small-r order class when it is known, so
// that compositions keep enough information for regime classification.

#include "sticky/error.hpp"
#include "sticky/numeric.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace sticky {

enum class Family { ExpPower, Poly, LogPower, Constant, Tabulated, Composed };

constexpr std::string_view to_string(Family f) {
    switch (f) {
    case Family::ExpPower: return "ExpPower";
    case Family::Poly: return "Poly";
    case Family::LogPower: return "LogPower";
    case Family::Constant: return "Constant";
    case Family::Tabulated: return "Tabulated";
    case Family::Composed: return "Composed";
    }
    return "Unknown";
}

/// Growth class as r -> 0: exp(c r^-p), r^-p, log(1/r)^q, or bounded.
struct Order {
    Family family = Family::Constant;
    double exponent = 0.0;

    friend bool operator==(const Order&, const Order&) = default;
};

namespace detail {

inline int order_rank(Family f) {
    switch (f) {
    case Family::ExpPower: return 3;
    case Family::Poly: return 2;
    case Family::LogPower: return 1;
    default: return 0;
    }
}

} // namespace detail

/// The faster-growing of two order classes.
inline std::optional<Order> dominant(const std::optional<Order>& a, const std::optional<Order>& b) {
    if (!a || !b) return std::nullopt;
    const int ra = detail::order_rank(a->family), rb = detail::order_rank(b->family);
    if (ra != rb) return ra > rb ? a : b;
    return a->exponent >= b->exponent ? a : b;
}

class RateFunction {
public:
    using Fn = std::function<double(double)>;

    /// r -> exp[c (1 + r^-p)].
    static RateFunction exp_power(double c, double p) {
        require(c > 0 && p > 0, ErrorCode::InvalidArgument, "ExpPower needs c > 0, p > 0");
        RateFunction out(Family::ExpPower, {c, p}, [c, p](double r) { return std::exp(c * (1.0 + std::pow(r, -p))); },
                         Order{Family::ExpPower, p});
        out.log_fn_ = std::make_shared<const Fn>([c, p](double r) { return c * (1.0 + std::pow(r, -p)); });
        return out;
    }

    /// r -> c (1 ^ r)^-p.
    static RateFunction poly(double c, double p) {
        require(c > 0 && p >= 0, ErrorCode::InvalidArgument, "Poly needs c > 0, p >= 0");
        return RateFunction(Family::Poly, {c, p}, [c, p](double r) { return c * std::pow(std::min(1.0, r), -p); },
                            p > 0 ? Order{Family::Poly, p} : Order{Family::Constant, 0.0});
    }

    /// r -> c1 + c2 [log(1 + 1/r)]^q.
    static RateFunction log_power(double c1, double c2, double q) {
        require(c1 >= 0 && c2 > 0 && q > 0, ErrorCode::InvalidArgument, "LogPower needs c1 >= 0, c2 > 0, q > 0");
        return RateFunction(Family::LogPower, {c1, c2, q},
                            [c1, c2, q](double r) { return c1 + c2 * std::pow(std::log1p(1.0 / r), q); },
                            Order{Family::LogPower, q});
    }

    static RateFunction constant(double c) {
        require(c >= 0 && std::isfinite(c), ErrorCode::InvalidArgument, "Constant needs finite c >= 0");
        return RateFunction(Family::Constant, {c}, [c](double) { return c; }, Order{Family::Constant, 0.0});
    }

    /// Piecewise linear in log-log coordinates between the knots (linear where a
    /// value is zero); power-law extrapolation of the first segment to the left,
    /// flat to the right.
    static RateFunction tabulated(std::vector<double> rs, std::vector<double> values) {
        require(rs.size() == values.size() && rs.size() >= 2, ErrorCode::InvalidArgument,
                "tabulated rate needs >= 2 knots");
        for (std::size_t k = 0; k < rs.size(); ++k) {
            require(rs[k] > 0 && std::isfinite(values[k]) && values[k] >= 0, ErrorCode::InvalidArgument,
                    "tabulated rate needs r > 0 and finite values >= 0");
            if (k > 0) {
                require(rs[k] > rs[k - 1], ErrorCode::InvalidArgument, "tabulated r must increase");
                require(values[k] <= values[k - 1], ErrorCode::InvalidArgument, "tabulated rate must be non-increasing");
            }
        }
        auto table = std::make_shared<const std::pair<std::vector<double>, std::vector<double>>>(rs, values);
        Fn fn = [table](double r) {
            const auto& [x, v] = *table;
            auto segment = [&](std::size_t k) {
                if (v[k] > 0 && v[k + 1] > 0) {
                    const double s = (std::log(r) - std::log(x[k])) / (std::log(x[k + 1]) - std::log(x[k]));
                    return std::exp(std::log(v[k]) + s * (std::log(v[k + 1]) - std::log(v[k])));
                }
                const double s = (r - x[k]) / (x[k + 1] - x[k]);
                return std::max(0.0, v[k] + s * (v[k + 1] - v[k]));
            };
            if (r >= x.back()) return v.back();
            if (r <= x.front()) return r == x.front() ? v.front() : std::max(v.front(), segment(0));
            const std::size_t k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), r) - x.begin()) - 1;
            return segment(k);
        };
        RateFunction out(Family::Tabulated, {}, std::move(fn), std::nullopt);
        out.table_ = table;
        return out;
    }

    /// A derived rate function (composition or transform output). `log_fn`, when
    /// given, evaluates log of the value without overflow.
    static RateFunction composed(Fn fn, std::optional<Order> order, std::string description, Fn log_fn = {}) {
        RateFunction out(Family::Composed, {}, std::move(fn), order);
        out.description_ = std::move(description);
        if (log_fn) out.log_fn_ = std::make_shared<const Fn>(std::move(log_fn));
        return out;
    }

    double operator()(double r) const { return (*fn_)(r); }

    /// log of the value; finite where the value itself overflows, for the
    /// families that know their logarithm.
    double log_value(double r) const { return log_fn_ ? (*log_fn_)(r) : std::log((*fn_)(r)); }

    Family family() const { return family_; }
    const std::vector<double>& params() const { return params_; }
    const std::optional<Order>& order() const { return order_; }
    const std::string& description() const { return description_; }
    const std::vector<double>* table_r() const { return table_ ? &table_->first : nullptr; }
    const std::vector<double>* table_values() const { return table_ ? &table_->second : nullptr; }

    /// inf over r > 0, i.e. the limit as r -> infinity.
    double infimum() const {
        switch (family_) {
        case Family::ExpPower: return std::exp(params_[0]);
        case Family::Poly: return params_[0];
        case Family::LogPower: return params_[0];
        case Family::Constant: return params_[0];
        case Family::Tabulated: return table_->second.back();
        case Family::Composed: break;
        }
        double low = numeric::kInfinity;
        for (double r : numeric::log_grid(1e-3, 1e12, 61)) low = std::min(low, (*this)(r));
        return low;
    }

    /// k * this, keeping the order class.
    RateFunction scaled(double k) const {
        require(k > 0, ErrorCode::InvalidArgument, "scale must be > 0");
        auto self = *this;
        std::ostringstream name;
        name << k << " * " << self.to_string();
        return composed([self, k](double r) { return k * self(r); }, order_, name.str(),
                        [self, k](double r) { return std::log(k) + self.log_value(r); });
    }

    std::string to_string() const {
        if (family_ == Family::Composed) return description_;
        std::ostringstream os;
        os << sticky::to_string(family_) << "(";
        for (std::size_t k = 0; k < params_.size(); ++k) os << (k ? ", " : "") << params_[k];
        if (family_ == Family::Tabulated) os << table_->first.size() << " knots";
        os << ")";
        return os.str();
    }

private:
    RateFunction(Family family, std::vector<double> params, Fn fn, std::optional<Order> order)
        : family_(family), params_(std::move(params)), fn_(std::make_shared<const Fn>(std::move(fn))),
          order_(order) {}

    Family family_;
    std::vector<double> params_;
    std::shared_ptr<const Fn> fn_;
    std::shared_ptr<const Fn> log_fn_;
    std::optional<Order> order_;
    std::string description_;
    std::shared_ptr<const std::pair<std::vector<double>, std::vector<double>>> table_;
};

/// Non-increasing and nonnegative on a log grid.
inline bool is_non_increasing(const RateFunction& f, double r_min = 1e-6, double r_max = 1e3,
                              std::size_t points = 1000) {
    double prev = numeric::kInfinity;
    for (double r : numeric::log_grid(r_min, r_max, points)) {
        const double v = f(r);
        if (!(v >= 0) || v > prev * (1 + 1e-12)) return false;
        prev = v;
    }
    return true;
}

inline nlohmann::json rate_to_json(const RateFunction& f) {
    using nlohmann::json;
    const auto& p = f.params();
    switch (f.family()) {
    case Family::ExpPower: return json{{"family", "ExpPower"}, {"params", {{"c", p[0]}, {"p", p[1]}}}};
    case Family::Poly: return json{{"family", "Poly"}, {"params", {{"c", p[0]}, {"p", p[1]}}}};
    case Family::LogPower:
        return json{{"family", "LogPower"}, {"params", {{"c1", p[0]}, {"c2", p[1]}, {"q", p[2]}}}};
    case Family::Constant: return json{{"family", "Constant"}, {"params", {{"c", p[0]}}}};
    case Family::Tabulated:
        return json{{"family", "Tabulated"}, {"params", {{"r", *f.table_r()}, {"values", *f.table_values()}}}};
    case Family::Composed: return json{{"family", "Composed"}, {"params", {{"description", f.description()}}}};
    }
    return json{};
}

inline RateFunction rate_from_json(const nlohmann::json& j) {
    try {
        const auto family = j.at("family").get<std::string>();
        const auto& p = j.at("params");
        if (family == "ExpPower") return RateFunction::exp_power(p.at("c").get<double>(), p.at("p").get<double>());
        if (family == "Poly") return RateFunction::poly(p.at("c").get<double>(), p.at("p").get<double>());
        if (family == "LogPower")
            return RateFunction::log_power(p.at("c1").get<double>(), p.at("c2").get<double>(), p.at("q").get<double>());
        if (family == "Constant") return RateFunction::constant(p.at("c").get<double>());
        if (family == "Tabulated")
            return RateFunction::tabulated(p.at("r").get<std::vector<double>>(), p.at("values").get<std::vector<double>>());
        throw Error(ErrorCode::ParseError, "rate family \"" + family + "\" cannot be read back");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("rate function JSON: ") + e.what());
    }
}

/// Writes "r,value" rows on a log grid.
inline void write_rate_csv(std::ostream& os, const RateFunction& f, double r_min, double r_max, std::size_t points,
                           const std::string& column = "value") {
    os << "r," << column << "\n";
    os.precision(17);
    for (double r : numeric::log_grid(r_min, r_max, points)) os << r << "," << f(r) << "\n";
}

} // namespace sticky
