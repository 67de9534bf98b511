#pragma once

// Run configuration and the model -> instance -> bounds -> verification
// pipeline shared by the command-line tool and the acceptance suite.

#include "sticky/compose.hpp"
#include "sticky/constants.hpp"
#include "sticky/discretize.hpp"
#include "sticky/error.hpp"
#include "sticky/mc.hpp"
#include "sticky/model.hpp"
#include "sticky/model_json.hpp"
#include "sticky/numeric.hpp"
#include "sticky/rate_function.hpp"
#include "sticky/regime.hpp"
#include "sticky/semigroup.hpp"
#include "sticky/transforms.hpp"
#include "sticky/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace sticky {

struct InputRates {
    std::optional<RateFunction> beta; ///< a rate claimed for the sticky form itself
    std::optional<RateFunction> beta_V;
    std::optional<RateFunction> beta_W;
    std::optional<RateFunction> alpha_V;
    std::optional<RateFunction> alpha_W;
};

struct GridSpec {
    double lo = 1e-3;
    double hi = 1e-1;
    std::size_t points = 8;

    std::vector<double> values() const { return numeric::log_grid(lo, hi, points); }
};

/// Parses "a:b:n" into a log grid spec.
inline GridSpec parse_grid(const std::string& text) {
    const auto c1 = text.find(':');
    const auto c2 = c1 == std::string::npos ? std::string::npos : text.find(':', c1 + 1);
    if (c2 == std::string::npos) throw Error(ErrorCode::ParseError, "grid must be a:b:n, got \"" + text + "\"");
    GridSpec g;
    try {
        std::size_t used = 0;
        g.lo = std::stod(text.substr(0, c1));
        g.hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
        const long n = std::stol(text.substr(c2 + 1), &used);
        if (used != text.size() - c2 - 1 || n < 0) throw std::invalid_argument("points");
        g.points = static_cast<std::size_t>(n);
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::ParseError, "grid must be a:b:n, got \"" + text + "\"");
    }
    return g;
}

inline void validate_grid(const GridSpec& g, const char* what) {
    require(g.points >= 1, ErrorCode::InvalidArgument, std::string(what) + " grid is empty");
    require(g.lo > 0 && g.hi >= g.lo && std::isfinite(g.hi), ErrorCode::InvalidArgument,
            std::string(what) + " grid needs 0 < a <= b");
    require(g.points == 1 || g.hi > g.lo, ErrorCode::InvalidArgument, std::string(what) + " grid needs a < b");
}

struct RunConfig {
    std::string name = "model";
    ModelSpec model;
    double collar_s0 = 0.25;
    std::size_t n_interior = 200;
    std::size_t n_boundary = 8;
    InputRates rates;
    AlphaConstantForm alpha_form = AlphaConstantForm::GradientSquared;
    GridSpec r_grid{1e-3, 1e-1, 8};
    GridSpec t_grid{1e-1, 1e2, 20};
    std::uint64_t seed = 0;
    int restarts = 32;
    long trials = 1000;
    double expected_jumps = 1e6;
    double calibration_margin = 1.25;
    std::size_t calibration_points = 12; ///< grid-local calibration
    int calibration_per_decade = 4;      ///< calibration valid for every r
};

inline double default_collar_depth(const DomainSpec& d) { return d.is_half_line() ? 1.0 : 0.25 * d.thickness(); }

/// The interior and boundary rate orders of the half-line family V = W = -|x|^tau.
inline InputRates power_tau_rates(double tau) {
    const auto r = example31_rates(tau);
    return InputRates{std::nullopt, r.beta_V, r.beta_V, r.alpha_V, r.alpha_V};
}

inline RunConfig config_from_json(const Json& j) {
    RunConfig cfg;
    cfg.model = model_from_json(j);
    cfg.name = detail::json_get_or<std::string>(j, "name", cfg.name, "config");
    cfg.collar_s0 = detail::json_get_or<double>(j, "collar_s0", default_collar_depth(cfg.model.domain), "config");
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        cfg.n_interior = detail::json_get_or<std::size_t>(g, "n", cfg.n_interior, "grid");
        cfg.n_boundary = detail::json_get_or<std::size_t>(g, "n_boundary", cfg.n_boundary, "grid");
    }
    auto read_grid = [&](const char* key, GridSpec& g) {
        if (!j.contains(key)) return;
        const auto& v = j.at(key);
        if (v.is_string()) {
            g = parse_grid(v.get<std::string>());
        } else {
            g.lo = detail::json_get<double>(v, "min", key);
            g.hi = detail::json_get<double>(v, "max", key);
            g.points = detail::json_get<std::size_t>(v, "points", key);
        }
        validate_grid(g, key);
    };
    read_grid("r_grid", cfg.r_grid);
    read_grid("t_grid", cfg.t_grid);
    cfg.seed = detail::json_get_or<std::uint64_t>(j, "seed", cfg.seed, "config");
    cfg.restarts = detail::json_get_or<int>(j, "restarts", cfg.restarts, "config");
    cfg.trials = detail::json_get_or<long>(j, "trials", cfg.trials, "config");
    cfg.expected_jumps = detail::json_get_or<double>(j, "expected_jumps", cfg.expected_jumps, "config");
    cfg.calibration_margin = detail::json_get_or<double>(j, "calibration_margin", cfg.calibration_margin, "config");
    cfg.calibration_points =
        detail::json_get_or<std::size_t>(j, "calibration_points", cfg.calibration_points, "config");
    cfg.calibration_per_decade =
        detail::json_get_or<int>(j, "calibration_per_decade", cfg.calibration_per_decade, "config");
    const auto form = detail::json_get_or<std::string>(j, "alpha_constant_form", "GradientSquared", "config");
    if (form == "LiteralC1")
        cfg.alpha_form = AlphaConstantForm::LiteralC1;
    else if (form != "GradientSquared")
        throw Error(ErrorCode::ParseError, "alpha_constant_form must be GradientSquared or LiteralC1");

    if (j.contains("rates")) {
        const auto& r = j.at("rates");
        auto read = [&](const char* key, std::optional<RateFunction>& slot) {
            if (r.contains(key)) slot = rate_from_json(r.at(key));
        };
        read("beta", cfg.rates.beta);
        read("beta_V", cfg.rates.beta_V);
        read("beta_W", cfg.rates.beta_W);
        read("alpha_V", cfg.rates.alpha_V);
        read("alpha_W", cfg.rates.alpha_W);
    } else if (cfg.model.domain.is_half_line() && cfg.model.V.form() == Potential::Form::PowerTau &&
               cfg.model.W.form() == Potential::Form::PowerTau && cfg.model.V.tau() == cfg.model.W.tau()) {
        cfg.rates = power_tau_rates(cfg.model.V.tau());
    }
    require(cfg.restarts >= 8, ErrorCode::InvalidArgument, "restarts must be >= 8");
    require(cfg.trials >= 1, ErrorCode::InvalidArgument, "trials must be >= 1");
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open config \"" + path + "\"");
    Json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed JSON in \"") + path + "\": " + e.what());
    }
    return config_from_json(j);
}

enum class BoundPath {
    WithBoundary, ///< (E1) and (E2')
    NoBoundary,   ///< (B1) and (B2)
};

/// (E1)/(E2') when the boundary carries its own diffusion (delta > 0). A
/// half-line stands in for a product domain whose boundary is a full space,
/// so it takes that path too.
inline BoundPath bound_path(const ModelSpec& model) {
    const bool boundary_moves = model.domain.boundary_dimension() >= 1 || model.domain.is_half_line();
    return model.delta > 0 && boundary_moves ? BoundPath::WithBoundary : BoundPath::NoBoundary;
}

inline std::string to_string(BoundPath p) { return p == BoundPath::WithBoundary ? "E1/E2'" : "B1/B2"; }

struct ComposedBounds {
    BoundPath path = BoundPath::NoBoundary;
    std::optional<Constants> constants;
    std::optional<RateFunction> beta;
    std::optional<RateFunction> alpha;
    std::optional<RegimeReport> regime;
    std::vector<std::string> notes;
};

inline std::optional<Constants> try_constants(const RunConfig& cfg, std::vector<std::string>& notes) {
    try {
        return constants_from_h(cfg.model, default_h(cfg.model.domain, cfg.collar_s0));
    } catch (const Error& e) {
        notes.push_back(std::string("constants unavailable: ") + e.what());
        return std::nullopt;
    }
}

namespace detail {

/// A stand-in carrying only an order class, for classification when the
/// constants needed to evaluate a composition are missing.
inline RateFunction order_only(std::optional<Order> order, const std::string& what) {
    return RateFunction::composed([](double) { return numeric::kInfinity; }, order, "order of " + what);
}

} // namespace detail

inline ComposedBounds compose_bounds(const RunConfig& cfg, const InputRates& in, std::optional<Constants> constants) {
    ComposedBounds out;
    out.path = bound_path(cfg.model);
    out.constants = constants;
    std::optional<RateFunction> beta_order, alpha_order;
    if (out.path == BoundPath::WithBoundary) {
        const double theta = constants ? constants->theta : sticky::theta(cfg.model);
        if (in.beta_V && in.beta_W) {
            out.beta = compose_beta_with_boundary(*in.beta_V, *in.beta_W, theta, cfg.model.delta);
            beta_order = out.beta;
        }
        if (in.alpha_V && in.alpha_W) {
            if (constants && constants->C1 && constants->C2) {
                out.alpha = compose_alpha_with_boundary(*in.alpha_V, *in.alpha_W, *constants, cfg.model.delta,
                                                        cfg.alpha_form);
                alpha_order = out.alpha;
            } else {
                out.notes.push_back("(E2') needs C1 and C2; alpha classified from the input orders");
                alpha_order = detail::order_only(dominant(in.alpha_V->order(), in.alpha_W->order()), "(E2')");
            }
        }
    } else {
        if (in.beta_V) {
            if (constants && constants->C1bar && constants->C2bar) {
                out.beta = compose_beta_no_boundary(*in.beta_V, *constants);
                beta_order = out.beta;
            } else {
                out.notes.push_back("(B1) needs C1bar and C2bar; beta left unclassified");
            }
        }
        if (in.alpha_V) {
            if (constants && constants->A && constants->B) {
                out.alpha = compose_alpha_no_boundary(*in.alpha_V, *constants);
                alpha_order = out.alpha;
            } else {
                out.notes.push_back("(B2) needs A and B; alpha classified from the input order");
                alpha_order = detail::order_only(in.alpha_V->order(), "(B2)");
            }
        }
    }
    if (beta_order || alpha_order) {
        try {
            out.regime = classify_regime(beta_order, alpha_order);
        } catch (const Error& e) {
            out.notes.push_back(std::string("regime: ") + e.what());
        }
    }
    return out;
}

inline ComposedBounds compose_bounds(const RunConfig& cfg) {
    std::vector<std::string> notes;
    auto constants = try_constants(cfg, notes);
    auto out = compose_bounds(cfg, cfg.rates, constants);
    out.notes.insert(out.notes.begin(), notes.begin(), notes.end());
    return out;
}

inline DiscreteInstance build_for(const RunConfig& cfg) { return build_instance(cfg.model, cfg.n_interior, cfg.n_boundary); }

/// beta composed from interior and boundary rates calibrated on the
/// sub-instances, over the argument range the composition evaluates them on.
struct CalibratedBeta {
    RateFunction beta = RateFunction::constant(1.0);
    BoundPath path = BoundPath::NoBoundary;
    std::optional<Calibration> interior;
    std::optional<Calibration> boundary;
    Constants constants;
};

namespace detail {

inline std::vector<double> padded_grid(double lo, double hi, std::size_t points) {
    return numeric::log_grid(0.5 * lo, 2.0 * hi, std::max<std::size_t>(points, 2));
}

} // namespace detail

/// The sub-instance rates are calibrated for every r > 0, which covers every
/// argument the compositions and the semigroup transforms evaluate them at.
inline CalibratedBeta calibrate_composed_beta(const RunConfig& cfg, const DiscreteInstance& inst,
                                              std::span<const double> r_grid) {
    require(!r_grid.empty(), ErrorCode::InvalidArgument, "empty r grid");
    require(cfg.rates.beta_V.has_value(), ErrorCode::MissingConstants, "config gives no beta_V shape");
    const auto [rmin_it, rmax_it] = std::minmax_element(r_grid.begin(), r_grid.end());
    const double rmin = *rmin_it, rmax = *rmax_it;
    OracleOptions opt;
    opt.restarts = cfg.restarts;
    opt.seed = cfg.seed;
    CalibratedBeta out;
    out.path = bound_path(cfg.model);
    std::vector<std::string> notes;
    const auto constants = try_constants(cfg, notes);
    const DiscreteInstance interior = interior_subinstance(inst);
    if (out.path == BoundPath::WithBoundary) {
        require(cfg.rates.beta_W.has_value(), ErrorCode::MissingConstants, "config gives no beta_W shape");
        out.constants.theta = inst.metadata.theta;
        out.interior = calibrate_beta_global(interior, *cfg.rates.beta_V, 0.5 * rmin, 2.0 * rmax, opt,
                                             cfg.calibration_margin, cfg.calibration_per_decade);
        const DiscreteInstance boundary = boundary_subinstance(inst);
        RateFunction beta_W = RateFunction::constant(1.0);
        if (boundary.size() > 1) {
            const double d = cfg.model.delta;
            out.boundary = calibrate_beta_global(boundary, *cfg.rates.beta_W, 0.5 * d * rmin, 2.0 * d * rmax, opt,
                                                 cfg.calibration_margin, cfg.calibration_per_decade);
            beta_W = out.boundary->rate;
        }
        out.beta = compose_beta_with_boundary(out.interior->rate, beta_W, inst.metadata.theta, cfg.model.delta);
    } else {
        require(constants && constants->C1bar && constants->C2bar, ErrorCode::MissingConstants,
                "(B1) needs C1bar and C2bar");
        out.constants = *constants;
        const double th = constants->theta, q2 = constants->C0 * constants->C0 * *constants->C2bar * *constants->C2bar,
                     q1 = constants->C0 * *constants->C1bar;
        auto inner = [&](double r) { return th * th * r * r / (4.0 * q2 + 2.0 * th * q1 * r); };
        out.interior = calibrate_beta_global(interior, *cfg.rates.beta_V, 0.5 * inner(rmin), 2.0 * inner(rmax), opt,
                                             cfg.calibration_margin, cfg.calibration_per_decade);
        out.beta = compose_beta_no_boundary(out.interior->rate, *constants);
    }
    return out;
}

/// The claimed rate of the sticky form calibrated on the full instance.
inline Calibration calibrate_direct_beta(const RunConfig& cfg, const DiscreteInstance& inst,
                                         std::span<const double> r_grid) {
    require(!r_grid.empty(), ErrorCode::InvalidArgument, "empty r grid");
    require(cfg.rates.beta.has_value(), ErrorCode::MissingConstants, "config gives no claimed beta");
    const auto [lo, hi] = std::minmax_element(r_grid.begin(), r_grid.end());
    OracleOptions opt;
    opt.restarts = cfg.restarts;
    opt.seed = cfg.seed;
    return calibrate_beta(inst, *cfg.rates.beta, detail::padded_grid(*lo, *hi, cfg.calibration_points), opt,
                          cfg.calibration_margin);
}

/// calibrate_direct_beta made valid for every r > 0.
inline Calibration calibrate_direct_beta_global(const RunConfig& cfg, const DiscreteInstance& inst) {
    require(cfg.rates.beta.has_value(), ErrorCode::MissingConstants, "config gives no claimed beta");
    const auto grid = cfg.r_grid.values();
    OracleOptions opt;
    opt.restarts = cfg.restarts;
    opt.seed = cfg.seed;
    return calibrate_beta_global(inst, *cfg.rates.beta, 0.5 * grid.front(), 2.0 * grid.back(), opt,
                                 cfg.calibration_margin, cfg.calibration_per_decade);
}

/// alpha composed from the Poincare constants of the sub-instances (a
/// Poincare inequality is a weak Poincare inequality with constant rate).
struct CalibratedAlpha {
    RateFunction alpha = RateFunction::constant(0.0);
    BoundPath path = BoundPath::NoBoundary;
    double interior_poincare = 0.0;
    std::optional<double> boundary_poincare;
    Constants constants;
};

inline CalibratedAlpha calibrate_composed_alpha(const RunConfig& cfg, const DiscreteInstance& inst) {
    CalibratedAlpha out;
    std::vector<std::string> notes;
    const auto constants = try_constants(cfg, notes);
    require(constants.has_value(), ErrorCode::MissingConstants, notes.empty() ? "constants unavailable" : notes.front());
    out.constants = *constants;
    out.interior_poincare = poincare_constant(interior_subinstance(inst));
    const auto alpha_V = RateFunction::constant(out.interior_poincare);
    out.path = bound_path(cfg.model);
    if (out.path == BoundPath::WithBoundary) {
        const DiscreteInstance boundary = boundary_subinstance(inst);
        out.boundary_poincare = boundary.size() > 1 ? poincare_constant(boundary) : 0.0;
        out.alpha = compose_alpha_with_boundary(alpha_V, RateFunction::constant(*out.boundary_poincare), *constants,
                                                cfg.model.delta, cfg.alpha_form);
    } else {
        out.alpha = compose_alpha_no_boundary(alpha_V, *constants);
    }
    return out;
}

} // namespace sticky
