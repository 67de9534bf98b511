// Command-line front end: model -> instance -> bounds -> verification -> reports.

#include "sticky/sticky.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace sticky;

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string r_grid;
    std::string t_grid;
    std::string out = "out";
    bool svg = false;
    std::optional<int> restarts;
    std::optional<long> trials;
    std::optional<double> horizon;
    std::optional<std::size_t> n;
    bool direct = false;
    double beta_scale = 1.0;
    double alpha_scale = 1.0;
};

RunConfig resolve(const Options& o) {
    RunConfig cfg = load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (!o.r_grid.empty()) {
        cfg.r_grid = parse_grid(o.r_grid);
        validate_grid(cfg.r_grid, "r");
    }
    if (!o.t_grid.empty()) {
        cfg.t_grid = parse_grid(o.t_grid);
        validate_grid(cfg.t_grid, "t");
    }
    if (o.restarts) cfg.restarts = *o.restarts;
    if (o.trials) cfg.trials = *o.trials;
    if (o.n) cfg.n_interior = *o.n;
    require(cfg.restarts >= 8, ErrorCode::InvalidArgument, "restarts must be >= 8");
    require(cfg.trials >= 1, ErrorCode::InvalidArgument, "trials must be >= 1");
    require(o.beta_scale > 0 && o.alpha_scale > 0, ErrorCode::InvalidArgument, "scales must be > 0");
    std::filesystem::create_directories(o.out);
    return cfg;
}

std::string path_in(const Options& o, const std::string& file) { return (std::filesystem::path(o.out) / file).string(); }

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json constants_json(const Constants& c) {
    return Json{{"theta", c.theta},     {"C0", c.C0},
                {"C1", optional_json(c.C1)}, {"C2", optional_json(c.C2)},
                {"C1bar", optional_json(c.C1bar)}, {"C2bar", optional_json(c.C2bar)},
                {"A", optional_json(c.A)},   {"B", optional_json(c.B)}};
}

Json regime_json(const RegimeReport& r) {
    Json j{{"labels", r.labels}};
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) j[key] = *v;
    };
    if (r.beta_label) j["beta_label"] = *r.beta_label;
    if (r.alpha_label) j["alpha_label"] = *r.alpha_label;
    put("ui_exponent", r.ui_exponent);
    put("kernel_exponent", r.kernel_exponent);
    if (r.kernel_exponent) j["kernel_exponential"] = r.kernel_exponential;
    put("subexponential_exponent", r.subexponential_exponent);
    put("algebraic_exponent", r.algebraic_exponent);
    put("logarithmic_exponent", r.logarithmic_exponent);
    return j;
}

Json report_json(const ViolationReport& r) {
    return Json{{"trials", r.trials},
                {"functions", r.functions},
                {"violations", r.violations},
                {"worst_margin", r.worst_margin},
                {"seed", r.seed}};
}

void emit(const Json& j) { std::cout << j.dump(2) << "\n"; }

int cmd_model_info(const Options& o) {
    const RunConfig cfg = resolve(o);
    const MeasureSummary ms = partition_constants(cfg.model);
    Json j{{"name", cfg.name},
           {"model", model_to_json(cfg.model)},
           {"Z_V", ms.Z_V},
           {"Z_W_boundary", ms.Z_W_boundary},
           {"theta", ms.theta},
           {"collar_s0", cfg.collar_s0},
           {"warnings", cfg.model.warnings()}};
    std::vector<std::string> notes;
    if (const auto c = try_constants(cfg, notes)) j["constants"] = constants_json(*c);
    j["notes"] = notes;
    emit(j);
    return kExitOk;
}

int cmd_bounds(const Options& o) {
    const RunConfig cfg = resolve(o);
    const ComposedBounds b = compose_bounds(cfg);
    io::Table t{{"r", "beta", "alpha"}, {}};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (double r : cfg.r_grid.values())
        t.add({r, b.beta ? (*b.beta)(r) : nan, b.alpha ? (*b.alpha)(r) : nan});
    io::write_csv_file(path_in(o, "bounds.csv"), t);
    Json j{{"name", cfg.name}, {"path", to_string(b.path)}, {"notes", b.notes}};
    if (b.beta) j["beta"] = b.beta->to_string();
    if (b.alpha) j["alpha"] = b.alpha->to_string();
    if (b.regime) j["regime"] = regime_json(*b.regime);
    if (b.constants) j["constants"] = constants_json(*b.constants);
    emit(j);
    if (o.svg) {
        std::vector<io::Series> s;
        if (b.beta) s.push_back({"beta", cfg.r_grid.values(), {}});
        if (b.alpha) s.push_back({"alpha", cfg.r_grid.values(), {}});
        for (auto& series : s)
            for (double r : series.x) series.y.push_back(series.label == "beta" ? (*b.beta)(r) : (*b.alpha)(r));
        io::write_file(path_in(o, "bounds.svg"), io::svg_loglog(cfg.name + ": composed rates", "r", s));
    }
    return kExitOk;
}

int cmd_verify_sp(const Options& o) {
    const RunConfig cfg = resolve(o);
    const DiscreteInstance inst = build_for(cfg);
    const auto grid = cfg.r_grid.values();
    Json j{{"name", cfg.name}};
    RateFunction calibrated = RateFunction::constant(1.0);
    if (o.direct) {
        const Calibration cal = calibrate_direct_beta(cfg, inst, grid);
        calibrated = cal.rate;
        j["path"] = "direct";
        j["scale"] = cal.scale;
        j["calibration_spread"] = cal.worst_spread;
    } else {
        const CalibratedBeta cal = calibrate_composed_beta(cfg, inst, grid);
        calibrated = cal.beta;
        j["path"] = to_string(cal.path);
        j["interior_scale"] = cal.interior->scale;
        if (cal.boundary) j["boundary_scale"] = cal.boundary->scale;
    }
    const RateFunction beta = o.beta_scale == 1.0 ? calibrated : calibrated.scaled(o.beta_scale);
    const ViolationReport rep = check_super_poincare(inst, beta, grid, cfg.trials, cfg.seed);

    OracleOptions opt;
    opt.restarts = cfg.restarts;
    opt.seed = cfg.seed;
    io::Table t{{"r", "beta_hat", "multi_start_spread", "converged", "beta_bound"}, {}};
    for (double r : grid) {
        const auto res = beta_hat(inst, r, opt);
        t.add({r, res.value, res.status.multi_start_spread, res.status.converged ? 1.0 : 0.0, beta(r)});
    }
    io::write_csv_file(path_in(o, "verify_sp_oracle.csv"), t);
    j["beta"] = beta.to_string();
    j["report"] = report_json(rep);
    io::write_file(path_in(o, "verify_sp_report.json"), j.dump(2) + "\n");
    emit(j);
    return rep.violations > 0 ? kExitViolation : kExitOk;
}

int cmd_verify_wp(const Options& o) {
    const RunConfig cfg = resolve(o);
    const DiscreteInstance inst = build_for(cfg);
    const auto grid = cfg.r_grid.values();
    const CalibratedAlpha cal = calibrate_composed_alpha(cfg, inst);
    const RateFunction alpha = o.alpha_scale == 1.0 ? cal.alpha : cal.alpha.scaled(o.alpha_scale);
    const ViolationReport rep = check_weak_poincare(inst, alpha, grid, cfg.trials, cfg.seed);

    OracleOptions opt;
    opt.restarts = cfg.restarts;
    opt.seed = cfg.seed;
    io::Table t{{"r", "alpha_hat", "multi_start_spread", "converged", "alpha_bound"}, {}};
    for (double r : grid) {
        const auto res = alpha_hat(inst, r, opt);
        t.add({r, res.value, res.status.multi_start_spread, res.status.converged ? 1.0 : 0.0, alpha(r)});
    }
    io::write_csv_file(path_in(o, "verify_wp_oracle.csv"), t);
    Json j{{"name", cfg.name},
           {"path", to_string(cal.path)},
           {"alpha", alpha.to_string()},
           {"interior_poincare", cal.interior_poincare},
           {"report", report_json(rep)}};
    if (cal.boundary_poincare) j["boundary_poincare"] = *cal.boundary_poincare;
    io::write_file(path_in(o, "verify_wp_report.json"), j.dump(2) + "\n");
    emit(j);
    return rep.violations > 0 ? kExitViolation : kExitOk;
}

int cmd_semigroup(const Options& o) {
    const RunConfig cfg = resolve(o);
    const DiscreteInstance inst = build_for(cfg);
    const SpectralData sd = spectral_data(inst);
    std::optional<RateFunction> alpha;
    std::vector<std::string> notes;
    try {
        alpha = calibrate_composed_alpha(cfg, inst).alpha;
        if (o.alpha_scale != 1.0) alpha = alpha->scaled(o.alpha_scale);
    } catch (const Error& e) {
        notes.push_back(std::string("no alpha for xi: ") + e.what());
    }
    const auto grid = cfg.t_grid.values();
    const auto rows = decay_table(sd, grid, alpha, 256, cfg.seed);
    io::Table t{{"t", "decay_2to2", "kernel_sup", "lower", "upper", "xi_bound"}, {}};
    long violations = 0;
    for (const auto& r : rows) {
        t.add({r.t, r.decay_2to2, r.kernel_sup, r.lower, r.upper, r.xi_bound});
        if (r.lower * r.lower > r.xi_bound * (1.0 + 1e-10) + 1e-14) ++violations;
    }
    io::write_csv_file(path_in(o, "semigroup.csv"), t);
    if (o.svg) {
        std::vector<io::Series> s(4);
        s[0].label = "decay_2to2";
        s[1].label = "kernel_sup";
        s[2].label = "lower^2";
        s[3].label = "xi";
        for (const auto& r : rows) {
            for (auto& series : s) series.x.push_back(r.t);
            s[0].y.push_back(r.decay_2to2);
            s[1].y.push_back(r.kernel_sup);
            s[2].y.push_back(r.lower * r.lower);
            s[3].y.push_back(r.xi_bound);
        }
        io::write_file(path_in(o, "semigroup.svg"), io::svg_loglog(cfg.name + ": semigroup decay", "t", s));
    }
    Json j{{"name", cfg.name},
           {"nodes", inst.size()},
           {"lambda_1", sd.gap()},
           {"xi_violations", violations},
           {"notes", notes}};
    if (alpha) j["alpha"] = alpha->to_string();
    emit(j);
    return violations > 0 ? kExitViolation : kExitOk;
}

int cmd_mc(const Options& o) {
    const RunConfig cfg = resolve(o);
    const DiscreteInstance inst = build_for(cfg);
    const Generator gen = generator_of(inst);
    const double horizon = o.horizon ? *o.horizon : horizon_for_jumps(gen, cfg.expected_jumps);
    require(horizon > 0, ErrorCode::InvalidArgument, "horizon must be > 0");
    const TrajectoryStats st = simulate(gen, 0, horizon, cfg.seed);
    std::ostringstream csv;
    write_batches_csv(csv, st);
    io::write_file(path_in(o, "mc_batches.csv"), csv.str());
    const double th = inst.metadata.theta;
    const bool ok = std::abs(st.occupation_fraction - th) <= 3.0 * st.standard_error;
    emit(Json{{"name", cfg.name},
              {"horizon", horizon},
              {"total_time", st.total_time},
              {"interior_time", st.interior_time},
              {"boundary_time", st.boundary_time},
              {"jump_count", st.jump_count},
              {"occupation_fraction", st.occupation_fraction},
              {"standard_error", st.standard_error},
              {"theta", th},
              {"within_3_se", ok}});
    return ok ? kExitOk : kExitViolation;
}

int cmd_report(const Options& o) {
    int worst = kExitOk;
    for (auto* cmd : {cmd_model_info, cmd_bounds, cmd_verify_sp, cmd_verify_wp, cmd_semigroup, cmd_mc})
        worst = std::max(worst, cmd(o));
    return worst;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sticky-reflected diffusion bounds: models, rate functions and their verification"};
    app.require_subcommand(1);
    Options o;
    int (*selected)(const Options&) = nullptr;
    auto add = [&](const char* name, const char* help, int (*fn)(const Options&)) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", o.config, "model configuration (JSON)")->required();
        sub->add_option("--seed", o.seed, "64-bit seed");
        sub->add_option("--r-grid", o.r_grid, "log grid a:b:n for r");
        sub->add_option("--t-grid", o.t_grid, "log grid a:b:n for t");
        sub->add_option("--out", o.out, "output directory");
        sub->add_flag("--svg", o.svg, "also write SVG plots");
        sub->add_option("--restarts", o.restarts, "optimizer restarts (>= 8)");
        sub->add_option("--trials", o.trials, "random functions per check");
        sub->add_option("--horizon", o.horizon, "simulation horizon (default: from expected_jumps)");
        sub->add_option("--n", o.n, "interior grid nodes");
        sub->add_flag("--direct", o.direct, "verify-sp: calibrate the config's claimed beta on the full instance");
        sub->add_option("--beta-scale", o.beta_scale, "multiply the tested beta (for power checks)");
        sub->add_option("--alpha-scale", o.alpha_scale, "multiply the tested alpha (for power checks)");
        sub->callback([&selected, fn] { selected = fn; });
    };
    add("model-info", "partition constants, theta and collar constants", cmd_model_info);
    add("bounds", "composed beta and alpha on the r grid, with regime labels", cmd_bounds);
    add("verify-sp", "check the calibrated super Poincare bound on the discrete instance", cmd_verify_sp);
    add("verify-wp", "check the calibrated weak Poincare bound on the discrete instance", cmd_verify_wp);
    add("semigroup", "decay curves of the discrete semigroup", cmd_semigroup);
    add("mc", "simulate the jump chain and compare occupation with theta", cmd_mc);
    add("report", "run every command above", cmd_report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }
    try {
        return selected(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
