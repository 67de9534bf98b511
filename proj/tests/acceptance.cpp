#include "sticky/mc.hpp"
#include "sticky/pipeline.hpp"
#include "sticky/semigroup.hpp"
#include "small_oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

using namespace sticky;
using namespace sticky::testing;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void fail_if(bool bad, const std::string& why) {
        if (bad) {
            pass = false;
            detail << " FAIL(" << why << ")";
        }
    }
};

std::string config_path(const std::string& name) { return std::string(STICKY_CONFIG_DIR) + "/" + name; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// The half-line config with the truncation moved to L at the same spacing.
RunConfig half_line(const std::string& name, double L) {
    RunConfig cfg = load_config(config_path(name));
    const double L0 = cfg.model.domain.thickness();
    cfg.n_interior = static_cast<std::size_t>(std::llround(static_cast<double>(cfg.n_interior) * L / L0));
    cfg.model.domain = DomainSpec::half_line(L);
    return cfg;
}

bool disjoint(std::span<const double> a, std::span<const double> b) {
    for (double x : a)
        for (double y : b)
            if (std::abs(x - y) <= 1e-12 * std::max(x, y)) return false;
    return true;
}

// 1. Stationarity and reversibility of every shipped model.
void stationarity(Outcome& out) {
    for (const char* name : {"interval_4_1b.json", "interval_gamma2.json", "halfline_tau0.5.json", "halfline_tau1.json",
                             "halfline_tau2.json", "halfline_tau3.json", "strip.json"}) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto cfg = load_config(config_path(name));
        const auto inst = build_for(cfg);
        const auto gen = generator_of(inst);
        const Eigen::MatrixXd E = inst.dense_E();
        const double e_scale = E.cwiseAbs().maxCoeff();
        const double sym = (E - E.transpose()).cwiseAbs().maxCoeff() / e_scale;
        const double ones = (E * Eigen::VectorXd::Ones(E.rows())).cwiseAbs().maxCoeff() / e_scale;
        double q_scale = 0.0, mq = 0.0;
        for (std::size_t i = 0; i < gen.size(); ++i) q_scale = std::max(q_scale, inst.m[i] * gen.total_rate[i]);
        for (double v : gen.left_apply(inst.m)) mq = std::max(mq, std::abs(v) / q_scale);
        const double secs = seconds_since(t0);
        const double worst = std::max({sym, ones, mq});
        out.detail << " " << cfg.name << ":" << worst << "/" << secs << "s";
        out.fail_if(worst > 1e-12, std::string(name) + " residual");
        out.fail_if(secs >= 1.0, std::string(name) + " runtime");
    }
}

// 2. Long-run interior occupation. The horizon holds 1e8 expected jumps, well
// above the 1e6 floor, since the sticky walls mix slowly relative to the
// interior jump rate.
void occupation(Outcome& out) {
    const auto t0 = std::chrono::steady_clock::now();
    constexpr double kJumps = 1e8;
    const auto cfg = load_config(config_path("interval_4_1b.json"));
    const auto gen = generator_of(build_for(cfg));
    const auto stats = simulate(gen, 0, horizon_for_jumps(gen, kJumps), cfg.seed);
    out.detail << " fraction=" << stats.occupation_fraction << " se=" << stats.standard_error
               << " jumps=" << stats.jump_count;
    out.fail_if(stats.jump_count < 1000000, "too few jumps");
    out.fail_if(std::abs(stats.occupation_fraction - 0.5) >= 0.02, "fraction off 0.5");

    const auto cfg2 = load_config(config_path("interval_gamma2.json"));
    const auto gen2 = generator_of(build_for(cfg2));
    const auto stats2 = simulate(gen2, 0, horizon_for_jumps(gen2, kJumps), cfg2.seed);
    const double th = theta(cfg2.model);
    out.detail << " gamma2: fraction=" << stats2.occupation_fraction << " theta=" << th
               << " se=" << stats2.standard_error;
    out.fail_if(stats2.jump_count < 1000000, "too few jumps");
    out.fail_if(std::abs(stats2.occupation_fraction - th) > 3 * stats2.standard_error, "gamma=2 off theta");
    const double secs = seconds_since(t0);
    out.detail << " " << secs << "s";
    out.fail_if(secs >= 30.0, "runtime");
}

// 3. The measure and energy of the unit interval.
void interval_data(Outcome& out) {
    const auto inst =
        build_instance(ModelSpec{DomainSpec::interval(0, 1), Potential::zero(), Potential::zero(), 0.5, 0.0}, 400);
    double worst_mu = 0.0;
    for (int k = 0; k < 10; ++k) {
        std::vector<double> f(inst.size());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::pow(inst.nodes[i].p.x, k);
        const double exact = 0.5 / (k + 1) + 0.25 * (k == 0 ? 1.0 : 0.0) + 0.25;
        worst_mu = std::max(worst_mu, std::abs(inst.mean(f) - exact));
    }
    out.detail << " mu_err=" << worst_mu;
    out.fail_if(worst_mu >= 1e-3, "mu");
    const std::vector<std::pair<std::function<double(double)>, double>> cases{
        {[](double x) { return x; }, 0.5},
        {[](double x) { return x * x; }, 2.0 / 3.0},
        {[](double x) { return std::sin(std::numbers::pi * x); }, std::numbers::pi * std::numbers::pi / 4}};
    double worst_e = 0.0;
    for (const auto& [fn, exact] : cases) {
        std::vector<double> f(inst.size());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = fn(inst.nodes[i].p.x);
        worst_e = std::max(worst_e, std::abs(inst.energy(f) - exact) / exact);
    }
    out.detail << " energy_rel_err=" << worst_e;
    out.fail_if(worst_e >= 0.01, "energy");
}

// 4. Scaling of beta_hat on the d = 1 instance.
void scaling(Outcome& out) {
    const auto t0 = std::chrono::steady_clock::now();
    auto cfg = load_config(config_path("interval_4_1b.json"));
    cfg.n_interior = 2000;
    const auto inst = build_for(cfg);
    std::vector<std::pair<double, double>> samples;
    double spread = 0.0;
    for (double r : numeric::log_grid(1e-3, 1e-1, 8)) {
        const auto res = beta_hat(inst, r, {.restarts = 32, .seed = cfg.seed});
        samples.emplace_back(r, res.value);
        spread = std::max(spread, res.status.multi_start_spread);
    }
    const auto fit = fit_scaling_exponent(samples);
    const double secs = seconds_since(t0);
    out.detail << " slope=" << fit.slope << " r2=" << fit.r_squared << " spread=" << spread << " " << secs << "s";
    out.fail_if(fit.slope < -0.65 || fit.slope > -0.35, "slope");
    out.fail_if(spread >= 0.05, "spread");
    out.fail_if(secs >= 600.0, "runtime");
}

struct Validated {
    std::string name;
    RunConfig cfg;
    DiscreteInstance inst;
    RateFunction beta;
    RateFunction alpha;
};

std::vector<Validated>& validated() {
    static std::vector<Validated> v;
    return v;
}

// 5. Composed rates calibrated on a coarse grid hold on a disjoint fine grid.
void composition(Outcome& out) {
    for (const char* name : {"strip.json", "interval_4_1b.json"}) {
        const auto cfg = load_config(config_path(name));
        const auto inst = build_for(cfg);
        const auto coarse = cfg.r_grid.values();
        const auto fine_beta = numeric::log_grid(1.2e-3, 0.085, 16);
        const auto fine_alpha = numeric::log_grid(1.2e-3, 0.85, 16);
        out.fail_if(!disjoint(coarse, fine_beta) || !disjoint(coarse, fine_alpha), "grids overlap");
        const auto beta = calibrate_composed_beta(cfg, inst, coarse);
        const auto alpha = calibrate_composed_alpha(cfg, inst);
        const auto sp = check_super_poincare(inst, beta.beta, fine_beta, 1000, derive_seed(cfg.seed, {5}));
        const auto wp = check_weak_poincare(inst, alpha.alpha, fine_alpha, 1000, derive_seed(cfg.seed, {6}));
        out.detail << " " << cfg.name << "[" << to_string(beta.path) << "]: beta " << sp.violations << "/" << sp.trials
                   << " margin=" << sp.worst_margin << ", alpha " << wp.violations << "/" << wp.trials
                   << " margin=" << wp.worst_margin;
        out.fail_if(sp.violations > 0, cfg.name + " beta violations");
        out.fail_if(wp.violations > 0, cfg.name + " alpha violations");
        validated().push_back({cfg.name, cfg, inst, beta.beta, alpha.alpha});
    }
}

// 6. Semigroup forms of the validated beta.
void semigroup_bounds(Outcome& out) {
    if (validated().empty()) {
        Outcome scratch;
        composition(scratch);
        out.fail_if(!scratch.pass, "composition did not validate");
    }
    const auto r_grid = numeric::log_grid(0.1, 100.0, 5), t_grid = numeric::log_grid(1e-2, 1.0, 5);
    const auto s_grid = numeric::log_grid(0.5, 20.0, 5);
    for (const auto& v : validated()) {
        const auto sd = spectral_data(v.inst);
        const auto fwd = check_tt1_forward(v.inst, sd, v.beta, r_grid, t_grid, 1000, derive_seed(v.cfg.seed, {7}));
        const auto tail = check_tt1_tail(v.inst, sd, v.beta, t_grid, s_grid, 1000, derive_seed(v.cfg.seed, {8}), 0.5);
        out.detail << " " << v.name << ": forward " << fwd.violations << "/" << fwd.trials << ", tail "
                   << tail.violations << "/" << tail.trials;
        out.fail_if(fwd.violations > 0, v.name + " forward");
        out.fail_if(tail.violations > 0, v.name + " tail");
    }
}

// 7. Kernel bound of the tau = 3 half-line, at the shipped truncation and at twice it.
void kernel_bound(Outcome& out) {
    const double L0 = load_config(config_path("halfline_tau3.json")).model.domain.thickness();
    for (double L : {L0, 2 * L0}) {
        const auto cfg = half_line("halfline_tau3.json", L);
        const auto inst = build_for(cfg);
        const auto beta = calibrate_composed_beta(cfg, inst, cfg.r_grid.values());
        const PsiUltra ultra(beta.beta);
        const auto sd = spectral_data(inst);
        long violations = 0;
        double worst = 0.0;
        for (double t : numeric::log_grid(1e-2, 10.0, 20)) {
            const double k = kernel_sup(sd, t), bound = ultra.kernel_bound(t);
            worst = std::max(worst, k / bound);
            if (k > bound * (1 + 1e-10)) ++violations;
        }
        out.detail << " L=" << L << ": violations=" << violations << "/20 worst_ratio=" << worst;
        out.fail_if(violations > 0, "kernel bound at L=" + std::to_string(L));
    }
}

// 8. Decay against the weak Poincare rate, and the gap under truncation.
void decay(Outcome& out) {
    const auto t_grid = numeric::log_grid(0.1, 100.0, 20);
    for (const char* name : {"interval_4_1b.json", "strip.json", "halfline_tau1.json"}) {
        const auto cfg = load_config(config_path(name));
        const auto inst = build_for(cfg);
        const auto alpha = calibrate_composed_alpha(cfg, inst).alpha;
        const auto sd = spectral_data(inst);
        long violations = 0;
        for (std::size_t k = 0; k < t_grid.size(); ++k) {
            const double lower = norm_infty_to_2_bounds(sd, t_grid[k], 200, derive_seed(cfg.seed, {9, k})).lower;
            if (lower * lower > xi_from_alpha(alpha, t_grid[k]) * (1 + 1e-10)) ++violations;
        }
        out.detail << " " << cfg.name << ": xi " << violations << "/" << t_grid.size();
        out.fail_if(violations > 0, cfg.name + " xi");
    }
    auto gap = [](const RunConfig& cfg) { return 1.0 / poincare_constant(build_for(cfg)); };
    const double g10 = gap(half_line("halfline_tau1.json", 10)), g20 = gap(half_line("halfline_tau1.json", 20));
    out.detail << " tau1: gap(10)=" << g10 << " gap(20)=" << g20;
    out.fail_if(std::abs(g20 - g10) / g10 > 0.10, "tau=1 gap unstable");
    const double h10 = gap(half_line("halfline_tau0.5.json", 10)), h40 = gap(half_line("halfline_tau0.5.json", 40));
    out.detail << " tau0.5: gap(10)=" << h10 << " gap(40)=" << h40;
    out.fail_if(!(h40 < 0.5 * h10), "tau=0.5 gap does not collapse");
}

// 9. Two- and three-node oracles.
void small_oracles(Outcome& out) {
    const auto two = make_instance({0.5, 0.5}, {{0, 1, 0.5}});
    double worst = std::max(std::abs(beta_hat(two, 0.25).value - 1.5), std::abs(alpha_hat(two, 0.5).value - 0.25));
    for (double r : numeric::log_grid(1e-3, 4.0, 10)) {
        worst = std::max(worst, std::abs(beta_hat(two, r).value - std::max(2 - 2 * r, 1.0)));
        worst = std::max(worst, std::abs(alpha_hat(two, r).value - std::max((1 - r) / 2, 0.0)));
    }
    Rng rng(91);
    for (int trial = 0; trial < 20; ++trial) {
        const Three t = random_three(rng);
        const auto inst = t.inst();
        for (double r : {1e-3, 0.03, 0.3, 3.0}) {
            const double b = beta_oracle(t, r), a = alpha_oracle(t, r);
            worst = std::max(worst, std::abs(beta_hat(inst, r).value - b) / b);
            if (r < 1.0) worst = std::max(worst, std::abs(alpha_hat(inst, r).value - a) / std::max(a, 1e-300));
        }
    }
    out.detail << " worst_error=" << worst;
    out.fail_if(worst > 1e-6, "oracle mismatch");
}

// 10. Regime labels of the half-line family.
void regimes(Outcome& out) {
    auto report = [](double tau) {
        RunConfig cfg;
        cfg.model = ModelSpec{DomainSpec::half_line(10.0), Potential::power_tau(tau), Potential::power_tau(tau), 1.0, 1.0};
        cfg.collar_s0 = 1.0;
        cfg.rates = power_tau_rates(tau);
        const auto b = compose_bounds(cfg);
        require(b.regime.has_value(), ErrorCode::Unclassified, "no regime for tau");
        return *b.regime;
    };
    const auto r15 = report(1.5), r2 = report(2.0), r3 = report(3.0), r05 = report(0.5);
    out.detail << " tau1.5=" << r15.beta_label.value_or("none") << "(" << r15.ui_exponent.value_or(-1) << ")"
               << " tau2=" << r2.beta_label.value_or("none") << " tau3=" << r3.beta_label.value_or("none") << "(" << r3.kernel_exponent.value_or(-1)
               << ") tau0.5=" << r05.alpha_label.value_or("none") << "(" << r05.subexponential_exponent.value_or(-1) << ")";
    out.fail_if(r15.beta_label != regime::kUniformlyIntegrable || !r15.ui_exponent ||
                    std::abs(*r15.ui_exponent - 2.0 / 3.0) > 1e-12,
                "tau=1.5");
    out.fail_if(r2.beta_label != regime::kHyperbounded, "tau=2");
    out.fail_if(r3.beta_label != regime::kUltrabounded || !r3.kernel_exponent || std::abs(*r3.kernel_exponent - 3.0) > 1e-12,
                "tau=3");
    out.fail_if(r05.alpha_label != regime::kSubexponential || !r05.subexponential_exponent ||
                    std::abs(*r05.subexponential_exponent - 0.2) > 1e-12,
                "tau=0.5");
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, void (*)(Outcome&)>> criteria{
        {"stationarity and reversibility", stationarity},
        {"occupation fraction", occupation},
        {"unit interval measure and energy", interval_data},
        {"beta_hat scaling exponent", scaling},
        {"composition soundness", composition},
        {"semigroup bounds from beta", semigroup_bounds},
        {"ultrabounded kernel bound", kernel_bound},
        {"decay and spectral gap", decay},
        {"small-instance oracles", small_oracles},
        {"regime labels", regimes},
    };
    // Optional criterion numbers select a subset.
    std::vector<bool> run(criteria.size(), argc <= 1);
    for (int a = 1; a < argc; ++a) {
        const long k = std::strtol(argv[a], nullptr, 10);
        if (k >= 1 && k <= static_cast<long>(criteria.size())) run[static_cast<std::size_t>(k - 1)] = true;
    }
    int failed = 0, ran = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (!run[k]) continue;
        ++ran;
        Outcome out;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[k].second(out);
        } catch (const std::exception& e) {
            out.fail_if(true, e.what());
        }
        if (!out.pass) ++failed;
        std::printf("%s %2zu %s:%s [%.1fs]\n", out.pass ? "PASS" : "FAIL", k + 1, criteria[k].first,
                    out.detail.str().c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria failed\n", failed, ran);
    return failed == 0 ? 0 : 1;
}
