#include "sticky/verify.hpp"
#include "sticky/rng.hpp"
#include "small_oracles.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace sticky;
using namespace sticky::testing;
using Catch::Approx;

namespace {

DiscreteInstance two_state() { return make_instance({0.5, 0.5}, {{0, 1, 0.5}}); }

DiscreteInstance flat_interval(std::size_t n, double gamma = 0.5) {
    return build_instance(ModelSpec{DomainSpec::interval(0, 1), Potential::zero(), Potential::zero(), gamma, 0.0}, n);
}

DiscreteInstance random_connected(Rng& rng, std::size_t n) {
    std::vector<double> m(n);
    double s = 0.0;
    for (auto& v : m) s += (v = rng.uniform(0.05, 1.0));
    for (auto& v : m) v /= s;
    std::vector<Edge> edges;
    for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, rng.uniform(0.1, 3.0)});
    for (std::size_t k = 0; k < n / 2; ++k) {
        const std::size_t i = rng.below(n), j = rng.below(n);
        if (i + 1 < j) edges.push_back({i, j, rng.uniform(0.01, 1.0)});
    }
    return make_instance(m, edges, {0});
}

} // namespace

TEST_CASE("two-state Poincare constant") {
    const auto inst = two_state();
    CHECK(is_connected(inst));
    CHECK(poincare_constant(inst) == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("two-state beta_hat") {
    const auto inst = two_state();
    CHECK(beta_hat(inst, 0.25).value == Approx(1.5).epsilon(1e-9));
    for (double r : {0.5, 1.0, 10.0}) CHECK(beta_hat(inst, r).value == Approx(1.0).epsilon(1e-12));
    for (double r : {1e-3, 0.1, 0.4}) CHECK(beta_hat(inst, r).value == Approx(2 - 2 * r).epsilon(1e-9));
}

TEST_CASE("two-state alpha_hat") {
    const auto inst = two_state();
    CHECK(alpha_hat(inst, 0.5).value == Approx(0.25).epsilon(1e-9));
    for (double r : {1e-3, 0.2, 0.9}) CHECK(alpha_hat(inst, r).value == Approx((1 - r) / 2).epsilon(1e-9));
    for (double r : {1.0, 3.0}) CHECK(alpha_hat(inst, r).value == 0.0);
}

TEST_CASE("three-node oracles agree with face enumeration and direction scans") {
    Rng rng(2024);
    for (int trial = 0; trial < 12; ++trial) {
        const Three t = random_three(rng);
        const auto inst = t.inst();
        for (double r : {1e-3, 0.05, 0.3, 2.0}) {
            INFO("trial " << trial << " r " << r);
            CHECK(beta_hat(inst, r).value == Approx(beta_oracle(t, r)).epsilon(1e-8));
        }
        for (double r : {1e-3, 0.1, 0.5}) {
            INFO("trial " << trial << " r " << r);
            CHECK(alpha_hat(inst, r).value == Approx(alpha_oracle(t, r)).epsilon(1e-8));
        }
    }
}

TEST_CASE("beta_hat lies between one and the reciprocal of the smallest mass") {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const auto inst = random_connected(rng, 3 + rng.below(8));
        const double cap = 1.0 / *std::min_element(inst.m.begin(), inst.m.end());
        for (double r : numeric::log_grid(1e-4, 10.0, 8)) {
            const double b = beta_hat(inst, r, {.restarts = 8}).value;
            CHECK(b >= 1.0 - 1e-12);
            CHECK(b <= cap * (1 + 1e-12));
        }
    }
}

TEST_CASE("beta_hat is one beyond the Poincare constant") {
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const auto inst = random_connected(rng, 3 + rng.below(8));
        const double cp = poincare_constant(inst);
        for (double k : {1.0, 1.5, 10.0}) CHECK(beta_hat(inst, k * cp, {.restarts = 8}).value == Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("oracles are non-increasing in r") {
    Rng rng(9);
    for (int trial = 0; trial < 8; ++trial) {
        const auto inst = random_connected(rng, 3 + rng.below(6));
        const double cp = poincare_constant(inst);
        double prev_b = numeric::kInfinity, prev_a = numeric::kInfinity;
        for (double r : numeric::log_grid(1e-3, 2.0, 12)) {
            const double b = beta_hat(inst, r).value, a = alpha_hat(inst, r).value;
            CHECK(b <= prev_b * (1 + 1e-8));
            CHECK(a <= prev_a * (1 + 1e-8) + 1e-12);
            CHECK(a <= cp * (1 + 1e-9));
            prev_b = b;
            prev_a = a;
        }
    }
}

TEST_CASE("oracles are deterministic under a fixed seed") {
    const auto inst = flat_interval(60);
    const auto a = beta_hat(inst, 0.01, {.restarts = 8, .seed = 3});
    const auto b = beta_hat(inst, 0.01, {.restarts = 8, .seed = 3});
    CHECK(a.value == b.value);
    CHECK(a.maximizer == b.maximizer);
    CHECK(alpha_hat(inst, 0.1, {.restarts = 8, .seed = 3}).value ==
          alpha_hat(inst, 0.1, {.restarts = 8, .seed = 3}).value);
    const auto grid = numeric::log_grid(1e-3, 1.0, 4);
    const auto beta = RateFunction::poly(1.0, 0.5);
    const auto r1 = check_super_poincare(inst, beta, grid, 50, 11);
    const auto r2 = check_super_poincare(inst, beta, grid, 50, 11);
    CHECK(r1.violations == r2.violations);
    CHECK(r1.worst_margin == r2.worst_margin);
}

TEST_CASE("Poincare constant is stable under refinement") {
    // Flat unit interval with sticky walls: the constant converges as the mesh refines.
    const double a = poincare_constant(flat_interval(400)), b = poincare_constant(flat_interval(800));
    CHECK(std::abs(a - b) / b < 0.01);
}

TEST_CASE("super-Poincare check with the exact two-state profile") {
    const auto inst = two_state();
    const auto exact = RateFunction::composed([](double r) { return std::max(2 - 2 * r, 1.0); }, std::nullopt, "exact");
    const auto low = exact.scaled(0.9);
    const auto grid = numeric::log_grid(1e-3, 0.4, 6);
    CHECK(check_super_poincare(inst, exact, grid, 200, 1).violations == 0);
    CHECK(check_super_poincare(inst, low, grid, 200, 1).violations > 0);
}

TEST_CASE("calibrated beta passes and the halved calibration fails") {
    const auto inst = flat_interval(100);
    const auto shape = RateFunction::poly(1.0, 0.5);
    const auto cal = calibrate_beta(inst, shape, numeric::log_grid(5e-4, 0.2, 12), {.restarts = 16});
    const auto grid = numeric::log_grid(1e-3, 0.1, 5);
    const auto ok = check_super_poincare(inst, cal.rate, grid, 400, 5);
    CHECK(ok.violations == 0);
    CHECK(ok.trials == 400 * 5);
    const auto halved = check_super_poincare(inst, cal.rate.scaled(0.5), grid, 400, 5);
    CHECK(halved.violations > 0);
}

TEST_CASE("globally calibrated beta dominates beta_hat everywhere") {
    const auto inst = flat_interval(60);
    const auto shape = RateFunction::poly(1.0, 0.5);
    const auto cal = calibrate_beta_global(inst, shape, 1e-2, 1e-1, {.restarts = 8});
    for (double r : numeric::log_grid(1e-6, 1e3, 19))
        CHECK(beta_hat(inst, r, {.restarts = 8, .seed = 99}).value <= cal.rate(r) * (1 + 1e-9));
}

TEST_CASE("weak Poincare check at the Poincare constant") {
    Rng rng(4);
    for (const auto& inst : {flat_interval(50), random_connected(rng, 12)}) {
        const auto alpha = RateFunction::constant(poincare_constant(inst) * (1 + 1e-9));
        const auto rep = check_weak_poincare(inst, alpha, numeric::log_grid(1e-3, 0.5, 5), 300, 2);
        CHECK(rep.violations == 0);
        CHECK(rep.worst_margin <= 0.0);
    }
}

TEST_CASE("scaling fit on exact data") {
    std::vector<std::pair<double, double>> pw, ex;
    for (double r : numeric::log_grid(1e-3, 1e-1, 8)) {
        pw.emplace_back(r, 3.0 * std::pow(r, -0.5));
        ex.emplace_back(r, std::exp(std::pow(r, -0.3)));
    }
    const auto a = fit_scaling_exponent(pw);
    CHECK(a.slope == Approx(-0.5).epsilon(1e-12));
    CHECK(a.intercept == Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(a.r_squared == Approx(1.0).epsilon(1e-12));
    CHECK(fit_scaling_exponent(ex, FitCoordinates::LogLogLog).slope == Approx(-0.3).epsilon(1e-12));
}

TEST_CASE("scaling fit needs enough samples and span") {
    auto expect_span = [](const std::vector<std::pair<double, double>>& s) {
        try {
            fit_scaling_exponent(s);
            FAIL("expected InsufficientSpan");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InsufficientSpan);
        }
    };
    expect_span({{1e-3, 1}, {1e-2, 2}, {1e-1, 3}, {1, 4}});
    std::vector<std::pair<double, double>> narrow;
    for (double r : numeric::log_grid(1e-2, 1e-1, 6)) narrow.emplace_back(r, 1 / r);
    expect_span(narrow);
}
