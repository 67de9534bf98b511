#include "sticky/model.hpp"
#include "sticky/model_json.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace sticky;
using Catch::Approx;

namespace {

ModelSpec flat_interval(double a, double b, double gamma) {
    return ModelSpec{DomainSpec::interval(a, b), Potential::zero(), Potential::zero(), gamma, 0.0};
}

} // namespace

TEST_CASE("partition constants of the flat unit interval") {
    const auto ms = partition_constants(flat_interval(0, 1, 0.5));
    CHECK(ms.Z_V == Approx(1.0).epsilon(1e-12));
    CHECK(ms.Z_W_boundary == 2.0);
    CHECK(ms.theta == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("partition constants of the flat interval of length two") {
    const auto ms = partition_constants(flat_interval(0, 2, 1.0));
    CHECK(ms.Z_V == Approx(2.0).epsilon(1e-12));
    CHECK(ms.Z_W_boundary == 2.0);
    CHECK(ms.theta == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("theta closed form") {
    CHECK(theta_from(0.5, 2.0, 1.0) == 0.5);
    CHECK(theta_from(2.0, 2.0, 2.0) == Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(theta_from(1.0, 1.0, 1e12) == Approx(1e-12).epsilon(1e-9));
}

TEST_CASE("theta grows strictly and monotonically to one in gamma") {
    double last = 0.0;
    for (double g : {1e-3, 1e-2, 0.1, 0.5, 1.0, 10.0, 1e3, 1e6}) {
        const double th = theta(flat_interval(0, 1, g));
        CHECK(th > last);
        CHECK(th < 1.0);
        last = th;
    }
    CHECK(last > 1.0 - 1e-6);
}

TEST_CASE("theta under the half-line potential") {
    ModelSpec model{DomainSpec::half_line(10.0), Potential::power_tau(2.0), Potential::power_tau(2.0), 1.0, 1.0};
    const auto ms = partition_constants(model);
    // int_0^inf exp(-x^2) dx and W(0) = 0.
    CHECK(ms.Z_V == Approx(std::sqrt(std::numbers::pi) / 2).epsilon(1e-9));
    CHECK(ms.Z_W_boundary == 1.0);
    CHECK(ms.theta == Approx(1.0 / (1.0 + std::sqrt(std::numbers::pi) / 2)).epsilon(1e-9));
}

TEST_CASE("measure densities integrate to one") {
    for (double tau : {0.5, 1.0, 1.5, 2.0, 3.0}) {
        ModelSpec model{DomainSpec::half_line(10.0), Potential::power_tau(tau), Potential::power_tau(tau), 1.0, 1.0};
        const auto ms = partition_constants(model);
        // int_0^L exp(-x^tau) dx = gamma_lower(1/tau, L^tau) / tau.
        const double exact = boost::math::tgamma_lower(1.0 / tau, std::pow(10.0, tau)) / tau;
        INFO("tau = " << tau);
        CHECK(ms.Z_V == Approx(exact).epsilon(1e-10));
        const double mass = numeric::simpson([&](double x) { return ms.density_V({x, 0}); }, 0.0, 10.0, 200001);
        CHECK(mass == Approx(1.0).epsilon(1e-5));
        CHECK(ms.density_W({0, 0}) == Approx(1.0).epsilon(1e-15));
    }

    const ModelSpec strip{DomainSpec::strip(1.0, 2.0), Potential::zero(), Potential::zero(), 1.0, 1.0};
    const auto mss = partition_constants(strip);
    CHECK(mss.Z_V == Approx(2.0).epsilon(1e-12));
    CHECK(mss.Z_W_boundary == Approx(4.0).epsilon(1e-12));
    const double area = numeric::simpson2d([&](double x, double y) { return mss.density_V({x, y}); }, 0, 1, 0, 2, 65);
    CHECK(area == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(partition_constants(flat_interval(1, 0, 1.0)), Error);
    CHECK_THROWS_AS(partition_constants(flat_interval(0, 1, 0.0)), Error);
    ModelSpec none = flat_interval(0, 1, 1.0);
    none.domain.sticky_left = none.domain.sticky_right = false;
    CHECK_THROWS_AS(partition_constants(none), Error);
    ModelSpec bad_delta = flat_interval(0, 1, 1.0);
    bad_delta.delta = -1.0;
    CHECK_THROWS_AS(bad_delta.validate(), Error);
}

TEST_CASE("point boundaries warn about delta") {
    ModelSpec model = flat_interval(0, 1, 1.0);
    CHECK(model.warnings().empty());
    model.delta = 1.0;
    CHECK_FALSE(model.warnings().empty());
    const ModelSpec strip{DomainSpec::strip(1.0, 1.0), Potential::zero(), Potential::zero(), 1.0, 1.0};
    CHECK(strip.warnings().empty());
}

TEST_CASE("default collar function on the unit interval") {
    const auto h = default_h(DomainSpec::interval(0, 1), 0.25);
    CHECK(h({0, 0}) == 0.0);
    CHECK(h({1, 0}) == 0.0);
    const double e = 1e-6;
    CHECK((h({e, 0}) - h({0, 0})) / e == Approx(1.0).margin(1e-6));
    CHECK((h({1 - e, 0}) - h({1, 0})) / e == Approx(1.0).margin(1e-6));
    CHECK(h.gradient({0, 0}).x == 1.0);
    CHECK(h.gradient({1, 0}).x == -1.0);
    for (double x = 0.25; x <= 0.75; x += 0.01) {
        CHECK(h({x, 0}) == 0.0);
        CHECK(h.gradient({x, 0}).x == 0.0);
        CHECK(h.laplacian({x, 0}) == 0.0);
    }
}

TEST_CASE("collar derivatives agree with finite differences") {
    const auto h = default_h(DomainSpec::interval(0, 1), 0.3);
    const auto fd = CollarFunction::from_values(h.value, 1e-5);
    for (double x : {0.01, 0.05, 0.1, 0.2, 0.29, 0.71, 0.8, 0.95}) {
        CHECK(h.gradient({x, 0}).x == Approx(fd.gradient({x, 0}).x).margin(1e-6));
        CHECK(h.laplacian({x, 0}) == Approx(fd.laplacian({x, 0})).margin(1e-3));
    }
}

TEST_CASE("default collar on the half-line and the strip") {
    const auto h = default_h(DomainSpec::half_line(10.0), 1.0);
    CHECK(h({0, 0}) == 0.0);
    CHECK(h.gradient({0, 0}).x == 1.0);
    CHECK(h({1.5, 0}) == 0.0);
    CHECK_FALSE(h.note.empty());

    const auto hs = default_h(DomainSpec::strip(1.0, 1.0), 0.25);
    for (double y : {0.0, 0.3, 0.9}) {
        CHECK(hs({0.1, y}) == hs({0.1, 0.0}));
        CHECK(hs({0.0, y}) == 0.0);
        CHECK(hs.gradient({0.0, y}).x == 1.0);
        CHECK(hs.gradient({0.1, y}).y == 0.0);
    }
}

TEST_CASE("collar deeper than half the thickness is rejected") {
    try {
        default_h(DomainSpec::interval(0, 1), 0.6);
        FAIL("expected CollarTooDeep");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CollarTooDeep);
    }
}

TEST_CASE("tabulated potentials interpolate their table") {
    const auto p = Potential::from_table({0.0, 1.0, 2.0}, {0.0, -1.0, -4.0});
    CHECK(p({0.5, 0}) == Approx(-0.5));
    CHECK(p({1.5, 0}) == Approx(-2.5));
    CHECK(p.gradient({0.5, 0}).x == Approx(-1.0));
}

TEST_CASE("model JSON round trip") {
    const Json j = Json::parse(R"({"domain": {"kind": "TruncatedHalfLine", "L": 10},
        "V": {"form": "PowerTau", "tau": 3}, "W": {"form": "PowerTau", "tau": 3}, "gamma": 1, "delta": 1})");
    const ModelSpec m = model_from_json(j);
    CHECK(m.domain.is_half_line());
    CHECK(m.V.tau() == 3.0);
    const ModelSpec back = model_from_json(model_to_json(m));
    CHECK(model_hash(back) == model_hash(m));
    CHECK(model_to_json(back) == model_to_json(m));
}

TEST_CASE("malformed model JSON is a parse error") {
    for (const char* text : {R"({"domain": {"kind": "Disk"}, "gamma": 1})", R"({"domain": {"kind": "Interval", "a": 0}})",
                             R"({"domain": {"kind": "Interval", "a": 0, "b": 1}, "gamma": "x"})"}) {
        try {
            model_from_json(Json::parse(text));
            FAIL("expected an error for " << text);
        } catch (const Error& e) {
            CHECK((e.code() == ErrorCode::ParseError || e.code() == ErrorCode::InvalidModel));
        }
    }
}
