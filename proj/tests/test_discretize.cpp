#include "sticky/discretize.hpp"
#include "sticky/rng.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <numeric>

using namespace sticky;
using Catch::Approx;

namespace {

ModelSpec flat_interval(double gamma = 0.5) {
    return ModelSpec{DomainSpec::interval(0, 1), Potential::zero(), Potential::zero(), gamma, 0.0};
}

std::vector<double> sample(const DiscreteInstance& inst, double (*f)(double)) {
    std::vector<double> out(inst.size());
    for (std::size_t i = 0; i < inst.size(); ++i) out[i] = f(inst.nodes[i].p.x);
    return out;
}

std::vector<ModelSpec> model_zoo() {
    std::vector<ModelSpec> out{flat_interval(), flat_interval(2.0)};
    for (double tau : {0.5, 1.0, 2.0, 3.0})
        out.push_back({DomainSpec::half_line(10.0), Potential::power_tau(tau), Potential::power_tau(tau), 1.0, 1.0});
    out.push_back({DomainSpec::strip(1.0, 1.0, true, false), Potential::zero(), Potential::zero(), 1.0, 1.0});
    out.push_back({DomainSpec::strip(1.0, 2.0), Potential::from_table({0, 1}, {0, -1}), Potential::zero(), 0.7, 0.3});
    return out;
}

} // namespace

TEST_CASE("flat interval masses split a half to the interior and a quarter to each wall") {
    const auto inst = build_instance(flat_interval(), 200);
    REQUIRE(inst.size() == 202);
    CHECK(inst.is_boundary(0));
    CHECK(inst.is_boundary(201));
    CHECK(inst.m[0] == Approx(0.25).epsilon(1e-12));
    CHECK(inst.m[201] == Approx(0.25).epsilon(1e-12));
    double interior = 0.0;
    for (std::size_t i = 1; i < 201; ++i) interior += inst.m[i];
    CHECK(interior == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("energy of x reproduces half the integral of its squared derivative") {
    const auto inst = build_instance(flat_interval(), 199);
    const auto f = sample(inst, [](double x) { return x; });
    CHECK(inst.energy(f) == Approx(0.5).epsilon(0.01));
}

TEST_CASE("energy of sin(pi x) converges at second order") {
    const double exact = std::numbers::pi * std::numbers::pi / 4;
    double last_err = 0.0;
    std::vector<double> orders;
    for (std::size_t n : {50, 100, 200, 400}) {
        const auto inst = build_instance(flat_interval(), n);
        const auto f = sample(inst, [](double x) { return std::sin(std::numbers::pi * x); });
        const double err = std::abs(inst.energy(f) - exact);
        if (last_err > 0) orders.push_back(std::log2(last_err / err));
        last_err = err;
    }
    for (double p : orders) CHECK(p >= 1.9);
}

TEST_CASE("every model in the zoo is stationary and reversible") {
    for (const auto& model : model_zoo()) {
        const auto inst = build_instance(model, 40, 8);
        INFO(model.domain.kind_name());
        CHECK(std::accumulate(inst.m.begin(), inst.m.end(), 0.0) == Approx(1.0).margin(1e-12));
        for (double v : inst.m) CHECK(v > 0);
        const Eigen::MatrixXd E = inst.dense_E();
        CHECK((E - E.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((E * Eigen::VectorXd::Ones(E.rows())).cwiseAbs().maxCoeff() <= 1e-12 * E.cwiseAbs().maxCoeff());
        double interior = 0.0;
        for (std::size_t i = 0; i < inst.size(); ++i)
            if (!inst.is_boundary(i)) interior += inst.m[i];
        CHECK(interior == Approx(inst.metadata.theta).margin(1e-10));

        const auto gen = generator_of(inst);
        const auto mQ = gen.left_apply(inst.m);
        double scale = 0.0;
        for (std::size_t i = 0; i < gen.size(); ++i) scale = std::max(scale, inst.m[i] * gen.total_rate[i]);
        for (double v : mQ) CHECK(std::abs(v) <= 1e-12 * scale);
        const std::vector<double> ones(inst.size(), 1.0);
        for (double v : gen.apply(ones)) CHECK(std::abs(v) <= 1e-12 * scale);
        for (std::size_t i = 0; i < gen.size(); ++i)
            for (std::size_t k = gen.row_start[i]; k < gen.row_start[i + 1]; ++k) {
                const std::size_t j = gen.target[k];
                CHECK(inst.m[i] * gen.rate[k] == Approx(inst.m[j] * gen.q(j, i)).epsilon(1e-14));
            }
    }
}

TEST_CASE("energy is nonnegative for random functions") {
    Rng rng(11);
    for (const auto& model : model_zoo()) {
        const auto inst = build_instance(model, 30, 8);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> f(inst.size());
            for (auto& v : f) v = rng.normal();
            CHECK(inst.energy(f) >= 0.0);
            const auto Ef = inst.apply_E(f);
            double quad = 0.0;
            for (std::size_t i = 0; i < f.size(); ++i) quad += f[i] * Ef[i];
            CHECK(quad == Approx(inst.energy(f)).epsilon(1e-10));
        }
    }
}

TEST_CASE("theta split is exact under refinement") {
    for (std::size_t n : {10, 100, 1000}) {
        const auto inst = build_instance(flat_interval(2.0), n);
        CHECK(inst.m.front() + inst.m.back() == Approx(1.0 - inst.metadata.theta).epsilon(1e-13));
        CHECK(inst.metadata.theta == Approx(0.8).epsilon(1e-12));
    }
}

TEST_CASE("two-node generator") {
    const auto inst = make_instance({0.5, 0.5}, {{0, 1, 0.5}});
    const auto gen = generator_of(inst);
    CHECK(gen.q(0, 1) == 1.0);
    CHECK(gen.q(1, 0) == 1.0);
    CHECK(gen.total_rate[0] == 1.0);
}

TEST_CASE("positive off-diagonal entries are rejected") {
    DiscreteInstance inst = make_instance({0.5, 0.5}, {{0, 1, 0.5}});
    inst.edges[0].w = -0.5;
    inst.finalize();
    try {
        generator_of(inst);
        FAIL("expected NegativeRate");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NegativeRate);
    }
}

TEST_CASE("grid too coarse") {
    CHECK_THROWS_AS(build_instance(flat_interval(), 3), Error);
    const ModelSpec strip{DomainSpec::strip(1, 1), Potential::zero(), Potential::zero(), 1.0, 1.0};
    CHECK_THROWS_AS(build_instance(strip, 10, 4), Error);
}

TEST_CASE("strip sub-instances carry the interior and boundary forms") {
    const ModelSpec strip{DomainSpec::strip(1.0, 1.0, true, false), Potential::zero(), Potential::zero(), 1.0, 2.0};
    const auto inst = build_instance(strip, 10, 12);
    const auto in = interior_subinstance(inst);
    const auto bd = boundary_subinstance(inst);
    CHECK(in.size() + bd.size() == inst.size());
    CHECK(bd.size() == 12);
    CHECK(std::accumulate(in.m.begin(), in.m.end(), 0.0) == Approx(1.0).epsilon(1e-13));
    CHECK(std::accumulate(bd.m.begin(), bd.m.end(), 0.0) == Approx(1.0).epsilon(1e-13));
    // f(y) = sin(2 pi y) on the circle: boundary energy -> int f'^2 = 2 pi^2.
    std::vector<double> f(bd.size());
    for (std::size_t i = 0; i < bd.size(); ++i) f[i] = std::sin(2 * std::numbers::pi * bd.nodes[i].p.y);
    CHECK(bd.energy(f) == Approx(2 * std::numbers::pi * std::numbers::pi).epsilon(0.05));
}

TEST_CASE("half-line truncation keeps the sticky wall at the origin") {
    const ModelSpec model{DomainSpec::half_line(10.0), Potential::power_tau(2.0), Potential::power_tau(2.0), 1.0, 1.0};
    const auto inst = build_instance(model, 100);
    CHECK(inst.is_boundary(0));
    CHECK(inst.nodes[0].p.x == 0.0);
    for (std::size_t i = 1; i < inst.size(); ++i) CHECK_FALSE(inst.is_boundary(i));
    CHECK(inst.metadata.effective_length <= 10.0);
    CHECK(*std::min_element(inst.m.begin(), inst.m.end()) > 0.0);
}

TEST_CASE("instance JSON round trip is bit exact") {
    const ModelSpec strip{DomainSpec::strip(1.0, 1.0), Potential::zero(), Potential::zero(), 1.0, 1.0};
    const auto inst = build_instance(strip, 6, 8);
    const auto back = instance_from_json(Json::parse(instance_to_json(inst).dump()));
    CHECK(back.m == inst.m);
    REQUIRE(back.edges.size() == inst.edges.size());
    for (std::size_t k = 0; k < inst.edges.size(); ++k) {
        CHECK(back.edges[k].i == inst.edges[k].i);
        CHECK(back.edges[k].j == inst.edges[k].j);
        CHECK(back.edges[k].w == inst.edges[k].w);
    }
    CHECK(back.boundary_mask() == inst.boundary_mask());
    CHECK(back.metadata.model_hash == inst.metadata.model_hash);
    CHECK(back.metadata.theta == inst.metadata.theta);
}
