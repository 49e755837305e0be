#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "flowinvert/flow_model.hpp"
#include "flowinvert/poisson_forward.hpp"
#include "test_helpers.hpp"

using namespace flowinvert;

namespace {

DiscretePmf geometric_pmf_from_zero(double r, std::int64_t cap) {
    // pmf(l) = (1-r) r^l for l = 0..cap; mass beyond goes to tail_mass.
    DiscretePmf pmf;
    pmf.support_start = 0;
    for (std::int64_t l = 0; l <= cap; ++l) {
        pmf.probs.push_back((1.0 - r) * std::pow(r, static_cast<double>(l)));
    }
    pmf.tail_mass = std::pow(r, static_cast<double>(cap) + 1.0);
    return pmf;
}

}  // namespace

TEST_CASE("mixture of a point mass is the exact Poisson law") {
    const MixtureResult mix = mixture_q(point_mass(100), 0.01, 30);
    CHECK(mix.truncation_error == 0.0);
    CHECK(mix.probs.at(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    for (std::int64_t j = 0; j <= 30; ++j) {
        CHECK(std::fabs(mix.probs.at(j) - testutil::poisson_pmf(1.0, j)) < 1e-12);
    }
}

TEST_CASE("mixture: point mass at 1 with p = 1 is Poisson(1)") {
    const MixtureResult mix = mixture_q(point_mass(1), 1.0, 20);
    for (std::int64_t j = 0; j <= 20; ++j) {
        CHECK(std::fabs(mix.probs.at(j) - testutil::poisson_pmf(1.0, j)) < 1e-12);
    }
}

TEST_CASE("mixture of a geometric law matches the closed form at j = 1") {
    const DiscretePmf geo = geometric_pmf_from_zero(0.5, 2000);
    const MixtureResult mix = mixture_q(geo, 0.1, 8);
    // Oracle 1: brute-force summation. Oracle 2: p(1-r)q/(1-q)^2 with q = r e^{-p}.
    const double direct = testutil::geom_poisson_direct(0.5, 0.1, 1);
    const double q = 0.5 * std::exp(-0.1);
    const double closed = 0.1 * 0.5 * q / ((1.0 - q) * (1.0 - q));
    CHECK(mix.probs.at(1) == doctest::Approx(direct).epsilon(1e-9));
    CHECK(mix.probs.at(1) == doctest::Approx(closed).epsilon(1e-9));
    CHECK(closed == doctest::Approx(0.07544202886).epsilon(1e-9));
}

TEST_CASE("mixture mass accounting") {
    const DiscretePmf pmf = testutil::paper_model().to_pmf(100000);
    const MixtureResult mix = mixture_q(pmf, 0.01, 60);
    CHECK(mix.truncation_error == doctest::Approx(pmf.tail_mass));
    const double covered = mix.probs.explicit_sum() + mix.probs.tail_mass + mix.truncation_error;
    CHECK(covered >= 1.0 - 1e-9);
    mix.probs.validate(1e-9);
    CHECK_THROWS_AS(mixture_q(pmf, 0.0, 10), InvalidArgumentError);
    DiscretePmf broken = pmf;
    broken.tail_mass += 0.5;
    CHECK_THROWS_AS(mixture_q(broken, 0.01, 10), InvalidArgumentError);
}

TEST_CASE("mixture stays finite for huge supports and tiny rates") {
    const MixtureResult mix = mixture_q(point_mass(100'000'000), 1e-6, 200);
    for (std::int64_t j = 0; j <= 200; ++j) {
        CHECK(std::isfinite(mix.probs.at(j)));
        CHECK(std::fabs(mix.probs.at(j) - testutil::poisson_pmf(100.0, j)) < 1e-12);
    }
}

TEST_CASE("forward_sampled_pmf: point mass conditioned on being sampled") {
    const double nu = 1.0 - std::exp(-1.0);
    const DiscretePmf pmf = forward_sampled_pmf(point_mass(100), 0.01, nu, 40);
    CHECK(pmf.support_start == 1);
    for (std::int64_t j = 1; j <= 40; ++j) {
        CHECK(pmf.at(j) == doctest::Approx(testutil::poisson_pmf(1.0, j) / nu).epsilon(1e-12));
    }
    CHECK(pmf.explicit_sum() + pmf.tail_mass == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(forward_sampled_pmf(point_mass(100), 0.01, 0.0, 10), InvalidArgumentError);
}

TEST_CASE("forward_sampled_pmf: pointwise tail convergence for a pure Pareto") {
    // P(vt = j) ~ P(v = j/p)/p as j grows; the ratio approaches 1 from above.
    const FlowSizeModel model = pure_pareto_model(1, 1.81);
    const DiscretePmf v_pmf = model.to_pmf(1'000'000);
    const double p = 0.01;
    const MixtureResult mix = mixture_q(v_pmf, p, 121);
    const double nu = 1.0 - mix.probs.at(0);
    auto ratio_at = [&](std::int64_t j) {
        const double lhs = mix.probs.at(j) / nu;
        const double rhs = model.pmf(j * 100) / (p * nu);
        return lhs / rhs;
    };
    const double r30 = ratio_at(30);
    const double r60 = ratio_at(60);
    const double r120 = ratio_at(120);
    CHECK(r30 > r60);
    CHECK(r60 > r120);
    CHECK(std::fabs(r120 - 1.0) <= 0.03);
}

TEST_CASE("geom_poisson_sum: closed forms against brute-force summation") {
    const double s0 = geom_poisson_sum(0.5, 0.1, 0);
    const double s1 = geom_poisson_sum(0.5, 0.1, 1);
    const double s2 = geom_poisson_sum(0.5, 0.1, 2);
    CHECK(s0 == doctest::Approx(testutil::geom_poisson_direct(0.5, 0.1, 0)).epsilon(1e-10));
    CHECK(s1 == doctest::Approx(testutil::geom_poisson_direct(0.5, 0.1, 1)).epsilon(1e-10));
    CHECK(s2 == doctest::Approx(testutil::geom_poisson_direct(0.5, 0.1, 2)).epsilon(1e-10));
    // Frozen oracle values (brute force to l = 1e6).
    CHECK(s0 == doctest::Approx(0.4131064339).epsilon(1e-9));
    CHECK(s1 == doctest::Approx(0.0754420289).epsilon(1e-9));
    CHECK(s2 == doctest::Approx(0.0100052187).epsilon(1e-8));
}

TEST_CASE("geom_poisson_sum: randomized closed-form vs oracle agreement") {
    Rng rng(77);
    for (int trial = 0; trial < 25; ++trial) {
        const double r = 0.05 + 0.94 * rng.uniform();
        const double p = 0.001 + 0.999 * rng.uniform();
        for (std::int64_t j = 0; j <= 2; ++j) {
            const double closed = geom_poisson_sum(r, p, j);
            const double direct = testutil::geom_poisson_direct(r, p, j);
            CHECK(std::fabs(closed - direct) <= 1e-10 * std::max(direct, 1e-300));
        }
    }
}

TEST_CASE("geom_poisson_sum: j >= 3 path agrees with the oracle and the mixture") {
    for (std::int64_t j : {3, 5, 9}) {
        const double lib = geom_poisson_sum(0.8, 0.05, j);
        const double direct = testutil::geom_poisson_direct(0.8, 0.05, j);
        CHECK(lib == doctest::Approx(direct).epsilon(1e-10));
    }
    // Third route: the mixture of a geometric law evaluated by mixture_q.
    const DiscretePmf geo = geometric_pmf_from_zero(0.8, 4000);
    const MixtureResult mix = mixture_q(geo, 0.05, 6);
    CHECK(mix.probs.at(5) == doctest::Approx(geom_poisson_sum(0.8, 0.05, 5)).epsilon(1e-9));
    CHECK_THROWS_AS(geom_poisson_sum(1.0, 0.1, 0), InvalidArgumentError);
    CHECK_THROWS_AS(geom_poisson_sum(0.5, 0.0, 0), InvalidArgumentError);
}

TEST_CASE("tv_distance: identity, disjoint supports, Le Cam classic") {
    const DiscretePmf d = geometric_pmf_from_zero(0.3, 100);
    CHECK(tv_distance(d, d) == doctest::Approx(0.0));
    CHECK(tv_distance(point_mass(0), point_mass(1)) == doctest::Approx(1.0));

    DiscretePmf bin;
    bin.support_start = 0;
    for (std::int64_t j = 0; j <= 100; ++j) bin.probs.push_back(testutil::binomial_pmf(100, 0.01, j));
    bin.tail_mass = 0.0;
    DiscretePmf poi;
    poi.support_start = 0;
    for (std::int64_t j = 0; j <= 150; ++j) poi.probs.push_back(testutil::poisson_pmf(1.0, j));
    poi.tail_mass = std::max(0.0, 1.0 - poi.explicit_sum());
    const double tv = tv_distance(bin, poi);
    CHECK(tv <= 0.01);                                // np^2 bound
    CHECK(tv == doctest::Approx(0.00277529).epsilon(1e-3));  // exact enumeration
}

TEST_CASE("tv_distance: metric properties on random triples") {
    Rng rng(101);
    auto random_pmf = [&]() {
        DiscretePmf d;
        d.support_start = static_cast<std::int64_t>(rng.below(3));
        double sum = 0.0;
        for (int i = 0; i < 12; ++i) {
            d.probs.push_back(rng.uniform());
            sum += d.probs.back();
        }
        const double tail = rng.uniform();
        for (double& x : d.probs) x /= (sum + tail);
        d.tail_mass = tail / (sum + tail);
        return d;
    };
    for (int trial = 0; trial < 200; ++trial) {
        const DiscretePmf a = random_pmf();
        const DiscretePmf b = random_pmf();
        const DiscretePmf c = random_pmf();
        const double ab = tv_distance(a, b);
        CHECK(ab == doctest::Approx(tv_distance(b, a)));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0 + 1e-12);
        CHECK(ab <= tv_distance(a, c) + tv_distance(c, b) + 1e-12);
    }
}

TEST_CASE("lecam bounds") {
    const std::vector<std::int64_t> ones(100, 1);
    CHECK(lecam_flow_bound(1, 100, 0.1) == doctest::Approx(0.1 / 100.0));
    CHECK(lecam_bound(ones, 100, 0.1) == doctest::Approx(0.1));
    CHECK(lecam_flow_bound(100, 10000, 0.01) == doctest::Approx(0.01));
    const std::vector<std::int64_t> one_flow{100};
    CHECK_THROWS_AS(lecam_bound(one_flow, 0, 0.01), InvalidArgumentError);
    CHECK_THROWS_AS(lecam_bound(one_flow, 50, 0.01), InvalidArgumentError);
}
