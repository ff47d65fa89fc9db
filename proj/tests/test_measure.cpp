#include <doctest.h>

#include <cmath>
#include <random>

#include "iwpair/errors.hpp"
#include "iwpair/measure.hpp"
#include "iwpair/quadrature.hpp"

using namespace iwpair;

TEST_CASE("adaptive simpson basics") {
    CHECK(adaptive_simpson([](double x) { return x * x; }, 0, 1) == doctest::Approx(1.0 / 3));
    CHECK(adaptive_simpson([](double x) { return std::exp(x); }, 0, 2) ==
          doctest::Approx(std::exp(2.0) - 1).epsilon(1e-12));
    CHECK(adaptive_simpson([](double) { return 1.0; }, 1, 1) == 0.0);
}

TEST_CASE("improper integral classification") {
    // Convergent tail toward +inf.
    auto r1 = improper_toward_boundary([](double x) { return std::exp(-x); }, 0.0, kInf);
    CHECK(r1.finite);
    CHECK(r1.value == doctest::Approx(1.0).epsilon(1e-8));
    // Divergent tail.
    auto r2 = improper_toward_boundary([](double x) { return 1.0 / (1.0 + std::fabs(x)); },
                                       0.0, kInf);
    CHECK_FALSE(r2.finite);
    // Integrable singularity at a finite endpoint.
    auto r3 = improper_toward_boundary([](double x) { return 1.0 / std::sqrt(x); }, 1.0, 0.0);
    CHECK(r3.finite);
    CHECK(r3.value == doctest::Approx(2.0).epsilon(1e-7));
    // Non-integrable singularity.
    auto r4 = improper_toward_boundary([](double x) { return 1.0 / x; }, 1.0, 0.0);
    CHECK_FALSE(r4.finite);
}

TEST_CASE("measure_integrate atom conventions") {
    // atoms only: mu = 2*eps_1, w = x^2 on (0,2) -> 2
    auto mu = RadonMeasure::atoms_only({{1.0, 2.0}});
    CHECK(measure_integrate(mu, [](double x) { return x * x; }, 0, 2) == doctest::Approx(2.0));
    // default bracket (lo, hi]: atom at lo excluded, at hi included
    CHECK(measure_integrate(mu, [](double) { return 1.0; }, 1, 2) == doctest::Approx(0.0));
    CHECK(measure_integrate(mu, [](double) { return 1.0; }, 0, 1) == doctest::Approx(2.0));
}

TEST_CASE("measure_integrate density and mixed") {
    auto lebesgue = RadonMeasure::lebesgue(1.0);
    CHECK(measure_integrate(lebesgue, [](double) { return 1.0; }, 0, 1) == doctest::Approx(1.0));

    // density x with an atom (1/2, 1), w(x) = x on (0,1): 1/3 + 1/2 = 5/6
    RadonMeasure mu([](double x) { return x; }, {{0.5, 1.0}});
    CHECK(measure_integrate(mu, [](double x) { return x; }, 0, 1) ==
          doctest::Approx(5.0 / 6).epsilon(1e-10));
}

TEST_CASE("measure_integrate additive over adjacent intervals") {
    RadonMeasure mu([](double x) { return 1.0 + std::sin(x) * std::sin(x); },
                    {{0.3, 0.7}, {1.1, 0.2}});
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    auto w = [](double x) { return std::cos(x) + 2.0; };
    for (int i = 0; i < 20; ++i) {
        double a = u(rng), b = u(rng), m = u(rng);
        if (a > b) std::swap(a, b);
        double mid = a + (b - a) * std::fabs(std::sin(m));
        double whole = measure_integrate(mu, w, a, b);
        double split = measure_integrate(mu, w, a, mid) + measure_integrate(mu, w, mid, b);
        CHECK(whole == doctest::Approx(split).epsilon(1e-9));
    }
}

TEST_CASE("measure validation") {
    Interval iv{0.0, 2.0};
    CHECK_THROWS_AS(RadonMeasure::atoms_only({{1.0, -2.0}}).validate(iv), ValidationError);
    CHECK_THROWS_AS(RadonMeasure::atoms_only({{5.0, 1.0}}).validate(iv), ValidationError);
    CHECK_THROWS_AS(RadonMeasure::atoms_only({{1.0, 1.0}, {1.0, 2.0}}).validate(iv),
                    ValidationError);
    CHECK_THROWS_AS(RadonMeasure([](double) { return -1.0; }, {}).validate(iv),
                    ValidationError);
    RadonMeasure ok([](double x) { return x * x; }, {{1.0, 0.5}});
    CHECK_NOTHROW(ok.validate(iv));
}

TEST_CASE("fingerprint detects distinct measures") {
    Interval iv{-2.0, 2.0};
    RadonMeasure a = RadonMeasure::atoms_only({{1.0, 2.0}});
    RadonMeasure b = RadonMeasure::atoms_only({{1.0, 2.0}});
    RadonMeasure c = RadonMeasure::atoms_only({{1.0, 2.5}});
    CHECK(a.fingerprint(iv) == b.fingerprint(iv));
    CHECK(a.fingerprint(iv) != c.fingerprint(iv));
}
