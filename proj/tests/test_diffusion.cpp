#include <doctest.h>

#include <cmath>
#include <random>

#include "iwpair/diffusion.hpp"
#include "iwpair/errors.hpp"

using namespace iwpair;

TEST_CASE("brownian spec validates") {
    DiffusionSpec bm = DiffusionSpec::brownian();
    CHECK_NOTHROW(bm.validate());
    CHECK(bm.recurrent());
    CHECK(bm.speed.density(0.3) == doctest::Approx(2.0));
}

TEST_CASE("from_sde reproduces scale and speed of an OU-type diffusion") {
    auto spec = DiffusionSpec::from_sde([](double x) { return -x; }, [](double) { return 1.0; },
                                        Interval{-3.0, 3.0});
    CHECK_NOTHROW(spec.validate());
    // s'(x) = exp(x^2) up to normalization at 0.
    CHECK(spec.scale.derivative(1.0) / spec.scale.derivative(0.0) ==
          doctest::Approx(std::exp(1.0)).epsilon(1e-7));
}

TEST_CASE("classify_boundaries") {
    SUBCASE("recurrent BM with positive measure") {
        DiffusionSpec bm = DiffusionSpec::brownian();
        auto bc = classify_boundaries(bm, RadonMeasure::atoms_only({{1.0, 2.0}}));
        CHECK(bc.recurrent);
        CHECK_FALSE(bc.scale_finite_left);
        CHECK(bc.caf_left == CafVerdict::not_applicable);
        CHECK(bc.caf_right == CafVerdict::not_applicable);
    }
    SUBCASE("atom criterion at a finite boundary") {
        DiffusionSpec half = DiffusionSpec::brownian(Interval{0.0, kInf});
        auto bc = classify_boundaries(half, RadonMeasure::atoms_only({{1.0, 1.0}}));
        CHECK_FALSE(bc.recurrent);
        CHECK(bc.scale_finite_left);
        CHECK(bc.caf_left == CafVerdict::finite);
        CHECK(bc.caf_right == CafVerdict::not_applicable);
    }
    SUBCASE("trivial measure is finite everywhere") {
        DiffusionSpec unit = DiffusionSpec::brownian(Interval{0.0, 1.0});
        auto bc = classify_boundaries(unit, RadonMeasure::zero());
        CHECK_FALSE(bc.recurrent);
        CHECK(bc.scale_finite_left);
        CHECK(bc.scale_finite_right);
        CHECK(bc.caf_left == CafVerdict::finite);
        CHECK(bc.caf_right == CafVerdict::finite);
    }
    SUBCASE("divergent density criterion") {
        DiffusionSpec half = DiffusionSpec::brownian(Interval{0.0, kInf});
        RadonMeasure mu([](double x) { return 1.0 / (x * x); }, {});
        auto bc = classify_boundaries(half, mu);
        CHECK(bc.caf_left == CafVerdict::infinite);
    }
    SUBCASE("unit interval BM is transient") {
        DiffusionSpec unit = DiffusionSpec::brownian(Interval{0.0, 1.0});
        auto bc = classify_boundaries(unit, RadonMeasure::lebesgue(1.0));
        CHECK_FALSE(bc.recurrent);
        CHECK(bc.scale_finite_left);
        CHECK(bc.scale_finite_right);
    }
}

TEST_CASE("killed potential density") {
    DiffusionSpec unit = DiffusionSpec::brownian(Interval{0.0, 1.0});
    CHECK(killed_potential_density(unit, 0, 1, 0.25, 0.75) == doctest::Approx(0.0625));
    CHECK(killed_potential_density(unit, 0, 1, 0.0, 0.5) == doctest::Approx(0.0));
    CHECK(killed_potential_density(unit, 0, 1, 1.0, 0.5) == doctest::Approx(0.0));
    CHECK_THROWS_AS(killed_potential_density(unit, 0.2, 0.8, 0.1, 0.5), ValidationError);

    SUBCASE("symmetry in (x, y)") {
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> u(0.01, 0.99);
        for (int i = 0; i < 40; ++i) {
            double x = u(rng), y = u(rng);
            CHECK(killed_potential_density(unit, 0, 1, x, y) ==
                  doctest::Approx(killed_potential_density(unit, 0, 1, y, x)));
        }
    }
    SUBCASE("piecewise affine in s on either side of y") {
        double y = 0.6;
        auto u1 = killed_potential_density(unit, 0, 1, 0.1, y);
        auto u2 = killed_potential_density(unit, 0, 1, 0.2, y);
        auto u3 = killed_potential_density(unit, 0, 1, 0.3, y);
        CHECK(u2 - u1 == doctest::Approx(u3 - u2)); // equal increments, affine
    }
    SUBCASE("one-sided limit at an infinite-scale end") {
        DiffusionSpec half = DiffusionSpec::brownian(Interval{-kInf, 2.0});
        // u(b; x, y) = s(b) - s(x v y) when s(l+) = -inf
        CHECK(killed_potential_density(half, -kInf, 2.0, 0.0, 1.0) == doctest::Approx(1.0));
    }
}

TEST_CASE("caf_potential") {
    DiffusionSpec unit = DiffusionSpec::brownian(Interval{0.0, 1.0});
    SUBCASE("zero integrand") {
        CHECK(caf_potential(unit, RadonMeasure::lebesgue(1.0), [](double) { return 0.0; }, 0.5) ==
              doctest::Approx(0.0));
    }
    SUBCASE("atom at the midpoint") {
        auto mu = RadonMeasure::atoms_only({{0.5, 1.0}});
        CHECK(caf_potential(unit, mu, [](double) { return 1.0; }, 0.5) == doctest::Approx(0.25));
    }
    SUBCASE("triangular kernel against Lebesgue") {
        CHECK(caf_potential(unit, RadonMeasure::lebesgue(1.0), [](double) { return 1.0; }, 0.5) ==
              doctest::Approx(0.125).epsilon(1e-9));
    }
    SUBCASE("recurrent spec without killing is an error") {
        DiffusionSpec bm = DiffusionSpec::brownian();
        CHECK_THROWS_AS(
            caf_potential(bm, RadonMeasure::lebesgue(1.0), [](double) { return 1.0; }, 0.0),
            ValidationError);
        // Supplying a killing window makes it well-posed again.
        CHECK(caf_potential(bm, RadonMeasure::atoms_only({{0.5, 1.0}}),
                            [](double) { return 1.0; }, 0.5, 0.0, 1.0) == doctest::Approx(0.25));
    }
}
