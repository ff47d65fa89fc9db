#include <doctest.h>

#include <cmath>
#include <random>

#include "iwpair/errors.hpp"
#include "iwpair/march.hpp"

using namespace iwpair;

TEST_CASE("march with zero measure keeps constants") {
    DiffusionSpec bm = DiffusionSpec::brownian();
    auto r = march_measure_ode(bm, RadonMeasure::zero(), -2.0, 1.0, 0.0, 2.0);
    for (size_t i = 0; i < r.size(); ++i) {
        CHECK(r.g_value(i) == doctest::Approx(1.0));
        CHECK(r.p_plus_value(i) == doctest::Approx(0.0));
    }
}

TEST_CASE("march reproduces sinh from its initial data") {
    DiffusionSpec bm = DiffusionSpec::brownian(Interval{-1.0, 1.0});
    MarchOptions mo;
    mo.s_step = 1e-4;
    auto r = march_measure_ode(bm, RadonMeasure::lebesgue(1.0), -1.0, -std::sinh(1.0),
                               std::cosh(1.0), 1.0, mo);
    double worst = 0.0;
    for (size_t i = 0; i < r.size(); ++i)
        worst = std::max(worst, std::fabs(r.g_value(i) - std::sinh(r.x[i])));
    CHECK(worst < 1e-8);
    CHECK(r.g_value(r.size() - 1) == doctest::Approx(std::sinh(1.0)).epsilon(1e-8));
}

TEST_CASE("march reproduces exp(sqrt(2) x) for mu = 2 dx") {
    DiffusionSpec bm = DiffusionSpec::brownian();
    auto r = march_measure_ode(bm, RadonMeasure::lebesgue(2.0), 0.0, 1.0, std::sqrt(2.0), 1.0);
    CHECK(r.g_value(r.size() - 1) == doctest::Approx(4.11325038).epsilon(1e-5));
}

TEST_CASE("atom nodes carry exact slope jumps") {
    DiffusionSpec bm = DiffusionSpec::brownian();
    auto mu = RadonMeasure::atoms_only({{1.0, 2.0}});
    auto r = march_measure_ode(bm, mu, 0.0, 1.0, 0.0, 2.0);
    bool found = false;
    for (size_t i = 0; i < r.size(); ++i) {
        if (r.x[i] == 1.0) {
            found = true;
            CHECK(r.p_plus_value(i) - r.p_minus_value(i) ==
                  doctest::Approx(2.0 * r.g_value(i)));
        } else {
            CHECK(r.p_plus[i] == r.p_minus[i]);
        }
    }
    CHECK(found);
    // Pure-atom case is exact: g(2) = 1 + 1*2*(2-1) = 3.
    CHECK(r.g_value(r.size() - 1) == doctest::Approx(3.0));
}

TEST_CASE("march is linear in the initial data") {
    DiffusionSpec bm = DiffusionSpec::brownian();
    RadonMeasure mu([](double x) { return 0.5 + 0.3 * std::cos(x); }, {{0.4, 0.8}});
    std::mt19937 rng(19);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    MarchOptions mo;
    mo.s_step = 5e-3;
    for (int trial = 0; trial < 4; ++trial) {
        double g1 = u(rng), p1 = u(rng), g2 = u(rng), p2 = u(rng);
        double al = u(rng), be = u(rng);
        auto ra = march_measure_ode(bm, mu, -1.0, g1, p1, 1.5, mo);
        auto rb = march_measure_ode(bm, mu, -1.0, g2, p2, 1.5, mo);
        auto rc = march_measure_ode(bm, mu, -1.0, al * g1 + be * g2, al * p1 + be * p2, 1.5, mo);
        for (size_t i = 0; i < rc.size(); i += 97) {
            double want = al * ra.g_value(i) + be * rb.g_value(i);
            CHECK(rc.g_value(i) == doctest::Approx(want).epsilon(1e-9));
        }
    }
}

TEST_CASE("leftward march mirrors rightward") {
    DiffusionSpec bm = DiffusionSpec::brownian();
    auto mu = RadonMeasure::atoms_only({{0.0, 1.0}});
    // March left from 1 with g = 1, slope (left side) -1.
    auto r = march_measure_ode(bm, mu, 1.0, 1.0, -1.0, -1.0);
    // g(x) = 1 + (1 - x) for x in [0, 1]; at 0: g = 2, jump g*mass = 2.
    // Below 0 the slope is -1 - 2 = -3: g(-1) = 2 + 3 = 5.
    CHECK(r.g_value(r.size() - 1) == doctest::Approx(5.0));
    for (size_t i = 0; i < r.size(); ++i)
        if (r.x[i] == 0.0)
            CHECK(r.p_plus_value(i) - r.p_minus_value(i) == doctest::Approx(2.0));
}

TEST_CASE("second-order convergence under step halving") {
    DiffusionSpec bm = DiffusionSpec::brownian();
    auto exact = [](double x) { return std::exp(std::sqrt(2.0) * x); };
    auto run = [&](double h) {
        MarchOptions mo;
        mo.s_step = h;
        auto r = march_measure_ode(bm, RadonMeasure::lebesgue(2.0), 0.0, 1.0, std::sqrt(2.0),
                                   1.0, mo);
        return std::fabs(r.g_value(r.size() - 1) - exact(1.0));
    };
    double e1 = run(4e-3), e2 = run(2e-3);
    CHECK(e1 / e2 > 3.5);
    CHECK(e1 / e2 < 4.5);
}
