#include <doctest.h>

#include <cmath>

#include "iwpair/mc.hpp"
#include "iwpair/solve.hpp"

using namespace iwpair;

namespace {

SimConfig quick(int64_t n = 20000, uint64_t seed = 42) {
    SimConfig c;
    c.n_paths = n;
    c.seed = seed;
    c.step = 1e-3;
    return c;
}

bool within(double target, const EstimateResult& r, double k = 3.0, double slack = 1e-9) {
    return std::fabs(r.mean - target) <= k * r.std_error + slack;
}

TransformedDiffusion soft_border_td(double delta) {
    DiffusionSpec bm = DiffusionSpec::brownian();
    RadonMeasure mu = RadonMeasure::atoms_only({{1.0, 1.0 / delta}});
    PairProblem p{bm, mu, Direction::increasing, 1.0, delta, std::nullopt};
    SolveOptions opts;
    opts.domain_lo = -6.0;
    opts.domain_hi = 6.0;
    auto gr = solve_increasing(p, opts);
    p.direction = Direction::decreasing;
    auto gl = solve_decreasing(p, opts);
    return transform(bm, combine(1.0, 0.0, gr, gl));
}

} // namespace

TEST_CASE("simulate accrual basics") {
    DiffusionSpec bm = DiffusionSpec::brownian();
    SimConfig cfg = quick(200);
    cfg.horizon = 1.0;

    SUBCASE("zero measure accrues nothing") {
        auto ens = simulate(bm, RadonMeasure::zero(), 0.3, cfg);
        for (double a : ens.a) CHECK(a == 0.0);
    }
    SUBCASE("mu = 2 dx accrues elapsed time exactly") {
        auto ens = simulate(bm, RadonMeasure::lebesgue(2.0), 0.0, cfg);
        for (size_t i = 0; i < ens.a.size(); ++i)
            CHECK(ens.a[i] == doctest::Approx(ens.t[i]).epsilon(1e-12));
    }
    SUBCASE("atom accrues the banded local time") {
        // From x = 1 over [0, 1]: E[A] = (1/delta) E[L^1_m] = sqrt(2/pi)/(2 delta).
        double delta = 0.5;
        SimConfig c2 = quick(20000, 7);
        c2.horizon = 1.0;
        c2.step = 2.5e-4;
        auto ens = simulate(bm, RadonMeasure::atoms_only({{1.0, 1.0 / delta}}), 1.0, c2);
        double mean = 0.0;
        for (double a : ens.a) mean += a;
        mean /= ens.a.size();
        double sd = 0.0;
        for (double a : ens.a) sd += (a - mean) * (a - mean);
        sd = std::sqrt(sd / ens.a.size() / ens.a.size());
        double want = std::sqrt(2.0 / M_PI) / (2 * delta);
        CHECK(std::fabs(mean - want) < 3.5 * sd + 0.01);
    }
}

TEST_CASE("mc determinism") {
    DiffusionSpec bm = DiffusionSpec::brownian();
    RadonMeasure mu = RadonMeasure::lebesgue(2.0);
    SimConfig c1 = quick(4000, 99);
    auto r1 = estimate_pair_value(bm, mu, -1.0, 0.0, c1);
    auto r2 = estimate_pair_value(bm, mu, -1.0, 0.0, c1);
    CHECK(r1.mean == r2.mean);
    CHECK(r1.std_error == r2.std_error);
    SimConfig c3 = c1;
    c3.threads = 1;
    auto r3 = estimate_pair_value(bm, mu, -1.0, 0.0, c3);
    CHECK(r1.mean == r3.mean);
    SimConfig c4 = c1;
    c4.seed = 100;
    auto r4 = estimate_pair_value(bm, mu, -1.0, 0.0, c4);
    CHECK(r1.mean != r4.mean);
}

TEST_CASE("pair value estimates") {
    DiffusionSpec bm = DiffusionSpec::brownian();

    SUBCASE("soft border from 0 to the atom is exactly 1") {
        RadonMeasure mu = RadonMeasure::atoms_only({{1.0, 2.0}});
        auto r = estimate_pair_value(bm, mu, 0.0, 1.0, quick(4000));
        CHECK(r.mean == doctest::Approx(1.0));
        CHECK(r.std_error == doctest::Approx(0.0));
    }
    SUBCASE("exp pair: euler") {
        RadonMeasure mu = RadonMeasure::lebesgue(2.0);
        auto r = estimate_pair_value(bm, mu, -1.0, 0.0, quick(40000));
        CHECK(within(std::exp(-std::sqrt(2.0)), r, 3.0, 2e-3));
    }
    SUBCASE("exp pair: walk agrees") {
        RadonMeasure mu = RadonMeasure::lebesgue(2.0);
        SimConfig cfg = quick(40000);
        cfg.scheme = Scheme::scale_random_walk;
        cfg.step = 0.02;
        auto r = estimate_pair_value(bm, mu, -1.0, 0.0, cfg);
        CHECK(within(std::exp(-std::sqrt(2.0)), r, 3.0, 2e-3));
    }
    SUBCASE("zero measure on recurrent BM gives 1") {
        auto r = estimate_pair_value(bm, RadonMeasure::zero(), -1.0, 0.0, quick(2000));
        CHECK(r.mean == doctest::Approx(1.0));
    }
    SUBCASE("three communities from inside the middle band") {
        // g_r(0)/a with c = -1 normalization: target g_r(0)/g_r(-1)... the
        // estimator targets E^x[1 e^{-A_{T_c}}] = g_r(x)/g_r(c) for x < c.
        double delta = 0.5;
        RadonMeasure mu = RadonMeasure::atoms_only({{-1.0, 2.0}, {1.0, 2.0}});
        PairProblem p{bm, mu, Direction::increasing, 0.5, 1.0, std::nullopt};
        auto gr = solve_increasing(p);
        (void)delta;
        SimConfig cfg = quick(30000);
        cfg.step = 2.5e-4;
        auto r = estimate_pair_value(bm, mu, -0.5, 0.5, cfg);
        CHECK(within(gr.value(-0.5) / gr.value(0.5), r, 3.5, 3e-3));
    }
}

TEST_CASE("martingale checks") {
    DiffusionSpec bm = DiffusionSpec::brownian();

    SUBCASE("g = s with zero measure is exactly a martingale") {
        auto r = martingale_check(bm, [](double x) { return x + 5.0; },
                                  RadonMeasure::zero(), 0.3, -1.0, 2.0, quick(20000));
        CHECK(within(0.0, r, 3.0, 1e-3));
    }
    SUBCASE("soft border pair via the walk scheme") {
        double delta = 0.5;
        RadonMeasure mu = RadonMeasure::atoms_only({{1.0, 1.0 / delta}});
        auto g = [delta](double x) { return delta + std::max(x - 1.0, 0.0); };
        SimConfig cfg = quick(60000);
        cfg.scheme = Scheme::scale_random_walk;
        cfg.step = 0.01;
        auto r = martingale_check(bm, g, mu, 1.0, 0.0, 2.0, cfg);
        CHECK(within(0.0, r, 3.0, 2e-3));
    }
    SUBCASE("cosh pair via euler") {
        RadonMeasure mu = RadonMeasure::lebesgue(2.0);
        auto g = [](double x) { return std::cosh(std::sqrt(2.0) * x); };
        auto r = martingale_check(bm, g, mu, 0.0, -0.8, 1.1, quick(40000));
        CHECK(within(0.0, r, 3.0, 2e-3));
    }
}

TEST_CASE("q hitting estimates") {
    auto td = soft_border_td(0.5);
    SUBCASE("upward is certain") {
        SimConfig cfg = quick(4000);
        auto r = estimate_q_hitting(td, 0.0, 2.0, cfg);
        CHECK(within(1.0, r, 3.0, 2e-3));
    }
    SUBCASE("downward matches the scale ratio") {
        SimConfig cfg = quick(30000);
        cfg.horizon = 2e3;
        auto r = estimate_q_hitting(td, 2.0, 0.0, cfg);
        double want = 0.25 / ((0.5 + 1) * (0.5 + 1)); // delta^2/((d+y-1)(d+1-x))
        CHECK(within(want, r, 3.5, 2e-3));
    }
    SUBCASE("x equals y") {
        auto r = estimate_q_hitting(td, 1.3, 1.3, quick(100));
        CHECK(r.mean == 1.0);
    }
}

TEST_CASE("local time at the soft border") {
    auto td = soft_border_td(0.5);
    SimConfig cfg = quick(30000);
    cfg.step = 2.5e-4;
    cfg.horizon = 3e4;
    auto r = estimate_local_time_total(td, 1.0, cfg);
    CHECK(within(1.0, r, 3.5, 5e-3)); // mean 2 delta
    CHECK(std::fabs(r.cv - 1.0) <= 3.5 * r.cv_std_error + 5e-3);
}

TEST_CASE("stopping rule values") {
    DiffusionSpec bm = DiffusionSpec::brownian();
    RadonMeasure mu = RadonMeasure::lebesgue(1.0); // A_t = t/2
    auto reward = [](double x) { return std::max(x, 0.0); };

    SUBCASE("stop immediately returns f(x)") {
        auto r = estimate_stopping_value(bm, mu, reward, {{-1.0, kInf}}, 0.5, quick(100));
        CHECK(r.mean == doctest::Approx(0.5));
        CHECK(r.std_error == 0.0);
    }
    SUBCASE("threshold at 1 from 0 earns about 1/e") {
        auto r = estimate_stopping_value(bm, mu, reward, {{1.0, kInf}}, 0.0, quick(60000));
        CHECK(within(1.0 / M_E, r, 3.5, 2e-3));
    }
    SUBCASE("suboptimal threshold at 2 is visibly worse") {
        auto r = estimate_stopping_value(bm, mu, reward, {{2.0, kInf}}, 0.0, quick(60000));
        double opt = 1.0 / M_E;
        CHECK(r.mean < opt - 3 * r.std_error);
        CHECK(within(2.0 * std::exp(-2.0), r, 3.5, 2e-3));
    }
}

TEST_CASE("halving the step moves estimates by less than two standard errors") {
    DiffusionSpec bm = DiffusionSpec::brownian();
    RadonMeasure mu = RadonMeasure::lebesgue(2.0);
    SimConfig c1 = quick(30000);
    SimConfig c2 = c1;
    c2.step = c1.step / 2;
    auto r1 = estimate_pair_value(bm, mu, -1.0, 0.0, c1);
    auto r2 = estimate_pair_value(bm, mu, -1.0, 0.0, c2);
    CHECK(std::fabs(r1.mean - r2.mean) <
          2.0 * (r1.std_error + r2.std_error) + 1e-3);
}
