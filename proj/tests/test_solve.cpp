#include <doctest.h>

#include <cmath>
#include <random>

#include "iwpair/errors.hpp"
#include "iwpair/solve.hpp"

using namespace iwpair;

namespace {

PairProblem soft_border_problem(double delta, Direction dir) {
    PairProblem p;
    p.spec = DiffusionSpec::brownian();
    p.mu = RadonMeasure::atoms_only({{1.0, 1.0 / delta}});
    p.direction = dir;
    p.c = 1.0;
    p.a = delta;
    return p;
}

PairProblem exp_problem(Direction dir) {
    PairProblem p;
    p.spec = DiffusionSpec::brownian();
    p.mu = RadonMeasure::lebesgue(2.0);
    p.direction = dir;
    p.c = 0.0;
    p.a = 1.0;
    return p;
}

} // namespace

TEST_CASE("soft border increasing solution is exactly piecewise linear") {
    for (double delta : {1.0, 0.5, 0.1}) {
        SolveOptions opts;
        opts.domain_lo = -5.0;
        opts.domain_hi = 5.0;
        auto sol = solve_increasing(soft_border_problem(delta, Direction::increasing), opts);
        double worst = 0.0;
        for (double x = -5.0; x <= 5.0; x += 0.0173) {
            double want = delta + std::max(x - 1.0, 0.0);
            worst = std::max(worst, std::fabs(sol.value(x) - want));
        }
        CHECK(worst < 1e-10);
        CHECK(sol.kappa() == 0.0);
        CHECK(sol.regime() == EndpointRegime::truncated_infinite_scale);
    }
}

TEST_CASE("soft border decreasing solution mirrors") {
    double delta = 0.5;
    SolveOptions opts;
    opts.domain_lo = -5.0;
    opts.domain_hi = 5.0;
    auto sol = solve_decreasing(soft_border_problem(delta, Direction::decreasing), opts);
    double worst = 0.0;
    for (double x = -5.0; x <= 5.0; x += 0.0211) {
        double want = delta + std::max(1.0 - x, 0.0);
        worst = std::max(worst, std::fabs(sol.value(x) - want));
    }
    CHECK(worst < 1e-10);
    CHECK(sol.kappa() == 0.0);
}

TEST_CASE("exponential pair solutions for mu = 2 dx") {
    SolveOptions opts;
    opts.domain_lo = -4.0;
    opts.domain_hi = 4.0;
    auto gr = solve_increasing(exp_problem(Direction::increasing), opts);
    auto gl = solve_decreasing(exp_problem(Direction::decreasing), opts);
    const double rt2 = std::sqrt(2.0);
    CHECK(gr.value(-3.0) == doctest::Approx(0.014369).epsilon(1e-4));
    for (double x = -3.0; x <= 3.0; x += 0.37) {
        CHECK(gr.value(x) == doctest::Approx(std::exp(rt2 * x)).epsilon(1e-6));
        CHECK(gl.value(x) == doctest::Approx(std::exp(-rt2 * x)).epsilon(1e-6));
    }
    CHECK(gr.kappa() == 0.0);
    CHECK(gl.kappa() == 0.0);
}

TEST_CASE("three communities increasing solution") {
    double delta = 0.4;
    PairProblem p;
    p.spec = DiffusionSpec::brownian();
    p.mu = RadonMeasure::atoms_only({{-1.0, 1.0 / delta}, {1.0, 1.0 / delta}});
    p.direction = Direction::increasing;
    p.c = -1.0;
    p.a = delta;
    auto sol = solve_increasing(p);
    CHECK(sol.value(1.0) == doctest::Approx(delta + 2.0).epsilon(1e-12));
    // Right piece from the displayed closed form.
    CHECK(sol.value(2.0) ==
          doctest::Approx(delta - 2.0 / delta + 2.0 * 2 * (delta + 1) / delta).epsilon(1e-12));
}

TEST_CASE("decreasing solution with zero measure is constant") {
    PairProblem p;
    p.spec = DiffusionSpec::brownian();
    p.mu = RadonMeasure::zero();
    p.direction = Direction::decreasing;
    p.c = 0.5;
    p.a = 2.25;
    auto sol = solve_decreasing(p);
    CHECK(sol.value(-0.7) == doctest::Approx(2.25));
    CHECK(sol.value(0.9) == doctest::Approx(2.25));
    CHECK(sol.kappa() == 0.0);
}

TEST_CASE("solver output invariants") {
    SolveOptions opts;
    opts.domain_lo = -3.0;
    opts.domain_hi = 3.0;
    DiffusionSpec bm = DiffusionSpec::brownian();
    RadonMeasure mu([](double x) { return 0.4 + 0.2 * std::sin(3 * x); }, {{0.25, 1.3}});
    PairProblem p{bm, mu, Direction::increasing, 0.0, 1.0, std::nullopt};
    auto sol = solve_increasing(p, opts);

    const auto& g = sol.values();
    const auto& pm = sol.slopes_minus();
    const auto& pp = sol.slopes_plus();
    for (size_t i = 0; i < g.size(); ++i) {
        CHECK(g[i] > 0.0);
        if (i + 1 < g.size()) {
            CHECK(g[i + 1] >= g[i] - 1e-12 * g.back());
            CHECK(pp[i] <= pm[i + 1] + 1e-9);
        }
    }
    // Atom jump bookkeeping.
    for (size_t i = 0; i < g.size(); ++i) {
        if (sol.mesh()[i] == 0.25)
            CHECK(pp[i] - pm[i] == doctest::Approx(1.3 * g[i]).epsilon(1e-12));
        else
            CHECK(pp[i] == pm[i]);
    }
    CHECK(sol.value(0.0) == doctest::Approx(1.0));
}

TEST_CASE("killed kernel route") {
    SUBCASE("zero measure gives the affine term immediately") {
        PairProblem p;
        p.spec = DiffusionSpec::brownian(Interval{0.0, kInf});
        p.mu = RadonMeasure::zero();
        p.direction = Direction::increasing;
        p.c = 1.0;
        p.a = 0.75;
        auto sol = solve_via_killed_kernel(p);
        for (double x : {0.25, 0.5, 1.5, 2.0})
            CHECK(sol.value(x) == doctest::Approx(0.75 * x).epsilon(1e-12));
        CHECK(sol.kappa() == doctest::Approx(0.75));
    }
    SUBCASE("soft border restricted to (0, inf) matches the marching solver") {
        PairProblem p;
        p.spec = DiffusionSpec::brownian(Interval{0.0, kInf});
        p.mu = RadonMeasure::atoms_only({{1.0, 2.0}});
        p.direction = Direction::increasing;
        p.c = 1.0;
        p.a = 0.5;
        SolveOptions opts;
        opts.domain_hi = 4.0;
        auto a = solve_via_killed_kernel(p, opts);
        auto b = solve_increasing(p, opts);
        for (double x = 0.05; x < 4.0; x += 0.173)
            CHECK(a.value(x) == doctest::Approx(b.value(x)).epsilon(1e-8));
        CHECK(a.kappa() == doctest::Approx(b.kappa()).epsilon(1e-8));
    }
    SUBCASE("BM on (0, inf) with mu = 2 dx gives sinh") {
        PairProblem p;
        p.spec = DiffusionSpec::brownian(Interval{0.0, kInf});
        p.mu = RadonMeasure::lebesgue(2.0);
        p.direction = Direction::increasing;
        p.c = 1.0;
        p.a = 1.0;
        SolveOptions opts;
        opts.domain_hi = 3.0;
        opts.s_step = 2e-4;
        auto sol = solve_via_killed_kernel(p, opts);
        const double rt2 = std::sqrt(2.0);
        for (double x : {0.3, 0.9, 1.7, 2.5})
            CHECK(sol.value(x) ==
                  doctest::Approx(std::sinh(rt2 * x) / std::sinh(rt2)).epsilon(1e-6));
        // Cross-method agreement.
        auto ref = solve_increasing(p, opts);
        for (double x : {0.3, 0.9, 1.7, 2.5})
            CHECK(sol.value(x) == doctest::Approx(ref.value(x)).epsilon(1e-7));
    }
    SUBCASE("decreasing mirror on (0, 1) with finite right scale") {
        PairProblem p;
        p.spec = DiffusionSpec::brownian(Interval{0.0, 1.0});
        p.mu = RadonMeasure::lebesgue(2.0);
        p.direction = Direction::decreasing;
        p.c = 0.5;
        p.a = 1.0;
        SolveOptions opts;
        opts.s_step = 2e-4;
        opts.domain_lo = 0.01;
        auto sol = solve_via_killed_kernel(p, opts);
        auto ref = solve_decreasing(p, opts);
        // g_ell(x) = a sinh(sqrt2 (1-x)) / sinh(sqrt2 * 0.5)
        const double rt2 = std::sqrt(2.0);
        for (double x : {0.1, 0.4, 0.7, 0.95}) {
            double want = std::sinh(rt2 * (1 - x)) / std::sinh(rt2 * 0.5);
            CHECK(sol.value(x) == doctest::Approx(want).epsilon(1e-6));
            CHECK(sol.value(x) == doctest::Approx(ref.value(x)).epsilon(1e-7));
        }
    }
}

TEST_CASE("residual") {
    SUBCASE("exact piecewise-linear solution has tiny residual") {
        auto p = soft_border_problem(0.5, Direction::increasing);
        SolveOptions opts;
        opts.domain_lo = -4.0;
        opts.domain_hi = 4.0;
        auto sol = solve_increasing(p, opts);
        std::vector<double> probes;
        for (double x = -3.5; x <= 3.5; x += 0.31) probes.push_back(x);
        CHECK(residual(sol, probes, p.mu) < 1e-12);
    }
    SUBCASE("marched exponential: residual O(h^2) and under 1e-6") {
        auto p = exp_problem(Direction::increasing);
        auto run = [&](double h, double lo, double hi) {
            SolveOptions opts;
            opts.domain_lo = lo - 0.1;
            opts.domain_hi = hi + 0.1;
            opts.s_step = h;
            auto sol = solve_increasing(p, opts);
            std::vector<double> probes;
            for (double x = lo; x <= hi; x += (hi - lo) / 31.0) probes.push_back(x);
            return residual(sol, probes, p.mu);
        };
        // Near the anchor the default step already meets the budget.
        CHECK(run(1e-3, -0.5, 0.5) < 1e-6);
        // Wider probe window: second-order decay under refinement.
        double r1 = run(1e-3, -1.9, 1.9);
        double r2 = run(5e-4, -1.9, 1.9);
        CHECK(r1 / r2 > 3.0);
        CHECK(r1 / r2 < 5.0);
        CHECK(run(2.5e-4, -1.9, 1.9) < 1e-6);
    }
    SUBCASE("perturbation is detected") {
        auto p = soft_border_problem(0.5, Direction::increasing);
        SolveOptions opts;
        opts.domain_lo = -4.0;
        opts.domain_hi = 4.0;
        auto sol = solve_increasing(p, opts);
        auto g = sol.values();
        size_t mid = g.size() / 2;
        g[mid] += 0.01;
        PairSolution bad(sol.mesh(), sol.mesh_s(), g, sol.slopes_minus(), sol.slopes_plus(),
                         sol.kappa(), sol.direction(), sol.anchor_c(), sol.anchor_a(),
                         sol.scale(), sol.interval(), sol.regime(), sol.measure_fingerprint());
        CHECK(residual(bad, {sol.mesh()[mid]}, p.mu) >= 0.009);
    }
}

TEST_CASE("exit expectation identity") {
    SUBCASE("zero measure reduces to s-affine interpolation") {
        PairProblem p;
        p.spec = DiffusionSpec::brownian();
        p.mu = RadonMeasure::zero();
        p.direction = Direction::increasing;
        p.c = 0.0;
        p.a = 1.0;
        auto sol = solve_increasing(p);
        auto ec = exit_expectation_check(sol, p.mu, -0.5, 0.2, 0.9);
        CHECK(ec.lhs == doctest::Approx(ec.rhs).epsilon(1e-12));
    }
    SUBCASE("soft border atom arithmetic") {
        auto p = soft_border_problem(0.5, Direction::increasing);
        SolveOptions opts;
        opts.domain_lo = -3.0;
        opts.domain_hi = 3.0;
        auto sol = solve_increasing(p, opts);
        auto ec = exit_expectation_check(sol, p.mu, 0.0, 1.0, 2.0);
        CHECK(ec.lhs == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(ec.rhs == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("sign-changing sinh solution satisfies the identity") {
        DiffusionSpec bm = DiffusionSpec::brownian(Interval{-1.0, 1.0});
        RadonMeasure mu = RadonMeasure::lebesgue(1.0);
        MarchOptions mo;
        mo.s_step = 1e-4;
        auto mr = march_measure_ode(bm, mu, -1.0, -std::sinh(1.0), std::cosh(1.0), 1.0, mo);
        std::vector<double> g(mr.size()), pm(mr.size()), pp(mr.size());
        for (size_t i = 0; i < mr.size(); ++i) {
            g[i] = mr.g_value(i);
            pm[i] = mr.p_minus_value(i);
            pp[i] = mr.p_plus_value(i);
        }
        PairSolution sol(mr.x, mr.s, g, pm, pp, std::cosh(1.0), Direction::increasing, 0.0,
                         1e-300, bm.scale, bm.interval, EndpointRegime::boundary_march,
                         mu.fingerprint(bm.interval));
        auto ec = exit_expectation_check(sol, mu, -0.5, 0.0, 0.5);
        CHECK(ec.lhs == doctest::Approx(ec.rhs).epsilon(1e-8));
    }
}

TEST_CASE("boundary slope identity") {
    SUBCASE("affine in s with zero measure recovers the slope") {
        PairProblem p;
        p.spec = DiffusionSpec::brownian(Interval{0.0, kInf});
        p.mu = RadonMeasure::zero();
        p.direction = Direction::increasing;
        p.c = 1.0;
        p.a = 2.0;
        auto sol = solve_increasing(p);
        CHECK(kappa_from_boundary_identity(sol, p.mu, 0.7) == doctest::Approx(2.0));
        CHECK(sol.kappa() == doctest::Approx(2.0));
    }
    SUBCASE("sinh pair on the half line has kappa = sqrt(2)") {
        PairProblem p;
        p.spec = DiffusionSpec::brownian(Interval{0.0, kInf});
        p.mu = RadonMeasure::lebesgue(2.0);
        p.direction = Direction::increasing;
        p.c = 1.0;
        p.a = std::sinh(std::sqrt(2.0));
        SolveOptions opts;
        opts.domain_hi = 3.0;
        opts.s_step = 5e-5;
        auto sol = solve_increasing(p, opts);
        double k1 = kappa_from_boundary_identity(sol, p.mu, 0.8);
        double k2 = kappa_from_boundary_identity(sol, p.mu, 1.9);
        CHECK(k1 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-5));
        CHECK(k1 == doctest::Approx(k2).epsilon(1e-8));
        CHECK(sol.kappa() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-5));
    }
    SUBCASE("truncated regimes raise the kappa-zero diagnostic") {
        auto p = soft_border_problem(0.5, Direction::increasing);
        auto sol = solve_increasing(p);
        CHECK_THROWS_AS(kappa_from_boundary_identity(sol, p.mu, 0.0), KappaZeroRegime);
    }
    SUBCASE("terminus identity is b-independent on truncated solutions") {
        auto p = exp_problem(Direction::increasing);
        SolveOptions opts;
        opts.domain_lo = -2.0;
        opts.domain_hi = 2.0;
        opts.s_step = 1e-4;
        auto sol = solve_increasing(p, opts);
        double p1 = terminus_slope_identity(sol, p.mu, 0.5);
        double p2 = terminus_slope_identity(sol, p.mu, 1.5);
        CHECK(p1 == doctest::Approx(p2).epsilon(1e-7));
        CHECK(p1 == doctest::Approx(sol.slopes_plus().front()).epsilon(1e-5));
    }
}

TEST_CASE("combine and fit_decomposition") {
    double delta = 0.5;
    SolveOptions opts;
    opts.domain_lo = -4.0;
    opts.domain_hi = 4.0;
    auto gr = solve_increasing(soft_border_problem(delta, Direction::increasing), opts);
    auto gl = solve_decreasing(soft_border_problem(delta, Direction::decreasing), opts);

    SUBCASE("lambda1 = 0 returns the scaled decreasing solution") {
        auto g = combine(0.0, 2.0, gr, gl);
        for (double x : {-1.0, 0.5, 2.0})
            CHECK(g.value(x) == doctest::Approx(2.0 * gl.value(x)));
    }
    SUBCASE("unit combination gives 2 delta + |x-1|") {
        auto g = combine(1.0, 1.0, gr, gl);
        for (double x = -3.0; x <= 3.0; x += 0.237)
            CHECK(g.value(x) == doctest::Approx(2 * delta + std::fabs(x - 1.0)).epsilon(1e-12));
    }
    SUBCASE("fingerprint mismatch is rejected") {
        auto other = solve_decreasing(soft_border_problem(0.25, Direction::decreasing), opts);
        CHECK_THROWS_AS(combine(1.0, 1.0, gr, other), ValidationError);
    }
    SUBCASE("fit recovers the identity decomposition") {
        auto d = fit_decomposition(-0.5, gr.value(-0.5), 2.0, gr.value(2.0), gr, gl);
        CHECK(d.lambda1 == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(d.lambda2 == doctest::Approx(0.0).epsilon(1e-10));
    }
    SUBCASE("fit recovers the (1,1) soft-border sum") {
        auto g = [&](double x) { return 2 * delta + std::fabs(x - 1.0); };
        auto d = fit_decomposition(-0.5, g(-0.5), 2.0, g(2.0), gr, gl);
        CHECK(d.lambda1 == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(d.lambda2 == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("cosh decomposition of the exponential pair") {
    SolveOptions opts;
    opts.domain_lo = -3.0;
    opts.domain_hi = 3.0;
    auto gr = solve_increasing(exp_problem(Direction::increasing), opts);
    auto gl = solve_decreasing(exp_problem(Direction::decreasing), opts);
    const double rt2 = std::sqrt(2.0);
    auto cosh_g = [&](double x) { return std::cosh(rt2 * x); };
    auto d = fit_decomposition(-1.0, cosh_g(-1.0), 1.0, cosh_g(1.0), gr, gl);
    CHECK(d.lambda1 == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(d.lambda2 == doctest::Approx(0.5).epsilon(1e-5));

    // Three-communities mixture is constant between the atoms.
    double delta = 0.6;
    PairProblem tc;
    tc.spec = DiffusionSpec::brownian();
    tc.mu = RadonMeasure::atoms_only({{-1.0, 1.0 / delta}, {1.0, 1.0 / delta}});
    tc.direction = Direction::increasing;
    tc.c = -1.0;
    tc.a = delta;
    auto tgr = solve_increasing(tc);
    tc.direction = Direction::decreasing;
    auto tgl = solve_decreasing(tc);
    auto mix = combine(delta / (delta + 2.0), 1.0, tgr, tgl);
    double v0 = mix.value(0.0);
    for (double x = -0.95; x <= 0.95; x += 0.19)
        CHECK(mix.value(x) == doctest::Approx(v0).epsilon(1e-12));
    CHECK(v0 == doctest::Approx(2 * delta * (delta + 1) / (delta + 2)).epsilon(1e-12));
}

TEST_CASE("two truncation schedules agree") {
    auto p = exp_problem(Direction::increasing);
    SolveOptions o2;
    o2.domain_lo = -2.0;
    o2.domain_hi = 2.0;
    SolveOptions o3 = o2;
    o3.trunc_ratio = 3.0;
    auto s2 = solve_increasing(p, o2);
    auto s3 = solve_increasing(p, o3);
    double worst = 0.0;
    for (double x = -2.0; x <= 2.0; x += 0.1)
        worst = std::max(worst, std::fabs(s2.value(x) - s3.value(x)) /
                                    std::max(1e-300, std::fabs(s2.value(x))));
    CHECK(worst < 10 * o2.trunc_tol);
}

TEST_CASE("solver input validation") {
    PairProblem p;
    p.spec = DiffusionSpec::brownian(Interval{0.0, 1.0});
    p.mu = RadonMeasure::zero();
    p.direction = Direction::increasing;
    p.c = 2.0; // outside
    p.a = 1.0;
    CHECK_THROWS_AS(solve_increasing(p), ValidationError);
    p.c = 0.5;
    p.a = -1.0;
    CHECK_THROWS_AS(solve_increasing(p), ValidationError);
    p.a = 1.0;
    p.direction = Direction::decreasing;
    CHECK_THROWS_AS(solve_increasing(p), ValidationError);
}
