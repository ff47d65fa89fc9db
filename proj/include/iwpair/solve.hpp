#pragma once

#include "iwpair/march.hpp"
#include "iwpair/pair.hpp"

namespace iwpair {

struct SolveOptions {
    double s_step = 1e-3;             // query-mesh step in s
    std::optional<double> domain_lo;  // query range; derived from the problem when absent
    std::optional<double> domain_hi;
    double trunc_tol = 1e-8;          // sup-relative acceptance between truncation iterates
    int max_refinements = 40;
    double trunc_ratio = 2.0;         // geometric truncation schedule ratio
    double quad_tol = 1e-10;
    std::vector<double> extra_nodes;  // forced into the query mesh
};

/// The increasing solution g_r with g_r(c) = a. Branches on the left boundary:
/// marched from the boundary itself when the scale limit is finite and the
/// criterion integral converges (kappa = slope at the boundary after
/// rescaling); otherwise truncation shooting with neutral data and kappa = 0.
PairSolution solve_increasing(const PairProblem& problem, const SolveOptions& opts = {});

/// The decreasing solution g_ell, mirror image about the right boundary.
PairSolution solve_decreasing(const PairProblem& problem, const SolveOptions& opts = {});

/// Alternative route, Picard iteration on the killed-kernel equation
///   g(x) = a (s(x)-s(l))/(s(c)-s(l)) - int_l^c u(c;x,y) g dmu
///          + int_{c+} (s(x v y)-s(y)) g dmu
/// starting from the affine first term (mirrored for the decreasing case).
/// Must agree with the marching route.
PairSolution solve_via_killed_kernel(const PairProblem& problem, const SolveOptions& opts = {});

/// Max absolute defect of the integral equation at the probes, with the kernel
/// integral evaluated by quadrature independent of the marching scheme. Measure
/// mass outside the stored mesh enters exactly through the terminus slope.
double residual(const PairSolution& sol, const std::vector<double>& probes,
                const RadonMeasure& mu, double quad_tol = 1e-10);

/// Both sides of the exit identity over (a, b) from x:
///   lhs = s-affine interpolation of g between a and b,
///   rhs = g(x) + int_a^b u_ab(x,y) g dmu.
struct ExitCheck {
    double lhs;
    double rhs;
};
ExitCheck exit_expectation_check(const PairSolution& sol, const RadonMeasure& mu,
                                 double a, double x, double b, double quad_tol = 1e-10);

/// Slope recovered from the boundary identity anchored at the solution's
/// terminus node (the boundary itself for boundary-marched solutions):
///   p_hat = (g(b)-g(t))/(s(b)-s(t)) - int_t^b (s(b)-s(z))/(s(b)-s(t)) g dmu
/// (mirrored for decreasing solutions). Independent of b for a true solution.
double terminus_slope_identity(const PairSolution& sol, const RadonMeasure& mu,
                               double probe_b, double quad_tol = 1e-10);

/// kappa recovered from the boundary identity; requires a boundary-marched
/// solution (finite scale limit, convergent criterion integral). In the
/// truncated regimes kappa is 0 by construction and a KappaZeroRegime
/// diagnostic is thrown instead.
double kappa_from_boundary_identity(const PairSolution& sol, const RadonMeasure& mu,
                                    double probe_b, double quad_tol = 1e-10);

} // namespace iwpair
