#pragma once

#include <functional>
#include <vector>

namespace iwpair {

/// Adaptive Simpson on [a, b], absolute tolerance per call.
/// Throws QuadratureError with a refinement trace when the recursion bottoms out.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol = 1e-10, int max_depth = 48);

/// As above but splitting first at the given interior breakpoints.
double adaptive_simpson_split(const std::function<double(double)>& f, double a, double b,
                              const std::vector<double>& breakpoints,
                              double abs_tol = 1e-10, int max_depth = 48);

struct ImproperResult {
    bool finite = true;
    double value = 0.0; // meaningful when finite
};

/// Integral of f over (boundary, anchor] or [anchor, boundary) where `boundary`
/// may be infinite or a singular finite endpoint. Slices geometrically toward
/// the boundary and classifies convergence by the tail-contribution ratio;
/// growing tails (or partial sums past `cap`) are declared infinite.
ImproperResult improper_toward_boundary(const std::function<double(double)>& f,
                                        double anchor, double boundary,
                                        double abs_tol = 1e-10, double cap = 1e12);

} // namespace iwpair
