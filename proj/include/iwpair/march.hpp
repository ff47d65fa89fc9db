#pragma once

#include <vector>

#include "iwpair/diffusion.hpp"

namespace iwpair {

struct MarchOptions {
    double s_step = 1e-3;              // target mesh step in the s-coordinate
    std::vector<double> include;       // extra nodes (anchor, query points, ...)
    double stability_theta = 0.05;     // cell split threshold on measure load
    double renorm_threshold = 1e150;   // rescale state beyond this magnitude
    double quad_tol = 1e-12;           // per-cell moment tolerance (boundary cells)
};

/// Trajectory of the measure-form system dg = p ds, dp = g dmu, stored in
/// march order. Values g, p_minus, p_plus are scaled; the true value at node i
/// is g[i] * exp(log_scale[i]). Rescaling happens only when magnitudes pass
/// the renorm threshold, so log_scale is identically zero in ordinary runs.
struct MarchResult {
    std::vector<double> x, s, g, p_minus, p_plus, log_scale;

    size_t size() const { return x.size(); }
    double g_value(size_t i) const;
    double p_minus_value(size_t i) const;
    double p_plus_value(size_t i) const;
};

/// Integrates the system from (x0, g0, p0) to x1 over a mesh in the
/// s-coordinate: a trapezoidal corrector in both dg and dp between atoms, exact
/// slope jumps p+ - p- = g * mass at atom nodes. Linear in the initial data.
/// p0 is the one-sided derivative dg/ds on the marching side of x0.
MarchResult march_measure_ode(const DiffusionSpec& spec, const RadonMeasure& mu,
                              double x0, double g0, double p0, double x1,
                              const MarchOptions& opts = {});

/// Mesh used by the marcher: s-uniform nodes between x0 and x1 (march order)
/// with atoms, density breakpoints and requested points inserted.
std::vector<double> build_march_mesh(const DiffusionSpec& spec, const RadonMeasure& mu,
                                     double x0, double x1, const MarchOptions& opts);

/// Marches along a prescribed node sequence (must be monotone in x).
MarchResult march_on_mesh(const DiffusionSpec& spec, const RadonMeasure& mu,
                          const std::vector<double>& mesh, double g0, double p0,
                          const MarchOptions& opts = {});

} // namespace iwpair
