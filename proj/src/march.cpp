#include "iwpair/march.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "iwpair/errors.hpp"
#include "iwpair/quadrature.hpp"

namespace iwpair {

double MarchResult::g_value(size_t i) const { return g[i] * std::exp(log_scale[i]); }
double MarchResult::p_minus_value(size_t i) const { return p_minus[i] * std::exp(log_scale[i]); }
double MarchResult::p_plus_value(size_t i) const { return p_plus[i] * std::exp(log_scale[i]); }

namespace {

bool is_atom_at(const RadonMeasure& mu, double x, double* mass) {
    for (const Atom& a : mu.atoms())
        if (a.at == x) {
            *mass = a.mass;
            return true;
        }
    return false;
}

// Density moments of one atom-free cell between xa < xb:
//   m0 = int rho dx,  m1 = int (s(y) - s_edge) rho dy,
// where s_edge is the scale value at the march-side edge. The first cell of a
// boundary march can carry an integrable singularity; m0 is then only needed
// when the state g is nonzero there, which boundary marches exclude (g = 0).
struct CellMoments {
    double m0 = 0.0;
    double m1 = 0.0;
    bool m0_finite = true;
};

CellMoments cell_moments(const DiffusionSpec& spec, const RadonMeasure& mu,
                         double xa, double xb, double s_edge, bool edge_is_left,
                         bool boundary_cell, double quad_tol) {
    CellMoments cm;
    if (!mu.has_density() || xb <= xa) return cm;
    const auto& s = spec.scale;
    auto w1 = [&](double y) { return (s(y) - s_edge) * mu.density(y); };
    if (boundary_cell) {
        double anchor = edge_is_left ? xb : xa;
        double boundary = edge_is_left ? xa : xb;
        ImproperResult r0 = improper_toward_boundary(
            [&](double y) { return mu.density(y); }, anchor, boundary, quad_tol);
        cm.m0_finite = r0.finite;
        cm.m0 = r0.finite ? r0.value : kInf;
        ImproperResult r1 = improper_toward_boundary(w1, anchor, boundary, quad_tol);
        if (!r1.finite)
            throw NumericError("march: divergent first-moment cell at the boundary");
        cm.m1 = r1.value;
        return cm;
    }
    // Interior cells are smooth inside (the mesh splits at breakpoints), but a
    // piecewise density evaluated exactly at a breakpoint edge would read the
    // neighboring piece; Gauss nodes stay strictly interior.
    static const double gx[3] = {-0.774596669241483377, 0.0, 0.774596669241483377};
    static const double gw[3] = {5.0 / 9, 8.0 / 9, 5.0 / 9};
    double mid = 0.5 * (xa + xb), half = 0.5 * (xb - xa);
    for (int i = 0; i < 3; ++i) {
        double y = mid + half * gx[i];
        double w = half * gw[i];
        double rho = mu.density(y);
        cm.m0 += w * rho;
        cm.m1 += w * (s(y) - s_edge) * rho;
    }
    return cm;
}

} // namespace

std::vector<double> build_march_mesh(const DiffusionSpec& spec, const RadonMeasure& mu,
                                     double x0, double x1, const MarchOptions& opts) {
    if (x0 == x1) throw ValidationError("march", "x0 == x1");
    const auto& s = spec.scale;
    const bool rightward = x1 > x0;
    double s0 = s(x0), s1 = s(x1);
    if (!(rightward ? s1 > s0 : s1 < s0))
        throw NumericError("scale degenerate: ds vanished between march endpoints");

    std::vector<double> nodes;
    size_t n = static_cast<size_t>(std::ceil(std::fabs(s1 - s0) / opts.s_step));
    n = std::min<size_t>(std::max<size_t>(n, 1), 50'000'000);
    nodes.reserve(n + 16);
    nodes.push_back(x0);
    for (size_t k = 1; k < n; ++k) {
        double sk = s0 + (s1 - s0) * (static_cast<double>(k) / n);
        nodes.push_back(s.inverse(sk));
    }
    nodes.push_back(x1);

    auto lo = std::min(x0, x1), hi = std::max(x0, x1);
    for (const Atom& a : mu.atoms())
        if (a.at > lo && a.at < hi) nodes.push_back(a.at);
    for (double b : mu.breakpoints())
        if (b > lo && b < hi) nodes.push_back(b);
    for (double p : opts.include)
        if (p > lo && p < hi) nodes.push_back(p);

    std::sort(nodes.begin(), nodes.end());
    if (!rightward) std::reverse(nodes.begin(), nodes.end());

    // Dedupe in s, never dropping atoms.
    std::vector<double> out;
    out.reserve(nodes.size());
    double span_s = std::fabs(s1 - s0);
    double atom_mass;
    for (double v : nodes) {
        if (!out.empty()) {
            if (v == out.back()) continue;
            double ds = std::fabs(s(v) - s(out.back()));
            if (ds < 1e-13 * span_s && !is_atom_at(mu, v, &atom_mass) && v != x1) continue;
        }
        out.push_back(v);
    }
    if (out.size() < 2) out = {x0, x1};
    return out;
}

MarchResult march_on_mesh(const DiffusionSpec& spec, const RadonMeasure& mu,
                          const std::vector<double>& mesh, double g0, double p0,
                          const MarchOptions& opts) {
    if (mesh.size() < 2) throw ValidationError("march", "mesh needs at least two nodes");
    const auto& s = spec.scale;
    const bool rightward = mesh.back() > mesh.front();
    const double dir = rightward ? 1.0 : -1.0;

    MarchResult r;
    const size_t n = mesh.size();
    r.x.reserve(n);
    r.s.reserve(n);
    r.g.reserve(n);
    r.p_minus.reserve(n);
    r.p_plus.reserve(n);
    r.log_scale.reserve(n);

    double g = g0, p = p0, lam = 0.0;
    const double theta = opts.stability_theta;

    auto record = [&](double x, double sx, double gv, double pm, double pp) {
        r.x.push_back(x);
        r.s.push_back(sx);
        r.g.push_back(gv);
        r.p_minus.push_back(pm);
        r.p_plus.push_back(pp);
        r.log_scale.push_back(lam);
    };

    auto apply_atom = [&](double x, double* pm, double* pp) {
        double mass;
        if (!is_atom_at(mu, x, &mass)) {
            *pm = *pp = p;
            return;
        }
        if (rightward) {
            *pm = p;
            *pp = p + g * mass;
            p = *pp;
        } else {
            *pp = p;
            *pm = p - g * mass;
            p = *pm;
        }
    };

    // Start node: the initial slope is the derivative on the marching side; an
    // atom exactly at the start is not applied (the data already sits on the
    // correct side).
    {
        double sx = s(mesh.front());
        record(mesh.front(), sx, g, p, p);
    }

    // One trapezoidal step over an atom-free span. Linear-in-state and exact
    // when the density part vanishes.
    std::function<void(double, double, double, double, bool, int)> step =
        [&](double xa, double xb, double sa, double sb, bool boundary_cell, int depth) {
            double delta = sb - sa;
            if (delta == 0.0) {
                if (xb != xa)
                    throw NumericError("scale degenerate: ds vanished while x advanced");
                return;
            }
            CellMoments cm = cell_moments(spec, mu, std::min(xa, xb), std::max(xa, xb),
                                          sa, rightward, boundary_cell, opts.quad_tol);
            double load = dir * cm.m1;
            bool unstable = (cm.m0_finite ? cm.m0 * std::fabs(delta) > theta : g != 0.0) ||
                            load > 0.5;
            if (unstable && depth < 48) {
                double sm = 0.5 * (sa + sb);
                double xm = s.inverse(sm);
                if ((rightward && (xm <= xa || xm >= xb)) ||
                    (!rightward && (xm >= xa || xm <= xb))) {
                    // Inversion collapsed; fall through to a single step.
                } else {
                    step(xa, xm, sa, sm, boundary_cell, depth + 1);
                    step(xm, xb, sm, sb, false, depth + 1);
                    return;
                }
            }
            if (!cm.m0_finite && g != 0.0)
                throw NumericError("march: divergent measure mass against nonzero state");
            double m0g = (g == 0.0) ? 0.0 : cm.m0 * g;
            double denom = 1.0 - 0.5 * dir * cm.m1;
            if (!(std::fabs(denom) > 1e-12))
                throw NumericError("march: trapezoidal step singular; refine the mesh");
            double p_next = (p * (1.0 + 0.5 * dir * cm.m1) + dir * m0g) / denom;
            double pbar = 0.5 * (p + p_next);
            g += delta * pbar;
            p = p_next;
            if (!std::isfinite(g) || !std::isfinite(p)) {
                std::ostringstream os;
                os << "march: state blew up near x = " << xb;
                throw NumericError(os.str());
            }
        };

    double prev_x = mesh.front();
    double prev_s = r.s.front();
    const bool starts_at_finite_boundary =
        (rightward && is_finite(spec.interval.lo) && mesh.front() == spec.interval.lo) ||
        (!rightward && is_finite(spec.interval.hi) && mesh.front() == spec.interval.hi);

    for (size_t k = 1; k < n; ++k) {
        double x = mesh[k];
        double sx = s(x);
        step(prev_x, x, prev_s, sx, starts_at_finite_boundary && k == 1, 0);
        double pm, pp;
        apply_atom(x, &pm, &pp);
        // Renormalize a growing state; the recursion is linear, so scaling is exact.
        double mag = std::max({std::fabs(g), std::fabs(pm), std::fabs(pp)});
        if (mag > opts.renorm_threshold) {
            g /= mag;
            pm /= mag;
            pp /= mag;
            p /= mag;
            lam += std::log(mag);
        }
        record(x, sx, g, pm, pp);
        prev_x = x;
        prev_s = sx;
    }
    return r;
}

MarchResult march_measure_ode(const DiffusionSpec& spec, const RadonMeasure& mu,
                              double x0, double g0, double p0, double x1,
                              const MarchOptions& opts) {
    return march_on_mesh(spec, mu, build_march_mesh(spec, mu, x0, x1, opts), g0, p0, opts);
}

} // namespace iwpair
