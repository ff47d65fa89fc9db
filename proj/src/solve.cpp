#include "iwpair/solve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "iwpair/errors.hpp"
#include "iwpair/quadrature.hpp"

namespace iwpair {

namespace {

EndpointRegime endpoint_regime(const DiffusionSpec& spec, const RadonMeasure& mu, bool left) {
    double slim = left ? spec.scale.left_limit() : spec.scale.right_limit();
    if (!is_finite(slim)) return EndpointRegime::truncated_infinite_scale;
    BoundaryClassification bc = classify_boundaries(spec, mu);
    CafVerdict v = left ? bc.caf_left : bc.caf_right;
    return v == CafVerdict::finite ? EndpointRegime::boundary_march
                                   : EndpointRegime::truncated_divergent;
}

struct QueryDomain {
    double lo, hi;
};

QueryDomain query_domain(const PairProblem& p, const SolveOptions& opts) {
    double mn = p.c, mx = p.c;
    for (const Atom& a : p.mu.atoms()) {
        mn = std::min(mn, a.at);
        mx = std::max(mx, a.at);
    }
    for (double b : p.mu.breakpoints()) {
        if (p.spec.interval.contains(b)) {
            mn = std::min(mn, b);
            mx = std::max(mx, b);
        }
    }
    for (double e : opts.extra_nodes) {
        mn = std::min(mn, e);
        mx = std::max(mx, e);
    }
    double pad = std::max(1.0, 0.5 * (mx - mn));
    QueryDomain q{mn - pad, mx + pad};
    if (opts.domain_lo) q.lo = *opts.domain_lo;
    if (opts.domain_hi) q.hi = *opts.domain_hi;

    const Interval& iv = p.spec.interval;
    if (is_finite(iv.lo) && q.lo <= iv.lo) q.lo = iv.lo + 0.25 * (std::min(p.c, mn) - iv.lo);
    if (is_finite(iv.hi) && q.hi >= iv.hi) q.hi = iv.hi - 0.25 * (iv.hi - std::max(p.c, mx));
    if (!(q.lo < q.hi)) throw ValidationError("solve.domain", "empty query domain");
    return q;
}

std::vector<double> query_mesh(const PairProblem& p, const SolveOptions& opts,
                               double qlo, double qhi) {
    MarchOptions mo;
    mo.s_step = opts.s_step;
    mo.include = opts.extra_nodes;
    mo.include.push_back(p.c);
    return build_march_mesh(p.spec, p.mu, qlo, qhi, mo);
}

size_t index_of_ascending(const std::vector<double>& xs, double v) {
    auto it = std::lower_bound(xs.begin(), xs.end(), v);
    if (it == xs.end() || *it != v) throw NumericError("internal: node not on mesh");
    return static_cast<size_t>(it - xs.begin());
}

// Geometric tail in march order from `start` up to (but excluding) `edge`.
// Step sizes shrink toward the query window so that the march enters it at
// full resolution; the marcher's stability splitting handles measure load.
std::vector<double> tail_nodes(const ScaleFunction& s, const RadonMeasure& mu,
                               double start, double edge, double s_step) {
    double s_edge = s(edge), s_start = s(start);
    std::vector<double> xs; // built edge -> start, then reversed
    double step = s_step;
    double cur = s_edge;
    const double dir = (s_start < s_edge) ? -1.0 : 1.0;
    for (int guard = 0; guard < 200000; ++guard) {
        cur += dir * step;
        if ((dir < 0 && cur <= s_start) || (dir > 0 && cur >= s_start)) break;
        xs.push_back(s.inverse(cur));
        step = std::min(step * 1.25, 0.125 * std::fabs(s_edge - s_start) + s_step);
    }
    for (double b : mu.breakpoints())
        if ((b - start) * (edge - b) > 0) xs.push_back(b);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    // March order runs from start toward edge.
    if (edge < start) std::reverse(xs.begin(), xs.end());
    std::vector<double> out;
    out.push_back(start);
    for (double v : xs)
        if (v != start && v != edge) out.push_back(v);
    return out;
}

struct RescaledIterate {
    std::vector<double> g, pm, pp;
};

RescaledIterate rescale(const MarchResult& mr, size_t anchor_idx, double a) {
    double gc = mr.g[anchor_idx];
    double lamc = mr.log_scale[anchor_idx];
    if (!(gc > 0))
        throw NumericError("not an Ito-Watanabe pair: solution not positive at the anchor");
    RescaledIterate out;
    size_t n = mr.size();
    out.g.resize(n);
    out.pm.resize(n);
    out.pp.resize(n);
    for (size_t i = 0; i < n; ++i) {
        double f = a / gc * std::exp(mr.log_scale[i] - lamc);
        out.g[i] = mr.g[i] * f;
        out.pm[i] = mr.p_minus[i] * f;
        out.pp[i] = mr.p_plus[i] * f;
    }
    return out;
}

std::vector<size_t> probe_offsets(size_t count, size_t anchor_rel) {
    std::vector<size_t> idx;
    size_t stride = std::max<size_t>(1, count / 128);
    for (size_t i = 0; i < count; i += stride) idx.push_back(i);
    idx.push_back(count - 1);
    idx.push_back(anchor_rel);
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

PairSolution finalize(const PairProblem& p, const std::vector<double>& mesh_ascending,
                      std::vector<double> g, std::vector<double> pm, std::vector<double> pp,
                      double kappa, EndpointRegime regime) {
    const size_t n = mesh_ascending.size();
    std::vector<double> s(n);
    for (size_t i = 0; i < n; ++i) s[i] = p.spec.scale(mesh_ascending[i]);

    double gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::fabs(v));
    double slack = 1e-12 * (gmax + p.a);
    double pscale = 0.0;
    for (double v : pp) pscale = std::max(pscale, std::fabs(v));
    // Strict positivity in the interior; a boundary-marched solution vanishes
    // at the boundary node itself.
    auto at_boundary = [&](size_t i) {
        return (i == 0 && mesh_ascending.front() == p.spec.interval.lo) ||
               (i == n - 1 && mesh_ascending.back() == p.spec.interval.hi);
    };
    for (size_t i = 0; i < n; ++i) {
        if (!(g[i] > 0) && !(at_boundary(i) && g[i] == 0.0))
            throw NumericError("not an Ito-Watanabe pair: solution vanishes or changes sign");
        if (i + 1 < n) {
            if (p.direction == Direction::increasing && g[i + 1] < g[i] - slack)
                throw NumericError("solve: increasing solution lost monotonicity");
            if (p.direction == Direction::decreasing && g[i + 1] > g[i] + slack)
                throw NumericError("solve: decreasing solution lost monotonicity");
            if (pp[i] > pm[i + 1] + 1e-9 * (1 + pscale))
                throw NumericError("solve: s-convexity violated along the mesh");
        }
    }
    if (p.kappa && std::fabs(*p.kappa - kappa) > 1e-6 * (1 + std::fabs(*p.kappa)))
        throw NumericError("solve: computed kappa inconsistent with the forced value");

    return PairSolution(mesh_ascending, std::move(s), std::move(g), std::move(pm),
                        std::move(pp), kappa, p.direction, p.c, p.a, p.spec.scale,
                        p.spec.interval, regime, p.mu.fingerprint(p.spec.interval));
}

PairSolution solve_monotone(const PairProblem& p, const SolveOptions& opts) {
    p.validate();
    const bool increasing = (p.direction == Direction::increasing);
    const Interval& iv = p.spec.interval;
    const double boundary = increasing ? iv.lo : iv.hi;
    const EndpointRegime regime = endpoint_regime(p.spec, p.mu, increasing);

    QueryDomain q = query_domain(p, opts);
    const bool from_boundary = (regime == EndpointRegime::boundary_march) && is_finite(boundary);
    if (from_boundary) {
        if (increasing) q.lo = boundary;
        else q.hi = boundary;
    }
    const std::vector<double> qmesh = query_mesh(p, opts, q.lo, q.hi);
    const size_t qn = qmesh.size();
    const size_t ci_asc = index_of_ascending(qmesh, p.c);

    MarchOptions mo;
    mo.s_step = opts.s_step;
    mo.quad_tol = std::min(opts.quad_tol, 1e-12);

    const double g0 = (regime == EndpointRegime::truncated_infinite_scale) ? 1.0 : 0.0;
    const double p0 = (regime == EndpointRegime::truncated_infinite_scale)
                          ? 0.0
                          : (increasing ? 1.0 : -1.0);

    std::vector<double> mesh_march = qmesh;
    if (!increasing) std::reverse(mesh_march.begin(), mesh_march.end());
    const size_t ci_march = increasing ? ci_asc : qn - 1 - ci_asc;

    auto finish = [&](RescaledIterate it, size_t off, double kappa) {
        std::vector<double> g(it.g.begin() + off, it.g.end());
        std::vector<double> pm(it.pm.begin() + off, it.pm.end());
        std::vector<double> pp(it.pp.begin() + off, it.pp.end());
        if (!increasing) {
            std::reverse(g.begin(), g.end());
            std::reverse(pm.begin(), pm.end());
            std::reverse(pp.begin(), pp.end());
        }
        return finalize(p, qmesh, std::move(g), std::move(pm), std::move(pp), kappa, regime);
    };

    if (from_boundary) {
        MarchResult mr = march_on_mesh(p.spec, p.mu, mesh_march, g0, p0, mo);
        RescaledIterate it = rescale(mr, ci_march, p.a);
        double kappa = increasing ? it.pp.front() : it.pm.front();
        return finish(std::move(it), 0, kappa);
    }

    // Truncation shooting; the query mesh stays fixed across iterates.
    const double edge = increasing ? q.lo : q.hi;
    const double s_edge = p.spec.scale(edge);
    const double s_far = p.spec.scale(increasing ? q.hi : q.lo);
    const double d0x = std::max(1.0, 0.25 * std::fabs(q.hi - q.lo));
    const double d0s = std::max(1.0, 0.25 * std::fabs(s_far - s_edge));
    const double slim = increasing ? p.spec.scale.left_limit() : p.spec.scale.right_limit();

    auto start_at = [&](int n) -> double {
        double ratio_pow = std::pow(opts.trunc_ratio, n);
        if (is_finite(boundary))
            return boundary + (edge - boundary) / (opts.trunc_ratio * ratio_pow);
        if (!is_finite(slim)) {
            double target = s_edge + (increasing ? -1.0 : 1.0) * d0s * ratio_pow;
            return p.spec.scale.inverse(target);
        }
        return edge + (increasing ? -1.0 : 1.0) * d0x * ratio_pow;
    };

    const std::vector<size_t> poff = probe_offsets(qn, ci_march);
    std::vector<double> prev_vals;
    std::string last_diag = "no iterations ran";
    for (int n = 0; n <= opts.max_refinements; ++n) {
        double start = start_at(n);
        std::vector<double> mesh = tail_nodes(p.spec.scale, p.mu, start, edge, opts.s_step);
        const size_t off = mesh.size();
        mesh.insert(mesh.end(), mesh_march.begin(), mesh_march.end());
        MarchResult mr = march_on_mesh(p.spec, p.mu, mesh, g0, p0, mo);
        RescaledIterate it = rescale(mr, off + ci_march, p.a);

        std::vector<double> vals;
        vals.reserve(poff.size());
        for (size_t i : poff) vals.push_back(it.g[off + i]);

        if (!prev_vals.empty()) {
            double rel = 0.0;
            for (size_t k = 0; k < vals.size(); ++k) {
                double denom = std::max(std::fabs(vals[k]), 1e-300);
                rel = std::max(rel, std::fabs(vals[k] - prev_vals[k]) / denom);
            }
            if (rel < opts.trunc_tol) return finish(std::move(it), off, 0.0);
            std::ostringstream os;
            os << "iterate " << n << ": start " << start << ", sup-rel " << rel;
            last_diag = os.str();
        }
        prev_vals = std::move(vals);
    }
    throw NumericError("solve: truncation did not converge after " +
                       std::to_string(opts.max_refinements) + " refinements (" + last_diag + ")");
}

double value_on_mesh(const std::vector<double>& x, const std::vector<double>& g, double v) {
    auto it = std::lower_bound(x.begin(), x.end(), v);
    if (it != x.end() && *it == v) return g[it - x.begin()];
    if (it == x.begin()) return g.front();
    if (it == x.end()) return g.back();
    size_t i = it - x.begin();
    double t = (v - x[i - 1]) / (x[i] - x[i - 1]);
    return g[i - 1] + t * (g[i] - g[i - 1]);
}

// Prefix sums of w(y) g(y) mu(dy) along the mesh: entry i covers
// (mesh[0], mesh[i]], atoms at mesh[i] included. Gauss nodes on the density
// part per cell (strictly interior, safe at piecewise-density edges) with
// linear interpolation of g.
std::vector<double> prefix_integral(const std::vector<double>& x, const std::vector<double>& g,
                                    const RadonMeasure& mu,
                                    const std::function<double(double)>& w) {
    static const double gx[3] = {-0.774596669241483377, 0.0, 0.774596669241483377};
    static const double gw[3] = {5.0 / 9, 8.0 / 9, 5.0 / 9};
    size_t n = x.size();
    std::vector<double> out(n, 0.0);
    size_t ai = 0;
    const auto& atoms = mu.atoms();
    for (size_t i = 1; i < n; ++i) {
        out[i] = out[i - 1];
        if (mu.has_density() && x[i] > x[i - 1]) {
            double mid = 0.5 * (x[i - 1] + x[i]), half = 0.5 * (x[i] - x[i - 1]);
            for (int k = 0; k < 3; ++k) {
                double y = mid + half * gx[k];
                double t = (y - x[i - 1]) / (x[i] - x[i - 1]);
                double gy = g[i - 1] + t * (g[i] - g[i - 1]);
                out[i] += half * gw[k] * w(y) * gy * mu.density(y);
            }
        }
        while (ai < atoms.size() && atoms[ai].at <= x[i]) {
            if (atoms[ai].at > x[0])
                out[i] += w(atoms[ai].at) * value_on_mesh(x, g, atoms[ai].at) * atoms[ai].mass;
            ++ai;
        }
    }
    return out;
}

} // namespace

PairSolution solve_increasing(const PairProblem& problem, const SolveOptions& opts) {
    if (problem.direction != Direction::increasing)
        throw ValidationError("solve_increasing", "problem direction must be increasing");
    return solve_monotone(problem, opts);
}

PairSolution solve_decreasing(const PairProblem& problem, const SolveOptions& opts) {
    if (problem.direction != Direction::decreasing)
        throw ValidationError("solve_decreasing", "problem direction must be decreasing");
    return solve_monotone(problem, opts);
}

PairSolution solve_via_killed_kernel(const PairProblem& p, const SolveOptions& opts) {
    p.validate();
    const bool increasing = (p.direction == Direction::increasing);
    const auto& s = p.spec.scale;
    const double s_near = increasing ? s.left_limit() : s.right_limit();
    const double s_c = s(p.c);

    QueryDomain q = query_domain(p, opts);
    const double boundary = increasing ? p.spec.interval.lo : p.spec.interval.hi;
    if (is_finite(boundary)) {
        if (increasing) q.lo = boundary;
        else q.hi = boundary;
    } else {
        // All measure mass toward the near boundary must live on the mesh.
        double from = increasing ? q.lo : q.hi;
        for (int k = 1; k <= 8; ++k) {
            double v = from + (increasing ? -1.0 : 1.0) * k * k;
            if (p.mu.density(v) > 0)
                throw NumericError("solve_via_killed_kernel: measure extends beyond the mesh "
                                   "toward the boundary; use the marching solver");
        }
    }

    std::vector<double> x = query_mesh(p, opts, q.lo, q.hi);
    const size_t n = x.size();
    std::vector<double> sv(n);
    for (size_t i = 0; i < n; ++i) sv[i] = s(x[i]);
    const size_t ci = index_of_ascending(x, p.c);

    std::vector<double> g0(n);
    for (size_t i = 0; i < n; ++i) {
        double h;
        if (increasing)
            h = is_finite(s_near) ? (sv[i] - s_near) / (s_c - s_near) : 1.0;
        else
            h = is_finite(s_near) ? (s_near - sv[i]) / (s_near - s_c) : 1.0;
        g0[i] = p.a * h;
    }
    std::vector<double> g = g0;

    std::vector<double> history;
    for (int iter = 0;; ++iter) {
        std::vector<double> P, S, Q1, Q2;
        if (increasing) {
            P = is_finite(s_near)
                    ? prefix_integral(x, g, p.mu, [&](double y) { return s(y) - s_near; })
                    : prefix_integral(x, g, p.mu, [](double) { return 1.0; });
            S = prefix_integral(x, g, p.mu, [&](double y) { return s_c - s(y); });
        } else {
            P = is_finite(s_near)
                    ? prefix_integral(x, g, p.mu, [&](double y) { return s_near - s(y); })
                    : prefix_integral(x, g, p.mu, [](double) { return 1.0; });
            S = prefix_integral(x, g, p.mu, [&](double y) { return s(y) - s_c; });
        }
        Q1 = prefix_integral(x, g, p.mu, [](double) { return 1.0; });
        Q2 = prefix_integral(x, g, p.mu, [&](double y) { return s(y); });

        std::vector<double> gn(n);
        double delta = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double I1, I2;
            if (increasing) {
                if (i <= ci) {
                    double S_i_c = S[ci] - S[i];
                    I1 = is_finite(s_near)
                             ? ((s_c - sv[i]) * P[i] + (sv[i] - s_near) * S_i_c) / (s_c - s_near)
                             : (s_c - sv[i]) * P[i] + S_i_c;
                } else {
                    I1 = is_finite(s_near) ? (s_c - sv[i]) * P[ci] / (s_c - s_near)
                                           : (s_c - sv[i]) * P[ci];
                }
                I2 = (i > ci) ? sv[i] * (Q1[i] - Q1[ci]) - (Q2[i] - Q2[ci]) : 0.0;
            } else {
                if (i >= ci) {
                    double Ptail = P[n - 1] - P[i];
                    double S_c_i = S[i] - S[ci];
                    I1 = is_finite(s_near)
                             ? ((sv[i] - s_c) * Ptail + (s_near - sv[i]) * S_c_i) / (s_near - s_c)
                             : (sv[i] - s_c) * Ptail + S_c_i;
                } else {
                    double Pc = P[n - 1] - P[ci];
                    I1 = is_finite(s_near) ? (sv[i] - s_c) * Pc / (s_near - s_c)
                                           : (sv[i] - s_c) * Pc;
                }
                I2 = (i < ci) ? (Q2[ci] - Q2[i]) - sv[i] * (Q1[ci] - Q1[i]) : 0.0;
            }
            gn[i] = g0[i] - I1 + I2;
            delta = std::max(delta, std::fabs(gn[i] - g[i]));
        }
        g.swap(gn);
        history.push_back(delta);
        double scale_ref = std::max(p.a, std::fabs(g[ci]));
        if (delta < 1e-13 * scale_ref + 1e-14) break;
        size_t m = history.size();
        if (m > 8 && history[m - 1] > history[m - 2] && history[m - 2] > history[m - 3] &&
            history[m - 1] > 10 * history[0]) {
            std::ostringstream os;
            os << "solve_via_killed_kernel: Picard iteration diverging; residual history:";
            for (size_t k = m >= 6 ? m - 6 : 0; k < m; ++k) os << " " << history[k];
            throw NumericError(os.str());
        }
        if (iter >= 500)
            throw NumericError("solve_via_killed_kernel: no fixed point after 500 iterations");
    }

    std::vector<double> C = prefix_integral(x, g, p.mu, [](double) { return 1.0; });
    std::vector<double> pm(n), pp(n);
    double kappa;
    EndpointRegime regime = is_finite(s_near) ? EndpointRegime::boundary_march
                                              : EndpointRegime::truncated_infinite_scale;
    auto atom_mass_at = [&](double v) {
        for (const Atom& a : p.mu.atoms())
            if (a.at == v) return a.mass;
        return 0.0;
    };
    if (increasing) {
        auto S = prefix_integral(x, g, p.mu, [&](double y) { return s_c - s(y); });
        kappa = is_finite(s_near) ? (p.a - S[ci]) / (s_c - s_near) : 0.0;
        for (size_t i = 0; i < n; ++i) {
            pp[i] = kappa + C[i];
            pm[i] = pp[i] - g[i] * atom_mass_at(x[i]);
        }
    } else {
        auto S = prefix_integral(x, g, p.mu, [&](double y) { return s(y) - s_c; });
        double Sc = S[n - 1] - S[ci];
        kappa = is_finite(s_near) ? (Sc - p.a) / (s_near - s_c) : 0.0;
        double total = C[n - 1];
        for (size_t i = 0; i < n; ++i) {
            pp[i] = kappa - (total - C[i]);
            pm[i] = pp[i] - g[i] * atom_mass_at(x[i]);
        }
    }
    return finalize(p, x, std::move(g), std::move(pm), std::move(pp), kappa, regime);
}

double residual(const PairSolution& sol, const std::vector<double>& probes,
                const RadonMeasure& mu, double quad_tol) {
    const auto& s = sol.scale();
    const double sc = s(sol.anchor_c());
    const double c = sol.anchor_c();
    const bool increasing = (sol.direction() == Direction::increasing);
    const double m0 = sol.mesh().front(), mE = sol.mesh().back();
    const double p_term = increasing ? sol.slopes_minus().front() : sol.slopes_plus().back();

    double worst = 0.0;
    for (double xq : probes) {
        if (xq < m0 || xq > mE)
            throw ValidationError("residual", "probe outside the solution mesh");
        double sx = s(xq);
        double lo, hi;
        std::function<double(double)> w;
        if (increasing) {
            lo = m0;
            hi = std::max(xq, c);
            w = [&, sx, xq](double y) {
                double a1 = (y > xq) ? s(y) : sx;
                double a2 = (y > c) ? s(y) : sc;
                return a1 - a2;
            };
        } else {
            lo = std::min(xq, c);
            hi = mE;
            w = [&, sx, xq](double y) {
                double a1 = (y < c) ? s(y) : sc;
                double a2 = (y < xq) ? s(y) : sx;
                return a1 - a2;
            };
        }
        double integral = 0.0;
        if (hi > lo) {
            if (mu.has_density()) {
                auto f = [&](double y) { return w(y) * sol.value(y) * mu.density(y); };
                std::vector<double> splits = mu.breakpoints();
                splits.push_back(xq);
                splits.push_back(c);
                for (const Atom& a : mu.atoms()) splits.push_back(a.at);
                integral += adaptive_simpson_split(f, lo, hi, splits, quad_tol);
            }
            for (const Atom& a : mu.atoms()) {
                bool in = increasing ? (a.at > lo && a.at <= hi) : (a.at >= lo && a.at < hi);
                if (in) integral += w(a.at) * sol.value(a.at) * a.mass;
            }
        }
        double R = sol.value(xq) - sol.anchor_a() - (sx - sc) * p_term - integral;
        worst = std::max(worst, std::fabs(R));
    }
    return worst;
}

ExitCheck exit_expectation_check(const PairSolution& sol, const RadonMeasure& mu,
                                 double a, double x, double b, double quad_tol) {
    if (!(a < x && x < b))
        throw ValidationError("exit_expectation_check", "requires a < x < b");
    const auto& s = sol.scale();
    double sa = s(a), sb = s(b), sx = s(x);
    ExitCheck out;
    out.lhs = sol.value(a) * (sb - sx) / (sb - sa) + sol.value(b) * (sx - sa) / (sb - sa);
    auto u = [&](double y) {
        double sy = s(y);
        return (std::min(sx, sy) - sa) * (sb - std::max(sx, sy)) / (sb - sa);
    };
    double integral = 0.0;
    if (mu.has_density()) {
        auto f = [&](double y) { return u(y) * sol.value(y) * mu.density(y); };
        std::vector<double> splits = mu.breakpoints();
        splits.push_back(x);
        for (const Atom& at : mu.atoms()) splits.push_back(at.at);
        integral += adaptive_simpson_split(f, a, b, splits, quad_tol);
    }
    for (const Atom& at : mu.atoms())
        if (at.at > a && at.at < b) integral += u(at.at) * sol.value(at.at) * at.mass;
    out.rhs = sol.value(x) + integral;
    return out;
}

double terminus_slope_identity(const PairSolution& sol, const RadonMeasure& mu,
                               double probe_b, double quad_tol) {
    const auto& s = sol.scale();
    const bool increasing = (sol.direction() == Direction::increasing);
    double t = increasing ? sol.mesh().front() : sol.mesh().back();
    double st = s(t);
    double sb = s(probe_b);
    if (increasing ? !(probe_b > t) : !(probe_b < t))
        throw ValidationError("terminus_slope_identity", "probe must be interior to the mesh");

    double lo = std::min(t, probe_b), hi = std::max(t, probe_b);
    // Increasing: p+(t) = (g(b)-g(t))/(s(b)-s(t)) - int (s(b)-s(y))/(s(b)-s(t)) g dmu.
    // Decreasing: p-(t) = (g(b)-g(t))/(s(b)-s(t)) + int (s(y)-s(b))/(s(t)-s(b)) g dmu.
    auto w = [&](double y) {
        double sy = s(y);
        return increasing ? (sb - sy) / (sb - st) : (sy - sb) / (st - sb);
    };
    double integral = 0.0;
    if (mu.has_density()) {
        auto f = [&](double y) { return w(y) * sol.value(y) * mu.density(y); };
        std::vector<double> splits = mu.breakpoints();
        for (const Atom& at : mu.atoms()) splits.push_back(at.at);
        integral += adaptive_simpson_split(f, lo, hi, splits, quad_tol);
    }
    for (const Atom& at : mu.atoms()) {
        bool in = increasing ? (at.at > lo && at.at <= hi) : (at.at >= lo && at.at < hi);
        if (in) integral += w(at.at) * sol.value(at.at) * at.mass;
    }
    double dq = (sol.value(probe_b) - sol.value(t)) / (sb - st);
    return increasing ? dq - integral : dq + integral;
}

double kappa_from_boundary_identity(const PairSolution& sol, const RadonMeasure& mu,
                                    double probe_b, double quad_tol) {
    if (sol.regime() != EndpointRegime::boundary_march) {
        if (sol.regime() == EndpointRegime::truncated_divergent)
            throw KappaZeroRegime("kappa = 0 regime: the boundary criterion integral diverges");
        throw KappaZeroRegime("kappa = 0 regime: scale limit infinite at the boundary");
    }
    return terminus_slope_identity(sol, mu, probe_b, quad_tol);
}

} // namespace iwpair
