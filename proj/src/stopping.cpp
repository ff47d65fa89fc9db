#include "iwpair/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "iwpair/errors.hpp"
#include "iwpair/solve.hpp"

namespace iwpair {

namespace {

// Richardson extrapolation of tail values v_k sampled at geometric offsets
// eta * 2^-k from the boundary, assuming an expansion in powers of the offset.
double richardson_limit(const std::vector<double>& v) {
    std::vector<double> t = v;
    size_t n = t.size();
    for (size_t m = 1; m < n; ++m) {
        double w = std::pow(2.0, static_cast<double>(m));
        for (size_t k = 0; k + m < n; ++k) t[k] = (w * t[k + 1] - t[k]) / (w - 1.0);
    }
    return t[0];
}

} // namespace

FinitenessReport check_finiteness(const RewardSpec& reward, const GeneralSolution& g,
                                  double lo, double hi, double cap) {
    FinitenessReport rep;
    auto ratio = [&](double x) { return reward.f(x) / g.value(x); };
    auto probe = [&](double x) {
        double r = ratio(x);
        if (!std::isfinite(r) || std::fabs(r) > cap) {
            rep.bounded = false;
            if (!rep.witness_x) rep.witness_x = x;
            return;
        }
        rep.sup = std::max(rep.sup, r);
    };
    for (int i = 0; i <= 512; ++i) probe(lo + (hi - lo) * i / 512.0);
    // Geometric refinement toward both ends catches boundary blowups.
    for (int k = 1; k <= 24; ++k) {
        double off = (hi - lo) * std::pow(2.0, -k) / 4.0;
        probe(lo + off);
        probe(hi - off);
    }
    // Past the sample window g continues convexly above its end tangent, so
    // the affine-extrapolated ratio only overstates f/g; probing outward keeps
    // the verdict conservative without a declared limit.
    const Interval& iv = g.interval();
    for (int k = 0; k <= 40 && rep.bounded; ++k) {
        double step = std::pow(2.0, k);
        if (!reward.limit_right) {
            double x = is_finite(iv.hi) ? hi + (iv.hi - hi) * (1 - std::pow(2.0, -k - 1))
                                        : hi + step;
            if (iv.contains(x)) probe(x);
        }
        if (!reward.limit_left && rep.bounded) {
            double x = is_finite(iv.lo) ? lo - (lo - iv.lo) * (1 - std::pow(2.0, -k - 1))
                                        : lo - step;
            if (iv.contains(x)) probe(x);
        }
    }
    if (reward.limit_left) {
        if (!std::isfinite(*reward.limit_left)) {
            rep.bounded = false;
            rep.witness_x = lo;
        } else {
            rep.sup = std::max(rep.sup, *reward.limit_left);
        }
    }
    if (reward.limit_right) {
        if (!std::isfinite(*reward.limit_right)) {
            rep.bounded = false;
            rep.witness_x = hi;
        } else {
            rep.sup = std::max(rep.sup, *reward.limit_right);
        }
    }
    return rep;
}

MajorantResult::MajorantResult(std::vector<double> knots_u, std::vector<double> knots_g,
                               std::vector<size_t> contact)
    : u_(std::move(knots_u)), g_(std::move(knots_g)), contact_(std::move(contact)) {}

double MajorantResult::value(double u) const {
    if (u_.empty()) throw NumericError("majorant: empty");
    if (u <= u_.front()) return g_.front();
    if (u >= u_.back()) return g_.back();
    size_t i = std::upper_bound(u_.begin(), u_.end(), u) - u_.begin() - 1;
    double t = (u - u_[i]) / (u_[i + 1] - u_[i]);
    return g_[i] + t * (g_[i + 1] - g_[i]);
}

MajorantResult concave_majorant(const std::vector<double>& u, const std::vector<double>& phi,
                                double contact_tol) {
    if (u.size() < 2) throw ValidationError("concave_majorant", "fewer than 2 samples");
    if (u.size() != phi.size())
        throw ValidationError("concave_majorant", "mismatched sample arrays");
    for (size_t i = 0; i + 1 < u.size(); ++i)
        if (!(u[i] < u[i + 1]))
            throw ValidationError("concave_majorant", "u must be strictly increasing");
    for (double v : phi)
        if (!std::isfinite(v))
            throw ValidationError("concave_majorant", "samples must be finite");

    // Monotone-chain upper hull; collinear interior points are dropped (to a
    // relative epsilon) so that every surviving knot is a true vertex.
    std::vector<size_t> hull;
    auto pops = [&](size_t o, size_t a, size_t b) {
        double t1 = (u[a] - u[o]) * (phi[b] - phi[o]);
        double t2 = (phi[a] - phi[o]) * (u[b] - u[o]);
        return t1 - t2 >= -1e-14 * (std::fabs(t1) + std::fabs(t2));
    };
    for (size_t i = 0; i < u.size(); ++i) {
        while (hull.size() >= 2 && pops(hull[hull.size() - 2], hull.back(), i))
            hull.pop_back();
        hull.push_back(i);
    }
    std::vector<double> ku, kg;
    std::vector<size_t> contact;
    ku.reserve(hull.size());
    kg.reserve(hull.size());
    for (size_t k = 0; k < hull.size(); ++k) {
        ku.push_back(u[hull[k]]);
        kg.push_back(phi[hull[k]]);
        // Hull vertices interpolate the samples, so each knot is a contact.
        (void)contact_tol;
        contact.push_back(k);
    }
    return MajorantResult(std::move(ku), std::move(kg), std::move(contact));
}

double StoppingSolution::value(double x) const {
    // On the contact set the majorant equals f/g exactly; taking the max
    // removes the piecewise-linear interpolation sag between hull knots.
    return std::max(f_(x), td_.g().value(x) * majorant_.value(td_.s_g(x)));
}

bool StoppingSolution::stop_at(double x) const {
    for (const auto& [lo, hi] : region_)
        if (x >= lo && x <= hi) return true;
    return false;
}

namespace {

// Locates the tangency point of the hull edge anchored at (u_a, phi_a) by
// maximizing the secant slope over [lo, hi] (golden section; phi unimodal
// around the touch point).
double refine_tangency(const std::function<double(double)>& phi, double u_a, double phi_a,
                       double lo, double hi) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    auto slope = [&](double t) { return (phi(t) - phi_a) / (t - u_a); };
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = slope(c), fd = slope(d);
    for (int it = 0; it < 200 && (b - a) > 1e-13 * (1 + std::fabs(a) + std::fabs(b)); ++it) {
        if (fc < fd) {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = slope(d);
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = slope(c);
        }
    }
    return 0.5 * (a + b);
}

} // namespace

StoppingSolution solve_stopping(const DiffusionSpec& spec, const RadonMeasure& mu_A,
                                double lambda1, double lambda2, const RewardSpec& reward,
                                const StoppingOptions& opts) {
    if (!(lambda1 > 0) || !(lambda2 > 0))
        throw ValidationError("stop.lambda",
                              "both mixture weights must be strictly positive");
    if (!reward.f) throw ValidationError("reward.f", "missing reward function");

    PairProblem prob{spec, mu_A, Direction::increasing, opts.anchor_c, 1.0, std::nullopt};
    SolveOptions sopts = opts.solver;
    sopts.domain_lo = opts.domain_lo ? opts.domain_lo : sopts.domain_lo;
    sopts.domain_hi = opts.domain_hi ? opts.domain_hi : sopts.domain_hi;
    PairSolution gr = solve_increasing(prob, sopts);
    prob.direction = Direction::decreasing;
    PairSolution gl = solve_decreasing(prob, sopts);
    GeneralSolution g = combine(lambda1, lambda2, gr, gl);

    StoppingSolution sol;
    sol.td_ = transform(spec, g);
    sol.f_ = reward.f;
    sol.epsilon_ = opts.epsilon;
    const TransformedDiffusion& td = sol.td_;

    if (!td.attainable_left() || !td.attainable_right())
        throw NumericError("stop: transformed scale must be bounded on both sides "
                           "(is the measure charged and are both weights positive?)");

    const double x_lo = g.mesh().front(), x_hi = g.mesh().back();
    FinitenessReport fin = check_finiteness(reward, g, x_lo, x_hi);
    if (!fin.bounded) {
        std::ostringstream os;
        os << "stop: V infinite, f/g unbounded";
        if (fin.witness_x) os << " near x = " << *fin.witness_x;
        throw NumericError(os.str());
    }

    // u-grid: uniform plus geometric refinement toward both boundaries.
    const double u_l = td.u_l(), u_r = td.u_r();
    const double span = u_r - u_l;
    std::vector<double> ugrid;
    ugrid.reserve(opts.grid_points + 70);
    for (size_t i = 0; i <= opts.grid_points; ++i)
        ugrid.push_back(u_l + span * static_cast<double>(i) / opts.grid_points);
    for (int k = 1; k <= 32; ++k) {
        double off = span * std::pow(2.0, -k) / 4.0;
        ugrid.push_back(u_l + off);
        ugrid.push_back(u_r - off);
    }
    std::sort(ugrid.begin(), ugrid.end());
    ugrid.erase(std::unique(ugrid.begin(), ugrid.end(),
                            [&](double a, double b) { return b - a < 1e-15 * span; }),
                ugrid.end());

    auto phi_at = [&](double u) {
        double x = td.s_g_inverse(u);
        return reward.f(x) / g.value(x);
    };

    std::vector<double> phi(ugrid.size());
    for (size_t i = 1; i + 1 < ugrid.size(); ++i) phi[i] = phi_at(ugrid[i]);

    // Boundary values: declared limits or Richardson extrapolation of the
    // geometric tail samples.
    auto boundary_phi = [&](bool left) {
        if (left && reward.limit_left) return *reward.limit_left;
        if (!left && reward.limit_right) return *reward.limit_right;
        std::vector<double> tail;
        for (int k = 8; k >= 1; --k) {
            double off = span * std::pow(2.0, -(k + 24)) / 4.0;
            tail.push_back(phi_at(left ? u_l + off : u_r - off));
        }
        return richardson_limit(tail);
    };
    phi.front() = boundary_phi(true);
    phi.back() = boundary_phi(false);

    sol.majorant_ = concave_majorant(ugrid, phi, opts.contact_tol);
    const MajorantResult& G = sol.majorant_;

    // Contact samples define the stopping region in u.
    std::vector<char> contact(ugrid.size());
    double gmax = 0.0;
    for (double v : phi) gmax = std::max(gmax, std::fabs(v));
    for (size_t i = 0; i < ugrid.size(); ++i)
        contact[i] = std::fabs(G.value(ugrid[i]) - phi[i]) <= opts.contact_tol * (1 + gmax);

    // Group contact runs, refine their edges by the tangency characterization.
    std::vector<std::pair<double, double>> uregion;
    size_t i = 0;
    while (i < ugrid.size()) {
        if (!contact[i]) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j + 1 < ugrid.size() && contact[j + 1]) ++j;
        double left_u = ugrid[i], right_u = ugrid[j];
        if (i > 0) {
            // Anchor at the previous hull vertex left of the gap.
            size_t anchor = 0;
            const auto& ku = G.knots_u();
            for (size_t k = 0; k < ku.size(); ++k)
                if (ku[k] < ugrid[i] - opts.contact_tol * (1 + span)) anchor = k;
            double ua = ku[anchor];
            left_u = refine_tangency(phi_at, ua, G.value(ua),
                                     std::max(ugrid[i - 1], ua + 1e-12 * span),
                                     std::min(right_u, ugrid[i] + (ugrid[i] - ugrid[i - 1])));
        }
        if (j + 1 < ugrid.size()) {
            size_t anchor = G.knots_u().size() - 1;
            const auto& ku = G.knots_u();
            for (size_t k = ku.size(); k-- > 0;)
                if (ku[k] > ugrid[j] + opts.contact_tol * (1 + span)) anchor = k;
            double ua = ku[anchor];
            right_u = refine_tangency(phi_at, ua, G.value(ua),
                                      std::max(left_u, ugrid[j] - (ugrid[j + 1] - ugrid[j])),
                                      std::min(ugrid[j + 1], ua - 1e-12 * span));
        }
        // Sliver runs arise where refined boundary samples drift inside the
        // absolute contact tolerance without touching. Keep a short run only
        // if an interior sample is an exact contact (hull vertices interpolate
        // their samples, so genuine single-point tangencies survive); the
        // boundary samples alone describe limits, not interior stopping points.
        bool keep = (right_u - left_u) >= span * 1e-6;
        for (size_t k = std::max<size_t>(i, 1); !keep && k <= j && k + 1 < ugrid.size(); ++k)
            keep = std::fabs(G.value(ugrid[k]) - phi[k]) <= 1e-13 * (1 + gmax);
        if (keep) uregion.emplace_back(left_u, right_u);
        i = j + 1;
    }

    // Merge adjacent slivers and map to x.
    auto to_x = [&](double u, bool is_left_end) {
        double edge_tol = span * 1e-12;
        if (u - u_l <= 4 * (u_l + span * std::pow(2.0, -32) / 4.0 - u_l) + edge_tol)
            if (u - u_l <= span * std::pow(2.0, -30)) return spec.interval.lo;
        if (u_r - u <= span * std::pow(2.0, -30)) return spec.interval.hi;
        (void)is_left_end;
        return td.s_g_inverse(u);
    };
    for (auto& [lu, ru] : uregion)
        sol.region_.emplace_back(to_x(lu, true), to_x(ru, false));

    // Epsilon-inflated region.
    {
        std::vector<char> eps_contact(ugrid.size());
        for (size_t k = 0; k < ugrid.size(); ++k)
            eps_contact[k] = phi[k] + opts.epsilon >= G.value(ugrid[k]);
        size_t k = 0;
        while (k < ugrid.size()) {
            if (!eps_contact[k]) {
                ++k;
                continue;
            }
            size_t j2 = k;
            while (j2 + 1 < ugrid.size() && eps_contact[j2 + 1]) ++j2;
            sol.eps_region_.emplace_back(to_x(ugrid[k], true), to_x(ugrid[j2], false));
            k = j2 + 1;
        }
    }

    // Optimality: for each boundary reached with positive probability, either
    // the stopping region accumulates there (the rule fires before the
    // lifetime) or the majorant must vanish at that boundary.
    auto region_accumulates = [&](bool left) {
        if (uregion.empty()) return false;
        double edge = span * std::pow(2.0, -30);
        return left ? (uregion.front().first - u_l) <= edge
                    : (u_r - uregion.back().second) <= edge;
    };
    std::ostringstream reason;
    auto boundary_ok = [&](bool left) {
        if (region_accumulates(left)) {
            reason << (left ? "left" : "right") << " boundary: region accumulates; ";
            return true;
        }
        double gb = left ? G.left_value() : G.right_value();
        bool zero = std::fabs(gb) <= 1e-7 * (1 + gmax);
        reason << (left ? "left" : "right") << " boundary: G = " << gb
               << (zero ? " (vanishes); " : " (positive); ");
        return zero;
    };
    bool ok_l = boundary_ok(true);
    bool ok_r = boundary_ok(false);
    bool auto_limits = (!reward.limit_left && !ok_l) || (!reward.limit_right && !ok_r);
    sol.verdict_ = (ok_l && ok_r)
                       ? OptimalityVerdict::optimal
                       : (auto_limits ? OptimalityVerdict::undetermined
                                      : OptimalityVerdict::not_optimal);
    sol.verdict_reason_ = reason.str();
    return sol;
}

} // namespace iwpair
