#include "iwpair/transform.hpp"

#include <algorithm>
#include <cmath>

#include "iwpair/errors.hpp"

namespace iwpair {

namespace {

// int ds / g^2 over [s0, s1] with g affine in s: g(s0) = g0, g(s1) = g1.
// Equals (s1 - s0)/(g0 g1) for any slope, including zero.
double cell_integral(double s0, double s1, double g0, double g1) {
    return (s1 - s0) / (g0 * g1);
}

// Tail int ds/g^2 from the mesh end toward the boundary with the affine
// continuation g(s) = g_e + p (s - s_e); +inf encodes divergence.
double tail_integral(double s_e, double g_e, double p, double s_limit, bool leftward) {
    if (!(g_e > 0)) return kInf;
    if (leftward) {
        if (p == 0.0) return is_finite(s_limit) ? (s_e - s_limit) / (g_e * g_e) : kInf;
        if (p < 0) {
            // g grows toward the boundary
            double g_lim = is_finite(s_limit) ? g_e + p * (s_limit - s_e) : kInf;
            return (1.0 / p) * ((is_finite(g_lim) ? 1.0 / g_lim : 0.0) - 1.0 / g_e);
        }
        // p > 0: g shrinks toward the boundary and may hit zero
        double s_zero = s_e - g_e / p;
        if (!is_finite(s_limit) || s_zero >= s_limit) return kInf;
        double g_lim = g_e + p * (s_limit - s_e);
        return (1.0 / p) * (1.0 / g_lim - 1.0 / g_e);
    }
    if (p == 0.0) return is_finite(s_limit) ? (s_limit - s_e) / (g_e * g_e) : kInf;
    if (p > 0) {
        double g_lim = is_finite(s_limit) ? g_e + p * (s_limit - s_e) : kInf;
        return (1.0 / p) * (1.0 / g_e - (is_finite(g_lim) ? 1.0 / g_lim : 0.0));
    }
    double s_zero = s_e - g_e / p; // p < 0, zero crossing to the right
    if (!is_finite(s_limit) || s_zero <= s_limit) return kInf;
    double g_lim = g_e + p * (s_limit - s_e);
    return (1.0 / p) * (1.0 / g_e - 1.0 / g_lim);
}

} // namespace

TransformedDiffusion transform(const DiffusionSpec& spec, const GeneralSolution& g) {
    TransformedDiffusion td;
    td.base_ = spec;
    td.g_ = g;
    td.x_ = g.mesh();
    const size_t n = td.x_.size();
    if (n < 2) throw ValidationError("transform", "solution mesh too small");

    td.s_.resize(n);
    td.u_.resize(n);
    std::vector<double> gv(n);
    for (size_t i = 0; i < n; ++i) {
        td.s_[i] = spec.scale(td.x_[i]);
        gv[i] = g.value(td.x_[i]);
        bool boundary_zero = (gv[i] == 0.0) && (td.x_[i] == spec.interval.lo ||
                                                td.x_[i] == spec.interval.hi);
        if (!(gv[i] > 0) && !boundary_zero)
            throw ValidationError("transform", "g must be strictly positive on the mesh");
    }

    // Anchor s_g(c) = 0 at the solution's anchor point.
    size_t ci = std::lower_bound(td.x_.begin(), td.x_.end(), g.anchor_c()) - td.x_.begin();
    if (ci >= n) ci = n - 1;
    std::vector<double> cum(n, 0.0);
    for (size_t i = 1; i < n; ++i)
        cum[i] = cum[i - 1] + cell_integral(td.s_[i - 1], td.s_[i], gv[i - 1], gv[i]);
    for (size_t i = 0; i < n; ++i) td.u_[i] = cum[i] - cum[ci];

    double left_tail = tail_integral(td.s_.front(), gv.front(), g.slope_minus(td.x_.front()),
                                     spec.scale.left_limit(), true);
    double right_tail = tail_integral(td.s_.back(), gv.back(), g.slope_plus(td.x_.back()),
                                      spec.scale.right_limit(), false);
    td.u_l_ = is_finite(left_tail) ? td.u_.front() - left_tail : -kInf;
    td.u_r_ = is_finite(right_tail) ? td.u_.back() + right_tail : kInf;

    td.m_g_ = transform_measure(g, spec.speed);
    return td;
}

RadonMeasure transform_measure(const GeneralSolution& g, const RadonMeasure& mu) {
    std::vector<Atom> atoms;
    for (const Atom& a : mu.atoms()) {
        double gv = g.value(a.at);
        atoms.push_back({a.at, a.mass * gv * gv});
    }
    // g kinks at the measure atoms of its own problem; expose those to quadrature.
    std::vector<double> breaks = mu.breakpoints();
    for (const Atom& a : mu.atoms()) breaks.push_back(a.at);
    if (!mu.has_density()) return RadonMeasure(nullptr, std::move(atoms), std::move(breaks));
    GeneralSolution gc = g;
    auto base_density = mu;
    return RadonMeasure(
        [gc, base_density](double x) {
            double gv = gc.value(x);
            return gv * gv * base_density.density(x);
        },
        std::move(atoms), std::move(breaks));
}

double TransformedDiffusion::s_g(double x) const {
    const auto& xs = x_;
    if (x <= xs.front()) {
        double s0 = s_.front(), sx = base_.scale(x);
        double g0 = g_.value(xs.front());
        double p = g_.slope_minus(xs.front());
        double gx = g0 + p * (sx - s0);
        if (!(gx > 0)) return -kInf;
        return u_.front() + (sx - s0) / (g0 * gx);
    }
    if (x >= xs.back()) {
        double s0 = s_.back(), sx = base_.scale(x);
        double g0 = g_.value(xs.back());
        double p = g_.slope_plus(xs.back());
        double gx = g0 + p * (sx - s0);
        if (!(gx > 0)) return kInf;
        return u_.back() + (sx - s0) / (g0 * gx);
    }
    size_t i = std::upper_bound(xs.begin(), xs.end(), x) - xs.begin() - 1;
    if (x == xs[i]) return u_[i];
    double sx = base_.scale(x);
    double gx = g_.value(x);
    return u_[i] + (sx - s_[i]) / (g_.value(xs[i]) * gx);
}

double TransformedDiffusion::s_g_inverse(double u) const {
    size_t n = u_.size();
    double g0, p, s0, w;
    if (u <= u_.front()) {
        g0 = g_.value(x_.front());
        p = g_.slope_minus(x_.front());
        s0 = s_.front();
        w = u - u_.front();
    } else if (u >= u_.back()) {
        g0 = g_.value(x_.back());
        p = g_.slope_plus(x_.back());
        s0 = s_.back();
        w = u - u_.back();
    } else {
        size_t i = std::upper_bound(u_.begin(), u_.end(), u) - u_.begin() - 1;
        i = std::min(i, n - 2);
        g0 = g_.value(x_[i]);
        double ds = s_[i + 1] - s_[i];
        p = (g_.value(x_[i + 1]) - g0) / (ds > 0 ? ds : 1.0);
        s0 = s_[i];
        w = u - u_[i];
    }
    double t = w * g0 * g0 / (1.0 - w * g0 * p);
    return base_.scale.inverse(s0 + t);
}

double TransformedDiffusion::s_g_derivative(double x) const {
    double gv = g_.value(x);
    return base_.scale.derivative(x) / (gv * gv);
}

double TransformedDiffusion::drift(double x) const {
    if (!has_drift()) throw ValidationError("transform.drift", "base diffusion has no SDE form");
    double sg = base_.sde->sigma(x);
    double gprime_x = g_.slope_minus(x) * base_.scale.derivative(x);
    return base_.sde->drift(x) + sg * sg * gprime_x / g_.value(x);
}

double TransformedDiffusion::potential(double x, double y) const {
    if (!transient())
        throw NumericError("transformed diffusion is recurrent: potential undefined");
    double ux = s_g(x), uy = s_g(y);
    double lo = std::min(ux, uy), hi = std::max(ux, uy);
    if (!attainable_left()) return u_r_ - hi;
    if (!attainable_right()) return lo - u_l_;
    return (lo - u_l_) * (u_r_ - hi) / (u_r_ - u_l_);
}

BoundaryProbabilities q_boundary_probabilities(const TransformedDiffusion& td, double x) {
    if (!td.transient())
        throw NumericError("transformed diffusion is recurrent: no boundary attraction");
    if (!td.attainable_left()) return {0.0, 1.0};
    if (!td.attainable_right()) return {1.0, 0.0};
    double p_right = (td.s_g(x) - td.u_l()) / (td.u_r() - td.u_l());
    return {1.0 - p_right, p_right};
}

double q_hitting_probability(const TransformedDiffusion& td, double x, double y) {
    if (x == y) return 1.0;
    return td.potential(x, y) / td.potential(y, y);
}

double local_time_terminal_rate(const TransformedDiffusion& td, double y) {
    return td.s_g_derivative(y) / (2.0 * td.potential(y, y));
}

} // namespace iwpair
