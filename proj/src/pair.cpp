#include "iwpair/pair.hpp"

#include <algorithm>
#include <cmath>

#include "iwpair/errors.hpp"

namespace iwpair {

void PairProblem::validate() const {
    if (!(a > 0)) throw ValidationError("pair.a", "normalization value must be positive");
    if (!spec.interval.contains(c))
        throw ValidationError("pair.c", "anchor must be strictly interior");
    mu.validate(spec.interval, "mu_A");
}

PairSolution::PairSolution(std::vector<double> x, std::vector<double> s, std::vector<double> g,
                           std::vector<double> p_minus, std::vector<double> p_plus,
                           double kappa, Direction dir, double c, double a,
                           ScaleFunction scale, Interval interval, EndpointRegime regime,
                           uint64_t measure_fingerprint)
    : x_(std::move(x)), s_(std::move(s)), g_(std::move(g)), pm_(std::move(p_minus)),
      pp_(std::move(p_plus)), kappa_(kappa), dir_(dir), c_(c), a_(a),
      scale_(std::move(scale)), interval_(interval), regime_(regime),
      fingerprint_(measure_fingerprint) {
    if (x_.size() < 2 || x_.size() != s_.size() || x_.size() != g_.size() ||
        x_.size() != pm_.size() || x_.size() != pp_.size())
        throw ValidationError("pair_solution", "inconsistent mesh arrays");
}

size_t PairSolution::cell_of(double x) const {
    if (x <= x_.front()) return 0;
    if (x >= x_.back()) return x_.size() - 2;
    size_t i = std::upper_bound(x_.begin(), x_.end(), x) - x_.begin();
    return i - 1;
}

namespace {

// Hermite in s for g on a cell whose interior is atom-free: left slope is the
// right derivative at the left node, right slope the left derivative at the
// right node.
double hermite_value(double sx, double s0, double s1, double g0, double g1,
                     double m0, double m1) {
    double h = s1 - s0;
    if (h <= 0) return g0;
    double t = (sx - s0) / h, t2 = t * t, t3 = t2 * t;
    return g0 * (2 * t3 - 3 * t2 + 1) + h * m0 * (t3 - 2 * t2 + t) +
           g1 * (-2 * t3 + 3 * t2) + h * m1 * (t3 - t2);
}

double hermite_slope(double sx, double s0, double s1, double g0, double g1,
                     double m0, double m1) {
    double h = s1 - s0;
    if (h <= 0) return m0;
    double t = (sx - s0) / h, t2 = t * t;
    return g0 * (6 * t2 - 6 * t) / h + m0 * (3 * t2 - 4 * t + 1) +
           g1 * (-6 * t2 + 6 * t) / h + m1 * (3 * t2 - 2 * t);
}

} // namespace

double PairSolution::value(double x) const {
    double sx = scale_(x);
    if (x <= x_.front()) return g_.front() + pm_.front() * (sx - s_.front());
    if (x >= x_.back()) return g_.back() + pp_.back() * (sx - s_.back());
    size_t i = cell_of(x);
    if (x == x_[i]) return g_[i];
    return hermite_value(sx, s_[i], s_[i + 1], g_[i], g_[i + 1], pp_[i], pm_[i + 1]);
}

double PairSolution::slope_minus(double x) const {
    if (x <= x_.front()) return pm_.front();
    if (x >= x_.back()) return x == x_.back() ? pm_.back() : pp_.back();
    size_t i = cell_of(x);
    if (x == x_[i]) return pm_[i];
    double sx = scale_(x);
    return hermite_slope(sx, s_[i], s_[i + 1], g_[i], g_[i + 1], pp_[i], pm_[i + 1]);
}

double PairSolution::slope_plus(double x) const {
    if (x <= x_.front()) return x == x_.front() ? pp_.front() : pm_.front();
    if (x >= x_.back()) return pp_.back();
    size_t i = cell_of(x);
    if (x == x_[i]) return pp_[i];
    double sx = scale_(x);
    return hermite_slope(sx, s_[i], s_[i + 1], g_[i], g_[i + 1], pp_[i], pm_[i + 1]);
}

GeneralSolution combine(double lambda1, double lambda2,
                        const PairSolution& gr, const PairSolution& gl) {
    if (lambda1 < 0 || lambda2 < 0 || !(lambda1 + lambda2 > 0))
        throw ValidationError("combine", "requires lambda_i >= 0 with lambda1 + lambda2 > 0");
    if (gr.direction() != Direction::increasing || gl.direction() != Direction::decreasing)
        throw ValidationError("combine", "expects (increasing, decreasing) solutions");
    if (gr.measure_fingerprint() != gl.measure_fingerprint())
        throw ValidationError("combine", "solutions were built against different measures");

    GeneralSolution out;
    out.l1_ = lambda1;
    out.l2_ = lambda2;
    out.gr_ = gr;
    out.gl_ = gl;
    out.c_ = gr.anchor_c();

    std::vector<double> xs;
    xs.reserve(gr.mesh().size() + gl.mesh().size());
    xs.insert(xs.end(), gr.mesh().begin(), gr.mesh().end());
    xs.insert(xs.end(), gl.mesh().begin(), gl.mesh().end());
    std::sort(xs.begin(), xs.end());
    double span = std::max(1e-300, xs.back() - xs.front());
    std::vector<double> merged;
    merged.reserve(xs.size());
    for (double v : xs)
        if (merged.empty() || v - merged.back() > 1e-13 * span) merged.push_back(v);
    out.x_ = std::move(merged);

    for (double x : out.x_) {
        bool boundary = (x == gr.interval().lo) || (x == gr.interval().hi);
        if (!(out.value(x) > 0) && !(boundary && out.value(x) == 0.0))
            throw NumericError("combine: merged solution not strictly positive");
    }
    return out;
}

Decomposition fit_decomposition(double a0, double g_a0, double b0, double g_b0,
                                const PairSolution& gr, const PairSolution& gl) {
    if (!(a0 < b0)) throw ValidationError("fit_decomposition", "requires a0 < b0");
    double r1 = gr.value(a0), l1 = gl.value(a0);
    double r2 = gr.value(b0), l2 = gl.value(b0);
    double det = r1 * l2 - r2 * l1;
    double norm = std::max({std::fabs(r1 * l2), std::fabs(r2 * l1), 1e-300});
    if (std::fabs(det) < 1e-12 * norm)
        throw NumericError("fit_decomposition: g_r, g_ell not independent at probes");
    return {(g_a0 * l2 - g_b0 * l1) / det, (r1 * g_b0 - r2 * g_a0) / det};
}

} // namespace iwpair
