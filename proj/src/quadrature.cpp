#include "iwpair/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "iwpair/errors.hpp"
#include "iwpair/interval.hpp"

namespace iwpair {

namespace {

struct SimpsonFrame {
    double a, b, fa, fm, fb, whole;
};

double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4 * fm + fb);
}

double adaptive_rec(const std::function<double(double)>& f, double a, double b,
                    double fa, double fm, double fb, double whole, double tol,
                    int depth, int max_depth, int& worst_depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(a, m, fa, flm, fm);
    double right = simpson(m, b, fm, frm, fb);
    double delta = left + right - whole;
    // Accept on tolerance or once the cell has shrunk to roundoff width.
    if (std::fabs(delta) <= 15 * tol ||
        (b - a) <= 1e-14 * (std::fabs(a) + std::fabs(b) + 1e-6))
        return left + right + delta / 15.0;
    if (depth >= max_depth) {
        worst_depth = std::max(worst_depth, depth);
        if (std::fabs(delta) > 1e-12 * (1 + std::fabs(left) + std::fabs(right))) {
            std::ostringstream os;
            os << "adaptive Simpson failed to converge on [" << a << ", " << b
               << "]: depth " << depth << ", last correction " << delta;
            throw QuadratureError(os.str());
        }
        return left + right + delta / 15.0;
    }
    return adaptive_rec(f, a, m, fa, flm, fm, left, tol / 2, depth + 1, max_depth, worst_depth) +
           adaptive_rec(f, m, b, fm, frm, fb, right, tol / 2, depth + 1, max_depth, worst_depth);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth) {
    if (a == b) return 0.0;
    double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
    if (!std::isfinite(fa) || !std::isfinite(fm) || !std::isfinite(fb)) {
        std::ostringstream os;
        os << "non-finite integrand on [" << a << ", " << b << "]";
        throw QuadratureError(os.str());
    }
    double whole = simpson(a, b, fa, fm, fb);
    int worst = 0;
    return adaptive_rec(f, a, b, fa, fm, fb, whole, abs_tol, 0, max_depth, worst);
}

double adaptive_simpson_split(const std::function<double(double)>& f, double a, double b,
                              const std::vector<double>& breakpoints,
                              double abs_tol, int max_depth) {
    if (a == b) return 0.0;
    std::vector<double> pts;
    pts.push_back(a);
    for (double p : breakpoints)
        if (p > a && p < b) pts.push_back(p);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    double total = 0.0;
    double tol = abs_tol / std::max<size_t>(1, pts.size() - 1);
    for (size_t i = 0; i + 1 < pts.size(); ++i)
        if (pts[i + 1] > pts[i]) total += adaptive_simpson(f, pts[i], pts[i + 1], tol, max_depth);
    return total;
}

ImproperResult improper_toward_boundary(const std::function<double(double)>& f,
                                        double anchor, double boundary,
                                        double abs_tol, double cap) {
    ImproperResult out;
    const bool leftward = boundary < anchor;
    double total = 0.0;
    double near = anchor;
    double prev_slice = 0.0;
    bool have_prev = false;
    int stable = 0;

    // Slice k covers half of the remaining gap (finite boundary) or doubles the
    // covered distance (infinite boundary).
    for (int k = 0; k < 80; ++k) {
        double next;
        if (is_finite(boundary)) {
            next = boundary + 0.5 * (near - boundary);
        } else {
            double d = std::fabs(anchor - near);
            next = leftward ? near - std::max(1.0, 2 * d) : near + std::max(1.0, 2 * d);
        }
        if (next == near) break;
        double slice;
        try {
            slice = leftward ? adaptive_simpson(f, next, near, abs_tol)
                             : adaptive_simpson(f, near, next, abs_tol);
        } catch (const QuadratureError&) {
            out.finite = false;
            return out;
        }
        total += slice;
        if (std::fabs(total) > cap || !std::isfinite(total)) {
            out.finite = false;
            return out;
        }
        double as = std::fabs(slice);
        if (as < abs_tol * (1 + std::fabs(total))) {
            if (++stable >= 3) { out.value = total; return out; }
        } else {
            stable = 0;
            // Non-shrinking slices toward the boundary mean divergence.
            if (have_prev && as >= 0.999 * prev_slice && k > 6) {
                out.finite = false;
                return out;
            }
        }
        prev_slice = as;
        have_prev = true;
        near = next;
    }
    // Tail kept shrinking but never fell below tolerance within the budget:
    // classify by the trend.
    out.finite = have_prev && prev_slice < abs_tol * 1e4 * (1 + std::fabs(total));
    out.value = total;
    return out;
}

} // namespace iwpair
