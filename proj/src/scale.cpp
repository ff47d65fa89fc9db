#include "iwpair/scale.hpp"

#include <algorithm>
#include <cmath>

#include "iwpair/errors.hpp"

namespace iwpair {

namespace {

// Fritsch-Carlson slopes: monotone cubic Hermite through strictly increasing data.
std::vector<double> monotone_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    std::vector<double> d(n - 1), m(n);
    for (size_t i = 0; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for (size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0) { m[i] = 0.0; continue; }
        double w1 = 2 * (x[i + 1] - x[i]) + (x[i] - x[i - 1]);
        double w2 = (x[i + 1] - x[i]) + 2 * (x[i] - x[i - 1]);
        m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
    }
    // Clamp to preserve strict monotonicity.
    for (size_t i = 0; i + 1 < n; ++i) {
        if (d[i] == 0) { m[i] = m[i + 1] = 0; continue; }
        double a = m[i] / d[i], b = m[i + 1] / d[i];
        double s = a * a + b * b;
        if (s > 9.0) {
            double t = 3.0 / std::sqrt(s);
            m[i] = t * a * d[i];
            m[i + 1] = t * b * d[i];
        }
    }
    return m;
}

double hermite(double x, double x0, double x1, double y0, double y1, double m0, double m1) {
    double h = x1 - x0, t = (x - x0) / h;
    double t2 = t * t, t3 = t2 * t;
    return y0 * (2 * t3 - 3 * t2 + 1) + h * m0 * (t3 - 2 * t2 + t) +
           y1 * (-2 * t3 + 3 * t2) + h * m1 * (t3 - t2);
}

double hermite_deriv(double x, double x0, double x1, double y0, double y1, double m0, double m1) {
    double h = x1 - x0, t = (x - x0) / h;
    double t2 = t * t;
    return (y0 * (6 * t2 - 6 * t) / h + m0 * (3 * t2 - 4 * t + 1) +
            y1 * (-6 * t2 + 6 * t) / h + m1 * (3 * t2 - 2 * t));
}

} // namespace

ScaleFunction ScaleFunction::identity(Interval domain) {
    ScaleFunction s;
    s.kind_ = Kind::identity;
    s.domain_ = domain;
    s.finalize_limits(std::nullopt, std::nullopt);
    return s;
}

ScaleFunction ScaleFunction::affine(double slope, double intercept, Interval domain) {
    if (!(slope > 0)) throw ValidationError("scale.slope", "must be positive");
    ScaleFunction s;
    s.kind_ = Kind::affine;
    s.slope_ = slope;
    s.intercept_ = intercept;
    s.domain_ = domain;
    s.finalize_limits(std::nullopt, std::nullopt);
    return s;
}

ScaleFunction ScaleFunction::custom(std::function<double(double)> f, Interval domain,
                                    std::optional<double> left_limit,
                                    std::optional<double> right_limit,
                                    std::function<double(double)> inverse,
                                    std::function<double(double)> derivative) {
    ScaleFunction s;
    s.kind_ = Kind::custom;
    s.f_ = std::move(f);
    s.finv_ = std::move(inverse);
    s.fprime_ = std::move(derivative);
    s.domain_ = domain;
    s.finalize_limits(left_limit, right_limit);
    return s;
}

ScaleFunction ScaleFunction::tabulated(std::vector<double> xs, std::vector<double> ys,
                                       Interval domain,
                                       std::optional<double> left_limit,
                                       std::optional<double> right_limit) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw ValidationError("scale.table", "need matching x/s arrays of length >= 2");
    for (size_t i = 0; i + 1 < xs.size(); ++i)
        if (!(xs[i] < xs[i + 1]) || !(ys[i] < ys[i + 1]))
            throw ValidationError("scale.table", "entries must be strictly increasing");
    ScaleFunction s;
    s.kind_ = Kind::table;
    s.ms_ = monotone_slopes(xs, ys);
    s.xs_ = std::move(xs);
    s.ys_ = std::move(ys);
    s.domain_ = domain;
    s.finalize_limits(left_limit, right_limit);
    return s;
}

void ScaleFunction::finalize_limits(std::optional<double> left, std::optional<double> right) {
    auto eval_or_limit = [&](double bound, bool is_left) -> double {
        if (!is_finite(bound)) {
            if (kind_ == Kind::identity) return bound;
            if (kind_ == Kind::affine) return is_left ? -kInf : kInf;
            if (kind_ == Kind::custom) {
                // Probe geometrically; declared limits are preferred for custom scales.
                double ref = is_finite(is_left ? domain_.hi : domain_.lo)
                                 ? (is_left ? domain_.hi : domain_.lo)
                                 : 0.0;
                double prev = f_(is_left ? ref - 1 : ref + 1);
                for (double step = 2; step <= (1 << 28); step *= 2) {
                    double v = f_(is_left ? ref - step : ref + step);
                    if (std::fabs(v - prev) < 1e-11 * (1 + std::fabs(v))) return v;
                    prev = v;
                }
                return is_left ? -kInf : kInf;
            }
            // Tabulated beyond the grid: treat as unbounded extension.
            return is_left ? -kInf : kInf;
        }
        return (*this)(bound);
    };
    left_limit_ = left ? *left : eval_or_limit(domain_.lo, true);
    right_limit_ = right ? *right : eval_or_limit(domain_.hi, false);
    if (!(left_limit_ < right_limit_))
        throw ValidationError("scale", "boundary limits must satisfy s(lo+) < s(hi-)");
}

double ScaleFunction::operator()(double x) const {
    switch (kind_) {
        case Kind::identity: return x;
        case Kind::affine: return slope_ * x + intercept_;
        case Kind::custom: return f_(x);
        case Kind::table: return table_eval(x);
    }
    return x;
}

double ScaleFunction::table_eval(double x) const {
    if (x <= xs_.front())
        return ys_.front() + ms_.front() * (x - xs_.front());
    if (x >= xs_.back())
        return ys_.back() + ms_.back() * (x - xs_.back());
    size_t i = std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin() - 1;
    return hermite(x, xs_[i], xs_[i + 1], ys_[i], ys_[i + 1], ms_[i], ms_[i + 1]);
}

double ScaleFunction::table_derivative(double x) const {
    if (x <= xs_.front()) return ms_.front();
    if (x >= xs_.back()) return ms_.back();
    size_t i = std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin() - 1;
    return hermite_deriv(x, xs_[i], xs_[i + 1], ys_[i], ys_[i + 1], ms_[i], ms_[i + 1]);
}

double ScaleFunction::inverse(double u) const {
    switch (kind_) {
        case Kind::identity: return u;
        case Kind::affine: return (u - intercept_) / slope_;
        case Kind::custom:
            if (finv_) return finv_(u);
            return bisect_inverse(u);
        case Kind::table: return bisect_inverse(u);
    }
    return u;
}

double ScaleFunction::bisect_inverse(double u) const {
    // Bracket on the domain, expanding geometrically past infinite ends.
    double lo = domain_.lo, hi = domain_.hi;
    double ref = 0.0;
    if (is_finite(lo) && is_finite(hi)) ref = 0.5 * (lo + hi);
    else if (is_finite(lo)) ref = lo + 1;
    else if (is_finite(hi)) ref = hi - 1;
    if (!is_finite(lo)) {
        lo = ref - 1;
        while ((*this)(lo) > u) { lo = ref - 2 * (ref - lo); if (lo < -1e300) break; }
    }
    if (!is_finite(hi)) {
        hi = ref + 1;
        while ((*this)(hi) < u) { hi = ref + 2 * (hi - ref); if (hi > 1e300) break; }
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if ((*this)(mid) < u) lo = mid; else hi = mid;
        if (hi - lo < 1e-12 * (1 + std::fabs(lo) + std::fabs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

double ScaleFunction::derivative(double x) const {
    switch (kind_) {
        case Kind::identity: return 1.0;
        case Kind::affine: return slope_;
        case Kind::custom: {
            if (fprime_) return fprime_(x);
            // 5-point stencil; h tied to local magnitude.
            double h = 1e-5 * (1 + std::fabs(x));
            double lo = domain_.lo, hi = domain_.hi;
            if (is_finite(lo)) h = std::min(h, 0.25 * (x - lo));
            if (is_finite(hi)) h = std::min(h, 0.25 * (hi - x));
            if (!(h > 0)) throw ValidationError("scale", "derivative requested at boundary");
            double f1 = f_(x - 2 * h), f2 = f_(x - h), f3 = f_(x + h), f4 = f_(x + 2 * h);
            return (f1 - 8 * f2 + 8 * f3 - f4) / (12 * h);
        }
        case Kind::table: return table_derivative(x);
    }
    return 1.0;
}

} // namespace iwpair
