#pragma once

#include <cmath>
#include <limits>

#include "iwpair/errors.hpp"

namespace iwpair {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_finite(double v) { return std::isfinite(v); }

/// Open state interval (lo, hi); either end may be infinite. Boundaries are
/// limits, never interior points.
struct Interval {
    double lo = -kInf;
    double hi = kInf;

    Interval() = default;
    Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (!(lo < hi)) throw ValidationError("interval", "requires lo < hi");
        if (std::isnan(lo) || std::isnan(hi)) throw ValidationError("interval", "NaN bound");
    }

    bool contains(double x) const { return x > lo && x < hi; }
    bool bounded() const { return is_finite(lo) && is_finite(hi); }

    /// Clamps x into the open interval, nudging by eps relative to a reference span.
    double clamp_interior(double x, double eps = 1e-12) const {
        double span = bounded() ? hi - lo : 1.0;
        if (is_finite(lo) && x <= lo) return lo + eps * span;
        if (is_finite(hi) && x >= hi) return hi - eps * span;
        return x;
    }
};

} // namespace iwpair
