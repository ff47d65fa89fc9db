#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "iwpair/interval.hpp"

namespace iwpair {

/// Strictly increasing continuous scale function s on an open interval.
///
/// Representations: identity, affine, an arbitrary callable over analytic
/// primitives, or a tabulated grid with monotone cubic interpolation.
/// Boundary values s(lo+), s(hi-) are declared extended reals (a finite value
/// or +-infinity), never large-float stand-ins; branch logic downstream keys
/// on their exact finiteness.
class ScaleFunction {
public:
    /// Defaults to the identity on the whole line.
    ScaleFunction() = default;

    static ScaleFunction identity(Interval domain);
    static ScaleFunction affine(double slope, double intercept, Interval domain);

    /// Arbitrary increasing callable. Boundary limits must be declared when a
    /// domain end is infinite or the callable cannot be evaluated there;
    /// omitted limits are taken by direct evaluation at finite ends.
    static ScaleFunction custom(std::function<double(double)> s, Interval domain,
                                std::optional<double> left_limit = std::nullopt,
                                std::optional<double> right_limit = std::nullopt,
                                std::function<double(double)> inverse = nullptr,
                                std::function<double(double)> derivative = nullptr);

    /// Strictly increasing table, monotone cubic (Fritsch-Carlson) in between.
    static ScaleFunction tabulated(std::vector<double> xs, std::vector<double> ys,
                                   Interval domain,
                                   std::optional<double> left_limit = std::nullopt,
                                   std::optional<double> right_limit = std::nullopt);

    double operator()(double x) const;

    /// Inverse to ~1e-12 (closed form where available, else bisection).
    double inverse(double u) const;

    /// ds/dx; numerical stencil for representations without a closed form.
    double derivative(double x) const;

    /// s(lo+) in [-inf, inf): declared or evaluated limit.
    double left_limit() const { return left_limit_; }
    /// s(hi-) in (-inf, inf]: declared or evaluated limit.
    double right_limit() const { return right_limit_; }

    const Interval& domain() const { return domain_; }

private:
    enum class Kind { identity, affine, custom, table };

    Kind kind_ = Kind::identity;
    Interval domain_;
    double slope_ = 1.0, intercept_ = 0.0;
    std::function<double(double)> f_, finv_, fprime_;
    std::vector<double> xs_, ys_, ms_; // table nodes and Hermite slopes
    double left_limit_ = -kInf, right_limit_ = kInf;

    void finalize_limits(std::optional<double> left, std::optional<double> right);
    double table_eval(double x) const;
    double table_derivative(double x) const;
    double bisect_inverse(double u) const;
};

} // namespace iwpair
