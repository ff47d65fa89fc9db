#pragma once

#include <functional>
#include <optional>

#include "iwpair/interval.hpp"
#include "iwpair/measure.hpp"
#include "iwpair/scale.hpp"

namespace iwpair {

/// Optional SDE form dX = b(X)dt + sigma(X)dW of a diffusion.
struct SdeCoefficients {
    std::function<double(double)> drift;
    std::function<double(double)> sigma; // > 0
};

/// A one-dimensional regular diffusion on an open interval given by scale and
/// speed (killing measure identically zero in the interior). Convention:
/// standard Brownian motion has s(x) = x and m(dx) = 2dx.
struct DiffusionSpec {
    Interval interval;
    ScaleFunction scale;
    RadonMeasure speed;
    std::optional<SdeCoefficients> sde;

    /// BM-like diffusion on natural scale: s = id, m = 2dx, dX = dW.
    static DiffusionSpec brownian(Interval iv = Interval{});

    /// Builds scale and speed from SDE coefficients with s'(x) = exp(-int 2b/sigma^2)
    /// anchored at x0 and m = 2dx/(sigma^2 s').
    static DiffusionSpec from_sde(std::function<double(double)> drift,
                                  std::function<double(double)> sigma,
                                  Interval iv, double x0 = 0.0);

    bool recurrent() const {
        return !is_finite(scale.left_limit()) && !is_finite(scale.right_limit());
    }

    /// Checks scale/speed/SDE consistency at probe points; throws ValidationError.
    void validate() const;
};

enum class CafVerdict { finite, infinite, not_applicable };

/// Scale-limit finiteness per boundary, global recurrence, and the per-boundary
/// verdict on whether the additive functional stays finite on paths absorbed there.
struct BoundaryClassification {
    bool scale_finite_left = false;
    bool scale_finite_right = false;
    bool recurrent = false;
    CafVerdict caf_left = CafVerdict::not_applicable;
    CafVerdict caf_right = CafVerdict::not_applicable;
};

/// Decides recurrence from scale limits and, at each boundary with finite scale
/// limit, whether int (s - s(boundary)) d(mu) converges near that boundary.
BoundaryClassification classify_boundaries(const DiffusionSpec& spec, const RadonMeasure& mu);

/// Potential density u(a,b;x,y) of the diffusion killed outside (a, b), with
/// respect to the speed measure:
///   (s(x^y) - s(a)) (s(b) - s(xvy)) / (s(b) - s(a)),
/// taking the monotone limits when a -> lo with s(lo+) = -inf (value
/// s(b) - s(xvy)) and symmetrically at the right end. Pass the interval
/// boundary itself for a or b to request the limit form.
double killed_potential_density(const DiffusionSpec& spec, double a, double b,
                                double x, double y);

/// E^x int f(X) dA for the CAF with Revuz measure mu, via quadrature against
/// the potential density. kill_lo/kill_hi default to the interval ends; a
/// recurrent spec without a killing window is an error ("potential undefined").
double caf_potential(const DiffusionSpec& spec, const RadonMeasure& mu,
                     const std::function<double(double)>& f, double x,
                     std::optional<double> kill_lo = std::nullopt,
                     std::optional<double> kill_hi = std::nullopt);

} // namespace iwpair
