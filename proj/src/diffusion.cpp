#include "iwpair/diffusion.hpp"

#include <cmath>
#include <sstream>

#include "iwpair/errors.hpp"
#include "iwpair/quadrature.hpp"

namespace iwpair {

DiffusionSpec DiffusionSpec::brownian(Interval iv) {
    DiffusionSpec spec;
    spec.interval = iv;
    spec.scale = ScaleFunction::identity(iv);
    spec.speed = RadonMeasure::lebesgue(2.0);
    spec.sde = SdeCoefficients{[](double) { return 0.0; }, [](double) { return 1.0; }};
    return spec;
}

DiffusionSpec DiffusionSpec::from_sde(std::function<double(double)> drift,
                                      std::function<double(double)> sigma,
                                      Interval iv, double x0) {
    DiffusionSpec spec;
    spec.interval = iv;
    auto b = drift;
    auto s2 = [sigma](double x) {
        double v = sigma(x);
        return v * v;
    };
    auto log_sprime = [b, s2](double x) {
        return -adaptive_simpson([&](double y) { return 2.0 * b(y) / s2(y); },
                                 0.0, x, 1e-10) ;
    };
    // s(x) = int_x0^x exp(log_sprime); nested quadrature is fine at spec scale.
    auto sfun = [log_sprime, x0](double x) {
        return adaptive_simpson([&](double y) { return std::exp(log_sprime(y)); }, x0, x, 1e-10);
    };
    auto sprime = [log_sprime](double x) { return std::exp(log_sprime(x)); };
    spec.scale = ScaleFunction::custom(sfun, iv, std::nullopt, std::nullopt, nullptr, sprime);
    spec.speed = RadonMeasure(
        [s2, sprime](double x) { return 2.0 / (s2(x) * sprime(x)); }, {});
    spec.sde = SdeCoefficients{std::move(drift), std::move(sigma)};
    return spec;
}

void DiffusionSpec::validate() const {
    speed.validate(interval, "speed");
    // Scale monotone on probes.
    double lo = is_finite(interval.lo) ? interval.lo : -8.0;
    double hi = is_finite(interval.hi) ? interval.hi : 8.0;
    double prev = -kInf;
    for (int i = 0; i <= 24; ++i) {
        double x = interval.clamp_interior(lo + (i + 0.5) / 25.0 * (hi - lo), 1e-9);
        double v = scale(x);
        if (!(v > prev))
            throw ValidationError("scale", "not strictly increasing at sampled points");
        prev = v;
        double xi = scale.inverse(v);
        if (std::fabs(xi - x) > 1e-9 * (1 + std::fabs(x)))
            throw ValidationError("scale", "inverse inconsistent with forward evaluation");
    }
    if (sde) {
        // s'(x)/s'(x0) must match exp(-int 2b/sigma^2) and the speed density 2/(sigma^2 s').
        double x0 = interval.clamp_interior(0.5 * (lo + hi));
        for (int i = 1; i <= 5; ++i) {
            double x = interval.clamp_interior(lo + i / 6.0 * (hi - lo), 1e-6);
            double lhs = scale.derivative(x) / scale.derivative(x0);
            double rhs = std::exp(-adaptive_simpson(
                [&](double y) {
                    double s = sde->sigma(y);
                    return 2.0 * sde->drift(y) / (s * s);
                },
                x0, x, 1e-10));
            if (std::fabs(lhs - rhs) > 1e-6 * (1 + std::fabs(rhs)))
                throw ValidationError("sde", "scale inconsistent with drift/sigma");
            double sg = sde->sigma(x);
            double want = 2.0 / (sg * sg * scale.derivative(x));
            double have = speed.density(x);
            if (std::fabs(want - have) > 1e-6 * (1 + std::fabs(want)))
                throw ValidationError("sde", "speed density inconsistent with drift/sigma");
        }
    }
}

BoundaryClassification classify_boundaries(const DiffusionSpec& spec, const RadonMeasure& mu) {
    BoundaryClassification out;
    const double sl = spec.scale.left_limit();
    const double sr = spec.scale.right_limit();
    out.scale_finite_left = is_finite(sl);
    out.scale_finite_right = is_finite(sr);
    out.recurrent = !out.scale_finite_left && !out.scale_finite_right;

    const bool mu_trivial = !mu.has_density() && mu.atoms().empty();
    double c = spec.interval.clamp_interior(
        0.5 * (is_finite(spec.interval.lo) ? spec.interval.lo : -1.0) +
        0.5 * (is_finite(spec.interval.hi) ? spec.interval.hi : 1.0));

    auto criterion = [&](bool left) -> CafVerdict {
        if (mu_trivial) return CafVerdict::finite;
        double boundary = left ? spec.interval.lo : spec.interval.hi;
        double slim = left ? sl : sr;
        auto weight = [&](double y) {
            return left ? (spec.scale(y) - slim) : (slim - spec.scale(y));
        };
        // Atoms first: finitely many interior points, each with finite weight.
        double atom_part = 0.0;
        for (const Atom& a : mu.atoms()) {
            bool relevant = left ? a.at < c : a.at > c;
            if (relevant) atom_part += weight(a.at) * a.mass;
        }
        if (!mu.has_density())
            return std::isfinite(atom_part) ? CafVerdict::finite : CafVerdict::infinite;
        ImproperResult r = improper_toward_boundary(
            [&](double y) { return weight(y) * mu.density(y); }, c, boundary, 1e-10);
        if (!r.finite) return CafVerdict::infinite;
        return CafVerdict::finite;
    };

    out.caf_left = out.scale_finite_left ? criterion(true) : CafVerdict::not_applicable;
    out.caf_right = out.scale_finite_right ? criterion(false) : CafVerdict::not_applicable;
    return out;
}

double killed_potential_density(const DiffusionSpec& spec, double a, double b,
                                double x, double y) {
    const auto& s = spec.scale;
    const double lo = spec.interval.lo, hi = spec.interval.hi;
    const bool a_is_boundary = (a <= lo);
    const bool b_is_boundary = (b >= hi);
    const double sa = a_is_boundary ? s.left_limit() : s(a);
    const double sb = b_is_boundary ? s.right_limit() : s(b);

    // Closed endpoints are allowed; the kernel vanishes there.
    if (x < a || x > b || y < a || y > b)
        throw ValidationError("killed_potential_density", "arguments outside (a, b)");

    const double sxy_lo = s(std::min(x, y));
    const double sxy_hi = s(std::max(x, y));

    if (!is_finite(sa) && !is_finite(sb))
        throw ValidationError("killed_potential_density",
                              "potential undefined: both scale limits infinite");
    if (!is_finite(sa)) return sb - sxy_hi;
    if (!is_finite(sb)) return sxy_lo - sa;
    return (sxy_lo - sa) * (sb - sxy_hi) / (sb - sa);
}

double caf_potential(const DiffusionSpec& spec, const RadonMeasure& mu,
                     const std::function<double(double)>& f, double x,
                     std::optional<double> kill_lo, std::optional<double> kill_hi) {
    double a = kill_lo.value_or(spec.interval.lo);
    double b = kill_hi.value_or(spec.interval.hi);
    const double sa = (a <= spec.interval.lo) ? spec.scale.left_limit() : spec.scale(a);
    const double sb = (b >= spec.interval.hi) ? spec.scale.right_limit() : spec.scale(b);
    if (!is_finite(sa) && !is_finite(sb))
        throw ValidationError("caf_potential", "potential undefined for a recurrent diffusion "
                                               "without a killing level");
    auto w = [&](double y) { return killed_potential_density(spec, a, b, x, y) * f(y); };
    double lo = a, hi = b;
    if (!is_finite(lo)) lo = spec.interval.lo;
    if (!is_finite(hi)) hi = spec.interval.hi;

    double total = 0.0;
    for (const Atom& at : mu.atoms())
        if (at.at > lo && at.at < hi) total += w(at.at) * at.mass;
    if (mu.has_density()) {
        // Split at the kink y = x; handle infinite ends by improper slicing.
        auto g = [&](double y) { return w(y) * mu.density(y); };
        double core_lo = is_finite(lo) ? lo : std::min(x, 0.0) - 1.0;
        double core_hi = is_finite(hi) ? hi : std::max(x, 0.0) + 1.0;
        std::vector<double> splits = mu.breakpoints();
        splits.push_back(x);
        total += adaptive_simpson_split(g, core_lo, core_hi, splits, 1e-10);
        if (!is_finite(lo)) {
            ImproperResult r = improper_toward_boundary(g, core_lo, lo, 1e-10);
            if (!r.finite) throw QuadratureError("caf_potential: divergent tail toward lo");
            total += r.value;
        }
        if (!is_finite(hi)) {
            ImproperResult r = improper_toward_boundary(g, core_hi, hi, 1e-10);
            if (!r.finite) throw QuadratureError("caf_potential: divergent tail toward hi");
            total += r.value;
        }
    }
    return total;
}

} // namespace iwpair
