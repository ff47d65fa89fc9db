#include "iwpair/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "iwpair/errors.hpp"
#include "iwpair/quadrature.hpp"

namespace iwpair {

RadonMeasure::RadonMeasure(std::function<double(double)> density, std::vector<Atom> atoms,
                           std::vector<double> breakpoints)
    : density_(std::move(density)), atoms_(std::move(atoms)),
      breakpoints_(std::move(breakpoints)) {
    std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.at < b.at; });
    std::sort(breakpoints_.begin(), breakpoints_.end());
}

RadonMeasure RadonMeasure::zero() { return RadonMeasure(nullptr, {}); }

RadonMeasure RadonMeasure::lebesgue(double factor) {
    return RadonMeasure([factor](double) { return factor; }, {});
}

RadonMeasure RadonMeasure::atoms_only(std::vector<Atom> atoms) {
    return RadonMeasure(nullptr, std::move(atoms));
}

double RadonMeasure::atom_sum(double lo, double hi, bool include_lo, bool include_hi) const {
    double s = 0.0;
    for (const Atom& a : atoms_) {
        bool in = (a.at > lo || (include_lo && a.at == lo)) &&
                  (a.at < hi || (include_hi && a.at == hi));
        if (in) s += a.mass;
    }
    return s;
}

void RadonMeasure::validate(const Interval& domain, const std::string& field) const {
    for (size_t i = 0; i < atoms_.size(); ++i) {
        if (!(atoms_[i].mass > 0))
            throw ValidationError(field + ".atoms", "atom mass must be positive");
        if (!domain.contains(atoms_[i].at))
            throw ValidationError(field + ".atoms", "atom location must be strictly interior");
        if (i > 0 && atoms_[i].at == atoms_[i - 1].at)
            throw ValidationError(field + ".atoms", "atom locations must be pairwise distinct");
    }
    if (density_) {
        // Probe compact subintervals for non-negativity and finite mass.
        double lo = is_finite(domain.lo) ? domain.lo : -8.0;
        double hi = is_finite(domain.hi) ? domain.hi : 8.0;
        if (!(lo < hi)) { lo = domain.lo; hi = domain.hi; }
        for (int i = 0; i <= 32; ++i) {
            double t = (i + 0.5) / 33.0;
            double x = domain.clamp_interior(lo + t * (hi - lo), 1e-9);
            double v = density_(x);
            if (std::isnan(v)) throw ValidationError(field + ".density", "NaN density");
            if (v < 0) throw ValidationError(field + ".density", "density must be non-negative");
        }
        double a = domain.clamp_interior(lo + 0.05 * (hi - lo), 1e-6);
        double b = domain.clamp_interior(lo + 0.95 * (hi - lo), 1e-6);
        double mass = adaptive_simpson_split(density_, a, b, breakpoints_, 1e-8);
        if (!std::isfinite(mass))
            throw ValidationError(field + ".density", "infinite mass on a compact subinterval");
    }
}

uint64_t RadonMeasure::fingerprint(const Interval& domain) const {
    auto mix = [](uint64_t h, uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return h;
    };
    auto bits = [](double d) {
        uint64_t u;
        static_assert(sizeof(u) == sizeof(d));
        std::memcpy(&u, &d, sizeof(u));
        return u;
    };
    uint64_t h = 0x6a09e667f3bcc908ULL;
    h = mix(h, bits(domain.lo));
    h = mix(h, bits(domain.hi));
    for (const Atom& a : atoms_) {
        h = mix(h, bits(a.at));
        h = mix(h, bits(a.mass));
    }
    if (density_) {
        double lo = is_finite(domain.lo) ? domain.lo : -8.0;
        double hi = is_finite(domain.hi) ? domain.hi : 8.0;
        for (int i = 0; i < 17; ++i) {
            double x = domain.clamp_interior(lo + (i + 0.5) / 17.0 * (hi - lo), 1e-9);
            h = mix(h, bits(density_(x)));
        }
    }
    return h;
}

double measure_integrate(const RadonMeasure& mu, const std::function<double(double)>& w,
                         double lo, double hi, double abs_tol,
                         bool include_lo_atom, bool include_hi_atom) {
    if (!(lo <= hi)) throw ValidationError("measure_integrate", "requires lo <= hi");
    double total = 0.0;
    if (mu.has_density() && hi > lo) {
        auto f = [&](double x) { return w(x) * mu.density(x); };
        std::vector<double> splits = mu.breakpoints();
        for (const Atom& a : mu.atoms()) splits.push_back(a.at);
        total += adaptive_simpson_split(f, lo, hi, splits, abs_tol);
    }
    for (const Atom& a : mu.atoms()) {
        bool in = (a.at > lo || (include_lo_atom && a.at == lo)) &&
                  (a.at < hi || (include_hi_atom && a.at == hi));
        if (in) total += w(a.at) * a.mass;
    }
    return total;
}

} // namespace iwpair
