#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "iwpair/interval.hpp"

namespace iwpair {

struct Atom {
    double at;
    double mass;
};

/// Radon measure on an open interval: a pointwise-evaluable non-negative
/// density against Lebesgue plus finitely many interior atoms. Breakpoints
/// mark density kinks/jumps so quadrature can split there.
class RadonMeasure {
public:
    RadonMeasure() = default;
    RadonMeasure(std::function<double(double)> density, std::vector<Atom> atoms,
                 std::vector<double> breakpoints = {});

    static RadonMeasure zero();
    static RadonMeasure lebesgue(double factor = 1.0);
    static RadonMeasure atoms_only(std::vector<Atom> atoms);

    double density(double x) const { return density_ ? density_(x) : 0.0; }
    bool has_density() const { return static_cast<bool>(density_); }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }

    /// Sum of atom masses in (lo, hi]; flips to [lo, hi) with include_lo.
    double atom_sum(double lo, double hi, bool include_lo = false, bool include_hi = true) const;

    /// Validates invariants against an interval: atoms strictly interior and
    /// pairwise distinct, density non-negative and compactly integrable on
    /// probe subintervals.
    void validate(const Interval& domain, const std::string& field = "measure") const;

    /// Stable fingerprint of the measure's identity, used to detect mixing of
    /// solutions built against different measures.
    uint64_t fingerprint(const Interval& domain) const;

private:
    std::function<double(double)> density_;
    std::vector<Atom> atoms_;
    std::vector<double> breakpoints_;
};

/// Integral of w against mu over (lo, hi]: adaptive quadrature on the density
/// part (tolerance per call), exact atom sums. Atom endpoint conventions are
/// controlled by the flags; the default matches (lo, hi].
double measure_integrate(const RadonMeasure& mu, const std::function<double(double)>& w,
                         double lo, double hi, double abs_tol = 1e-10,
                         bool include_lo_atom = false, bool include_hi_atom = true);

} // namespace iwpair
