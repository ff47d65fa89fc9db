#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "iwpair/diffusion.hpp"

namespace iwpair {

enum class Direction { increasing, decreasing };

/// How the relevant boundary was handled when producing a solution.
///   boundary_march:  marched from the boundary itself (finite scale limit,
///                    convergent criterion integral).
///   truncated_divergent: finite scale limit, divergent criterion integral;
///                    truncation shooting, kappa = 0.
///   truncated_infinite_scale: infinite scale limit; truncation shooting,
///                    kappa = 0.
enum class EndpointRegime { boundary_march, truncated_divergent, truncated_infinite_scale };

/// Data of the integral-equation problem for one monotone solution.
struct PairProblem {
    DiffusionSpec spec;
    RadonMeasure mu;
    Direction direction = Direction::increasing;
    double c = 0.0; // anchor, strictly interior
    double a = 1.0; // g(c) = a > 0
    std::optional<double> kappa; // forced value when known a priori

    void validate() const;
};

/// Grid representation of a monotone solution g with one-sided s-derivatives.
///
/// Between nodes (no atoms strictly inside a cell) g is C^1 in s; evaluation
/// uses the cubic Hermite in the s-variable built from (g, p) at the cell ends
/// and extrapolates affinely in s beyond the mesh.
class PairSolution {
public:
    PairSolution() = default;
    PairSolution(std::vector<double> x, std::vector<double> s, std::vector<double> g,
                 std::vector<double> p_minus, std::vector<double> p_plus,
                 double kappa, Direction dir, double c, double a,
                 ScaleFunction scale, Interval interval, EndpointRegime regime,
                 uint64_t measure_fingerprint);

    double value(double x) const;
    double slope_minus(double x) const; // d^-g/ds
    double slope_plus(double x) const;  // d^+g/ds

    const std::vector<double>& mesh() const { return x_; }
    const std::vector<double>& mesh_s() const { return s_; }
    const std::vector<double>& values() const { return g_; }
    const std::vector<double>& slopes_minus() const { return pm_; }
    const std::vector<double>& slopes_plus() const { return pp_; }

    double kappa() const { return kappa_; }
    Direction direction() const { return dir_; }
    double anchor_c() const { return c_; }
    double anchor_a() const { return a_; }
    EndpointRegime regime() const { return regime_; }
    const ScaleFunction& scale() const { return scale_; }
    const Interval& interval() const { return interval_; }
    uint64_t measure_fingerprint() const { return fingerprint_; }

private:
    size_t cell_of(double x) const;

    std::vector<double> x_, s_, g_, pm_, pp_;
    double kappa_ = 0.0;
    Direction dir_ = Direction::increasing;
    double c_ = 0.0, a_ = 1.0;
    ScaleFunction scale_;
    Interval interval_;
    EndpointRegime regime_ = EndpointRegime::boundary_march;
    uint64_t fingerprint_ = 0;
};

/// g = lambda1 * g_r + lambda2 * g_ell on the merged mesh.
class GeneralSolution {
public:
    GeneralSolution() = default;

    double lambda1() const { return l1_; }
    double lambda2() const { return l2_; }
    const PairSolution& gr() const { return gr_; }
    const PairSolution& gl() const { return gl_; }

    double value(double x) const { return l1_ * gr_.value(x) + l2_ * gl_.value(x); }
    double slope_minus(double x) const {
        return l1_ * gr_.slope_minus(x) + l2_ * gl_.slope_minus(x);
    }
    double slope_plus(double x) const {
        return l1_ * gr_.slope_plus(x) + l2_ * gl_.slope_plus(x);
    }

    const std::vector<double>& mesh() const { return x_; }
    double anchor_c() const { return c_; }
    const ScaleFunction& scale() const { return gr_.scale(); }
    const Interval& interval() const { return gr_.interval(); }
    uint64_t measure_fingerprint() const { return gr_.measure_fingerprint(); }

    friend GeneralSolution combine(double lambda1, double lambda2,
                                   const PairSolution& gr, const PairSolution& gl);

private:
    double l1_ = 1.0, l2_ = 0.0;
    PairSolution gr_, gl_;
    std::vector<double> x_;
    double c_ = 0.0;
};

/// Merged sum; requires both solutions built against the same measure
/// (fingerprints must match), lambda_i >= 0, lambda1 + lambda2 > 0.
GeneralSolution combine(double lambda1, double lambda2,
                        const PairSolution& gr, const PairSolution& gl);

/// Solves the 2x2 system lambda1*gr + lambda2*gl = g at two probe points.
/// Lambdas may come out negative; admissibility is the caller's concern.
struct Decomposition {
    double lambda1;
    double lambda2;
};
Decomposition fit_decomposition(double a0, double g_a0, double b0, double g_b0,
                                const PairSolution& gr, const PairSolution& gl);

} // namespace iwpair
