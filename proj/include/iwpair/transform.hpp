#pragma once

#include "iwpair/pair.hpp"

namespace iwpair {

/// The diffusion seen under the measure change attached to (g, A): scale
/// s_g = int_c ds/g^2, speed m_g = g^2 m, always transient when the base is
/// recurrent and the measure charges the interval.
///
/// s_g is accumulated per mesh cell in closed form under the linear-in-s
/// interpolation of g, which is exact for pure-atom measures. Tail values
/// u_l = s_g(lo+) and u_r = s_g(hi-) come from the affine continuation of g
/// past the mesh: finiteness is a branch decision, not a number.
class TransformedDiffusion {
public:
    TransformedDiffusion() = default;

    const DiffusionSpec& base() const { return base_; }
    const GeneralSolution& g() const { return g_; }

    double s_g(double x) const;
    double s_g_inverse(double u) const;
    /// ds_g/dx = s'(x) / g(x)^2.
    double s_g_derivative(double x) const;

    double u_l() const { return u_l_; }
    double u_r() const { return u_r_; }
    bool attainable_left() const { return is_finite(u_l_); }
    bool attainable_right() const { return is_finite(u_r_); }
    bool transient() const { return attainable_left() || attainable_right(); }

    /// Speed measure g^2 m of the transformed diffusion.
    const RadonMeasure& m_g() const { return m_g_; }

    bool has_drift() const { return base_.sde.has_value(); }
    /// b(x) + sigma^2(x) g'(x)/g(x), the left s-derivative of g at kinks.
    double drift(double x) const;
    double sigma(double x) const { return base_.sde->sigma(x); }

    /// Transient potential density (w.r.t. m_g) built from s_g and the tails.
    double potential(double x, double y) const;

    const std::vector<double>& mesh() const { return x_; }
    const std::vector<double>& s_g_mesh() const { return u_; }

    friend TransformedDiffusion transform(const DiffusionSpec& spec, const GeneralSolution& g);

private:
    DiffusionSpec base_;
    GeneralSolution g_;
    std::vector<double> x_, s_, u_; // mesh, base scale, transformed scale
    double u_l_ = -kInf, u_r_ = kInf;
    RadonMeasure m_g_;
};

/// Applies the measure change: computes s_g, m_g and boundary tail values.
TransformedDiffusion transform(const DiffusionSpec& spec, const GeneralSolution& g);

/// Revuz measures transform as mu_g = g^2 mu.
RadonMeasure transform_measure(const GeneralSolution& g, const RadonMeasure& mu);

struct BoundaryProbabilities {
    double to_left;
    double to_right;
};

/// Scale-ratio exit probabilities under the transformed law; an error when the
/// transformed diffusion is recurrent (both tails infinite).
BoundaryProbabilities q_boundary_probabilities(const TransformedDiffusion& td, double x);

/// Q^x(T_y < infinity) = u_g(x, y) / u_g(y, y).
double q_hitting_probability(const TransformedDiffusion& td, double x, double y);

/// Exponential rate of the total local time at y under the transformed law
/// started at y: s_g'(y) / (2 u_g(y, y)).
double local_time_terminal_rate(const TransformedDiffusion& td, double y);

} // namespace iwpair
