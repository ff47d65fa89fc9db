#pragma once

#include <functional>

#include "iwpair/solve.hpp"
#include "iwpair/transform.hpp"

namespace iwpair {

/// Reward f for the discounted stopping problem, with declared boundary limits
/// of f/g; an absent limit means "extrapolate from the tail samples".
struct RewardSpec {
    std::function<double(double)> f;
    std::optional<double> limit_left;
    std::optional<double> limit_right;
};

struct FinitenessReport {
    bool bounded = true;
    double sup = 0.0;
    std::optional<double> witness_x; // where the ratio blew past the cap
};

/// Samples f/g on a boundary-refined grid plus the declared limits; verdict
/// "unbounded" comes with a witness location.
FinitenessReport check_finiteness(const RewardSpec& reward, const GeneralSolution& g,
                                  double lo, double hi, double cap = 1e10);

/// Smallest concave majorant of sampled points, a single monotone-chain pass.
class MajorantResult {
public:
    MajorantResult() = default;
    MajorantResult(std::vector<double> knots_u, std::vector<double> knots_g,
                   std::vector<size_t> contact);

    double value(double u) const; // piecewise linear through the knots
    const std::vector<double>& knots_u() const { return u_; }
    const std::vector<double>& knots_value() const { return g_; }
    /// Knot indices where the majorant touches the sampled function.
    const std::vector<size_t>& contact_set() const { return contact_; }
    double left_value() const { return g_.front(); }
    double right_value() const { return g_.back(); }

private:
    std::vector<double> u_, g_;
    std::vector<size_t> contact_;
};

/// Upper concave envelope of (u_i, phi_i); u strictly increasing, all values
/// finite, at least two samples.
MajorantResult concave_majorant(const std::vector<double>& u, const std::vector<double>& phi,
                                double contact_tol = 1e-9);

enum class OptimalityVerdict { optimal, not_optimal, undetermined };

struct StoppingOptions {
    double anchor_c = 0.0;         // anchor for the pair solutions
    std::optional<double> domain_lo, domain_hi;
    size_t grid_points = 4096;     // u-grid resolution before boundary refinement
    double epsilon = 1e-4;         // reported epsilon-optimal rule
    double contact_tol = 1e-9;
    SolveOptions solver;
};

/// Value function, stopping region and optimality verdict of
///   V(x) = sup E^x[ e^{-A_tau} f(X_tau); tau < lifetime ].
class StoppingSolution {
public:
    StoppingSolution() = default;

    double value(double x) const;
    bool stop_at(double x) const;
    /// Stopping region as closed x-intervals (ends may be infinite).
    const std::vector<std::pair<double, double>>& stopping_region() const { return region_; }
    /// Inflated region of the epsilon-optimal rule f/g + eps >= G.
    const std::vector<std::pair<double, double>>& epsilon_region() const { return eps_region_; }

    OptimalityVerdict verdict() const { return verdict_; }
    const std::string& verdict_reason() const { return verdict_reason_; }
    double epsilon() const { return epsilon_; }

    const TransformedDiffusion& transformed() const { return td_; }
    const MajorantResult& majorant() const { return majorant_; }
    const GeneralSolution& gain() const { return td_.g(); }
    const std::function<double(double)>& reward() const { return f_; }

    friend StoppingSolution solve_stopping(const DiffusionSpec& spec, const RadonMeasure& mu_A,
                                           double lambda1, double lambda2,
                                           const RewardSpec& reward,
                                           const StoppingOptions& opts);

private:
    TransformedDiffusion td_;
    MajorantResult majorant_;
    std::function<double(double)> f_;
    std::vector<std::pair<double, double>> region_, eps_region_;
    OptimalityVerdict verdict_ = OptimalityVerdict::undetermined;
    std::string verdict_reason_;
    double epsilon_ = 1e-4;
};

/// Full pipeline: solve both monotone pairs, combine with strictly positive
/// weights, transform, build the majorant in the s_g coordinate, extract the
/// stopping region and the optimality verdict.
StoppingSolution solve_stopping(const DiffusionSpec& spec, const RadonMeasure& mu_A,
                                double lambda1, double lambda2, const RewardSpec& reward,
                                const StoppingOptions& opts = {});

inline double value_at(const StoppingSolution& sol, double x) { return sol.value(x); }
inline bool stopping_indicator(const StoppingSolution& sol, double x) { return sol.stop_at(x); }

} // namespace iwpair
