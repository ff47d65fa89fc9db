#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "iwpair/transform.hpp"

namespace iwpair {

enum class Scheme { euler_sde, scale_random_walk };

struct SimConfig {
    Scheme scheme = Scheme::euler_sde;
    double step = 1e-3;          // time step (euler) or s-grid spacing (walk)
    double band_halfwidth = 0.0; // local-time band; 0 = 4 sqrt(sigma^2 step)
    int64_t n_paths = 10000;
    uint64_t seed = 1;
    double horizon = 1e4;        // time cap per path (euler)
    int64_t max_steps = 20'000'000;
    bool adaptive_step = true;   // grow dt quadratically away from the sensitive set
    int threads = 0;             // 0 = hardware concurrency (capped)
};

struct EstimateResult {
    double mean = 0.0;
    double std_error = 0.0;
    int64_t n_effective = 0;
    double truncation_rate = 0.0; // fraction of paths cut by horizon/step caps
    bool flagged = false;         // truncation rate above 1%, or scheme warnings
    std::string note;
    // Set by estimate_local_time_total: sample coefficient of variation and
    // its delta-method standard error.
    double cv = 0.0;
    double cv_std_error = 0.0;
};

/// Path ensemble terminal states at the horizon.
struct PathEnsemble {
    std::vector<double> x; // terminal positions
    std::vector<double> a; // accrued additive functional
    std::vector<double> t; // elapsed time (== horizon unless absorbed)
};

/// Simulates the diffusion with CAF accrual to the horizon. Density parts
/// accrue as q(X) dt with q = d(mu)/dm; atoms through a two-band occupation
/// estimator normalized by the speed measure of the band.
PathEnsemble simulate(const DiffusionSpec& spec, const RadonMeasure& mu_A, double x0,
                      const SimConfig& config);

/// Same under the transformed dynamics; the accrued functional has Revuz
/// measure mu w.r.t. the transformed speed measure.
PathEnsemble simulate(const TransformedDiffusion& td, const RadonMeasure& mu, double x0,
                      const SimConfig& config);

/// E^x[ 1{T_c before the far boundary} e^{-A_{T_c}} ]; the target of g_r(x)/a
/// (mirrored for the decreasing solution).
EstimateResult estimate_pair_value(const DiffusionSpec& spec, const RadonMeasure& mu_A,
                                   double x, double c, const SimConfig& config);

/// E^x[ g(X_{T_ab}) e^{-A_{T_ab}} ] - g(x); zero in expectation for an
/// Ito-Watanabe pair.
EstimateResult martingale_check(const DiffusionSpec& spec,
                                const std::function<double(double)>& g,
                                const RadonMeasure& mu_A, double x, double a, double b,
                                const SimConfig& config);

/// Fraction of transformed-SDE paths reaching y; paths absorbed at the escape
/// level or the horizon contribute the scale-ratio continuation value
/// (reported in the diagnostics).
EstimateResult estimate_q_hitting(const TransformedDiffusion& td, double x, double y,
                                  const SimConfig& config);

/// Total band-estimated local time at y under the transformed law started at
/// y; also fills the coefficient-of-variation fields.
EstimateResult estimate_local_time_total(const TransformedDiffusion& td, double y,
                                         const SimConfig& config);

/// Value of the stopping rule "stop on entering the region" from x.
EstimateResult estimate_stopping_value(const DiffusionSpec& spec, const RadonMeasure& mu_A,
                                       const std::function<double(double)>& reward,
                                       const std::vector<std::pair<double, double>>& region,
                                       double x, const SimConfig& config);

} // namespace iwpair
