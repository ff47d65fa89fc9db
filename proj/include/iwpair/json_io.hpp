#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include <json.hpp>

#include "iwpair/mc.hpp"
#include "iwpair/solve.hpp"
#include "iwpair/stopping.hpp"
#include "iwpair/transform.hpp"

namespace iwpair {

/// One verification check: an analytic quantity recomputed by Monte Carlo.
struct VerifyCheck {
    std::string kind; // pair_value | martingale | q_hitting | local_time | stopping_value
    double x = 0.0, y = 0.0, a = 0.0, b = 0.0, c = 0.0;
};

/// A parsed problem document: the single JSON schema shared by all commands.
struct Problem {
    std::map<std::string, double> params;
    DiffusionSpec spec;
    RadonMeasure mu;

    // pair section
    bool has_pair = false;
    Direction direction = Direction::increasing;
    double c = 0.0, a = 1.0;
    std::optional<double> kappa;

    // combine section
    double lambda1 = 1.0, lambda2 = 0.0;
    bool has_combine = false;

    // reward section
    bool has_reward = false;
    RewardSpec reward;
    std::string reward_text;

    // solver / stopping / mc options
    SolveOptions solve;
    StoppingOptions stop;
    SimConfig mc;

    // sweep section
    bool has_sweep = false;
    std::string sweep_param;
    std::vector<double> sweep_values;
    double sweep_x = 0.0, sweep_y = 0.0;
    bool has_sweep_xy = false;

    // decompose section
    bool has_decompose = false;
    double probe_lo = 0.0, probe_hi = 0.0;
    std::string decompose_g;

    std::vector<VerifyCheck> checks;

    PairProblem pair_problem() const;
};

/// Parses and validates a problem document; ValidationError names the field.
Problem parse_problem(const nlohmann::json& doc);
Problem load_problem(const std::string& path);

/// Re-parses the original document with one parameter overridden (sweeps).
Problem load_problem_with_param(const std::string& path, const std::string& param,
                                double value);

nlohmann::json to_json(const PairSolution& sol);
nlohmann::json to_json(const TransformedDiffusion& td, size_t max_rows = 2001);
nlohmann::json to_json(const StoppingSolution& sol, size_t max_rows = 2001);
nlohmann::json to_json(const EstimateResult& r);

/// Round-trips a serialized solution back into an evaluable object.
PairSolution pair_solution_from_json(const nlohmann::json& j, const ScaleFunction& scale,
                                     const Interval& interval);

void write_csv(std::ostream& os, const PairSolution& sol);
void write_csv(std::ostream& os, const TransformedDiffusion& td, size_t max_rows = 2001);
void write_csv(std::ostream& os, const StoppingSolution& sol, size_t max_rows = 2001);

} // namespace iwpair
