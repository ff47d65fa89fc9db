// Batch front-end: reads a problem description file, runs the requested
// pipeline stage, and emits JSON/CSV artifacts.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "iwpair/errors.hpp"
#include "iwpair/expression.hpp"
#include "iwpair/json_io.hpp"

using namespace iwpair;
using nlohmann::json;

namespace {

struct RunConfig {
    std::string command;
    std::string problem;
    std::string out = "out";
    std::optional<uint64_t> seed;
    std::optional<double> tol;
    std::optional<int64_t> paths;
};

void apply_overrides(Problem& pr, const RunConfig& rc) {
    if (rc.seed) pr.mc.seed = *rc.seed;
    if (rc.paths) pr.mc.n_paths = *rc.paths;
    if (rc.tol) {
        pr.solve.trunc_tol = *rc.tol;
        pr.stop.solver.trunc_tol = *rc.tol;
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("output", "cannot write '" + path + "'");
    os << text;
}

struct SolvedPair {
    PairSolution gr, gl;
};

SolvedPair solve_both(const Problem& pr) {
    PairProblem p = pr.pair_problem();
    p.direction = Direction::increasing;
    p.kappa.reset();
    SolvedPair out;
    out.gr = solve_increasing(p, pr.solve);
    p.direction = Direction::decreasing;
    out.gl = solve_decreasing(p, pr.solve);
    return out;
}

GeneralSolution combined(const Problem& pr, const SolvedPair& sp) {
    double l1 = pr.lambda1, l2 = pr.lambda2;
    if (!pr.has_combine) {
        l1 = pr.direction == Direction::increasing ? 1.0 : 0.0;
        l2 = 1.0 - l1;
    }
    return combine(l1, l2, sp.gr, sp.gl);
}

int cmd_solve_pair(const Problem& pr, const RunConfig& rc) {
    if (!pr.has_pair) throw ValidationError("pair", "solve-pair needs a pair section");
    PairProblem p = pr.pair_problem();
    PairSolution sol = (p.direction == Direction::increasing) ? solve_increasing(p, pr.solve)
                                                              : solve_decreasing(p, pr.solve);
    write_text(rc.out + ".json", to_json(sol).dump(2) + "\n");
    std::ofstream csv(rc.out + ".csv", std::ios::binary);
    write_csv(csv, sol);
    std::printf("solve-pair: %zu mesh nodes, kappa = %.12g, g(c) = %.12g\n",
                sol.mesh().size(), sol.kappa(), sol.value(sol.anchor_c()));
    return 0;
}

int cmd_transform(const Problem& pr, const RunConfig& rc) {
    if (!pr.has_pair) throw ValidationError("pair", "transform needs a pair section");
    SolvedPair sp = solve_both(pr);
    TransformedDiffusion td = transform(pr.spec, combined(pr, sp));
    write_text(rc.out + ".json", to_json(td).dump(2) + "\n");
    std::ofstream csv(rc.out + ".csv", std::ios::binary);
    write_csv(csv, td);
    std::printf("transform: u_l = %g, u_r = %g, transient = %d\n", td.u_l(), td.u_r(),
                td.transient() ? 1 : 0);
    return 0;
}

int cmd_stop(const Problem& pr, const RunConfig& rc) {
    if (!pr.has_pair) throw ValidationError("pair", "stop needs a pair section");
    if (!pr.has_reward) throw ValidationError("reward", "stop needs a reward section");
    if (!pr.has_combine) throw ValidationError("combine", "stop needs strictly positive weights");
    StoppingOptions so = pr.stop;
    so.anchor_c = pr.c;
    StoppingSolution sol =
        solve_stopping(pr.spec, pr.mu, pr.lambda1, pr.lambda2, pr.reward, so);
    write_text(rc.out + ".json", to_json(sol).dump(2) + "\n");
    std::ofstream csv(rc.out + ".csv", std::ios::binary);
    write_csv(csv, sol);
    const char* verdict = sol.verdict() == OptimalityVerdict::optimal ? "optimal"
                          : sol.verdict() == OptimalityVerdict::not_optimal ? "not-optimal"
                                                                            : "undetermined";
    std::printf("stop: V(%g) = %.9f, verdict %s, %zu stopping interval(s)\n", pr.c,
                sol.value(pr.c), verdict, sol.stopping_region().size());
    return 0;
}

int cmd_decompose(const Problem& pr, const RunConfig& rc) {
    if (!pr.has_pair || !pr.has_decompose)
        throw ValidationError("decompose", "needs pair and decompose sections");
    SolvedPair sp = solve_both(pr);
    Expression g = Expression::parse(pr.decompose_g, pr.params);
    Decomposition d = fit_decomposition(pr.probe_lo, g(pr.probe_lo), pr.probe_hi,
                                        g(pr.probe_hi), sp.gr, sp.gl);
    json j;
    j["lambda1"] = d.lambda1;
    j["lambda2"] = d.lambda2;
    write_text(rc.out + ".json", j.dump(2) + "\n");
    std::printf("decompose: lambda1 = %.12g, lambda2 = %.12g\n", d.lambda1, d.lambda2);
    return 0;
}

int cmd_sweep(const RunConfig& rc) {
    Problem base = load_problem(rc.problem);
    if (!base.has_sweep) throw ValidationError("sweep", "sweep needs a sweep section");
    if (!base.has_pair) throw ValidationError("pair", "sweep needs a pair section");
    std::ostringstream csv;
    csv << "value,u_l,u_r,prob_to_l,prob_to_r,q_hit_xy,q_hit_yx,lt_rate\n";
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        csv << buf;
    };
    for (double v : base.sweep_values) {
        Problem pr = load_problem_with_param(rc.problem, base.sweep_param, v);
        apply_overrides(pr, rc);
        SolvedPair sp = solve_both(pr);
        TransformedDiffusion td = transform(pr.spec, combined(pr, sp));
        double x = pr.has_sweep_xy ? pr.sweep_x : pr.c;
        double y = pr.has_sweep_xy ? pr.sweep_y : pr.c + 1.0;
        put(v);
        csv << ',';
        put(td.u_l());
        csv << ',';
        put(td.u_r());
        csv << ',';
        BoundaryProbabilities bp = q_boundary_probabilities(td, x);
        put(bp.to_left);
        csv << ',';
        put(bp.to_right);
        csv << ',';
        put(q_hitting_probability(td, x, y));
        csv << ',';
        put(q_hitting_probability(td, y, x));
        csv << ',';
        put(local_time_terminal_rate(td, y));
        csv << '\n';
    }
    write_text(rc.out + ".csv", csv.str());
    std::printf("sweep: %zu rows over %s\n", base.sweep_values.size(),
                base.sweep_param.c_str());
    return 0;
}

int cmd_verify(const Problem& pr, const RunConfig& rc) {
    if (pr.checks.empty())
        throw ValidationError("verify.checks", "verify needs at least one check");
    json report = json::array();
    bool all_pass = true;

    // Lazily solved shared artifacts.
    std::optional<SolvedPair> sp;
    std::optional<TransformedDiffusion> td;
    auto pair = [&]() -> SolvedPair& {
        if (!sp) sp = solve_both(pr);
        return *sp;
    };
    auto transformed = [&]() -> TransformedDiffusion& {
        if (!td) td = transform(pr.spec, combined(pr, pair()));
        return *td;
    };

    std::ostringstream log;
    for (const VerifyCheck& vc : pr.checks) {
        double analytic = 0.0;
        EstimateResult est;
        double pass_slack = 1e-9;
        if (vc.kind == "pair_value") {
            PairProblem p = pr.pair_problem();
            p.c = vc.c;
            p.a = 1.0;
            p.kappa.reset();
            p.direction = vc.x < vc.c ? Direction::increasing : Direction::decreasing;
            PairSolution sol = p.direction == Direction::increasing
                                   ? solve_increasing(p, pr.solve)
                                   : solve_decreasing(p, pr.solve);
            analytic = sol.value(vc.x);
            est = estimate_pair_value(pr.spec, pr.mu, vc.x, vc.c, pr.mc);
        } else if (vc.kind == "martingale") {
            GeneralSolution g = combined(pr, pair());
            analytic = 0.0;
            est = martingale_check(
                pr.spec, [&g](double v) { return g.value(v); }, pr.mu, vc.x, vc.a, vc.b,
                pr.mc);
        } else if (vc.kind == "q_hitting") {
            analytic = q_hitting_probability(transformed(), vc.x, vc.y);
            est = estimate_q_hitting(transformed(), vc.x, vc.y, pr.mc);
        } else if (vc.kind == "local_time") {
            analytic = 1.0 / local_time_terminal_rate(transformed(), vc.y);
            est = estimate_local_time_total(transformed(), vc.y, pr.mc);
        } else if (vc.kind == "stopping_value") {
            if (!pr.has_reward)
                throw ValidationError("reward", "stopping_value check needs a reward");
            StoppingOptions so = pr.stop;
            so.anchor_c = pr.c;
            StoppingSolution sol =
                solve_stopping(pr.spec, pr.mu, pr.lambda1, pr.lambda2, pr.reward, so);
            analytic = sol.value(vc.x);
            est = estimate_stopping_value(pr.spec, pr.mu, pr.reward.f,
                                          sol.stopping_region(), vc.x, pr.mc);
            pass_slack = sol.epsilon() + 1e-9;
        } else {
            throw ValidationError("verify.checks.kind", "unknown check '" + vc.kind + "'");
        }
        bool pass = std::fabs(est.mean - analytic) <= 3.0 * est.std_error + pass_slack;
        all_pass = all_pass && pass;
        json row = to_json(est);
        row["kind"] = vc.kind;
        row["analytic"] = analytic;
        row["pass"] = pass;
        report.push_back(row);
        std::printf("[%s] %-15s analytic %.6g vs mc %.6g (se %.2g)%s\n",
                    pass ? "PASS" : "FAIL", vc.kind.c_str(), analytic, est.mean,
                    est.std_error, est.flagged ? " [flagged]" : "");
        char line[320];
        std::snprintf(line, sizeof line,
                      "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%lld,%.6g,%d\n",
                      vc.kind.c_str(), vc.x, vc.y, vc.a, vc.b, analytic, est.mean,
                      est.std_error, static_cast<long long>(est.n_effective),
                      est.truncation_rate, pass ? 1 : 0);
        log << line;
    }
    write_text(rc.out + ".json", report.dump(2) + "\n");
    // The experiment log accumulates across runs.
    std::string log_path = rc.out + "_log.csv";
    bool fresh = !std::ifstream(log_path).good();
    std::ofstream lf(log_path, std::ios::app | std::ios::binary);
    if (fresh) lf << "kind,x,y,a,b,analytic,mean,se,n,truncation_rate,pass\n";
    lf << log.str();
    return all_pass ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"One-dimensional diffusion toolkit: monotone solutions of the "
                 "scale-kernel integral equation, path transformations, optimal "
                 "stopping with random discounting, Monte Carlo verification"};
    app.require_subcommand(1);

    RunConfig rc;
    for (const char* name : {"solve-pair", "transform", "stop", "verify", "decompose", "sweep"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--problem", rc.problem, "problem JSON file")
            ->required()
            ->envname("IWPAIR_PROBLEM");
        sub->add_option("--out", rc.out, "output path prefix")->envname("IWPAIR_OUT");
        sub->add_option("--seed", rc.seed, "Monte Carlo seed override")->envname("IWPAIR_SEED");
        sub->add_option("--tol", rc.tol, "truncation tolerance override")
            ->envname("IWPAIR_TOL");
        sub->add_option("--paths", rc.paths, "Monte Carlo path count override")
            ->envname("IWPAIR_PATHS");
    }

    CLI11_PARSE(app, argc, argv);
    rc.command = app.get_subcommands().front()->get_name();

    try {
        if (rc.command == "sweep") return cmd_sweep(rc);
        Problem pr = load_problem(rc.problem);
        apply_overrides(pr, rc);
        if (rc.command == "solve-pair") return cmd_solve_pair(pr, rc);
        if (rc.command == "transform") return cmd_transform(pr, rc);
        if (rc.command == "stop") return cmd_stop(pr, rc);
        if (rc.command == "decompose") return cmd_decompose(pr, rc);
        if (rc.command == "verify") return cmd_verify(pr, rc);
        std::fprintf(stderr, "unknown command\n");
        return 2;
    } catch (const ValidationError& e) {
        json err{{"error", {{"field", e.field()}, {"message", e.what()}}}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return 2;
    } catch (const Error& e) {
        json err{{"error", {{"message", e.what()}}}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return 3;
    } catch (const std::exception& e) {
        json err{{"error", {{"message", e.what()}}}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return 3;
    }
}
