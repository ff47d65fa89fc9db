#include "iwpair/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "iwpair/errors.hpp"
#include "iwpair/expression.hpp"

namespace iwpair {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
    throw ValidationError(field, msg);
}

// Numbers may be plain, "-inf"/"+inf"/"inf", or expression strings over the
// declared parameters.
double number_field(const json& j, const std::string& field,
                    const std::map<std::string, double>& params) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "-inf") return -kInf;
        if (s == "inf" || s == "+inf") return kInf;
        try {
            return Expression::parse(s, params)(0.0);
        } catch (const ValidationError& e) {
            fail(field, std::string("bad numeric expression: ") + e.what());
        }
    }
    fail(field, "expected a number, \"[+-]inf\", or an expression string");
}

double opt_number(const json& j, const std::string& key, const std::string& field,
                  const std::map<std::string, double>& params, double fallback) {
    if (!j.contains(key)) return fallback;
    return number_field(j.at(key), field + "." + key, params);
}

std::function<double(double)> expr_fn(const std::string& text, const std::string& field,
                                      const std::map<std::string, double>& params) {
    try {
        Expression e = Expression::parse(text, params);
        return [e](double x) { return e(x); };
    } catch (const ValidationError& err) {
        fail(field, std::string("bad expression: ") + err.what());
    }
}

RadonMeasure parse_measure(const json& j, const std::string& field,
                           const std::map<std::string, double>& params) {
    if (j.is_null()) return RadonMeasure::zero();
    if (!j.is_object()) fail(field, "expected an object with density/atoms");
    std::function<double(double)> density;
    std::vector<double> breakpoints;
    if (j.contains("density")) {
        const json& d = j.at("density");
        if (d.is_number()) {
            double v = d.get<double>();
            if (v != 0.0) density = [v](double) { return v; };
        } else if (d.is_string()) {
            density = expr_fn(d.get<std::string>(), field + ".density", params);
        } else if (d.is_object() && d.contains("pieces")) {
            struct Piece {
                double from, to;
                std::function<double(double)> f;
            };
            auto pieces = std::make_shared<std::vector<Piece>>();
            for (const json& p : d.at("pieces")) {
                Piece pc;
                pc.from = number_field(p.at("from"), field + ".density.pieces.from", params);
                pc.to = number_field(p.at("to"), field + ".density.pieces.to", params);
                if (!(pc.from < pc.to)) fail(field + ".density.pieces", "needs from < to");
                const json& v = p.at("value");
                if (v.is_number()) {
                    double c = v.get<double>();
                    pc.f = [c](double) { return c; };
                } else {
                    pc.f = expr_fn(v.get<std::string>(), field + ".density.pieces.value",
                                   params);
                }
                breakpoints.push_back(pc.from);
                breakpoints.push_back(pc.to);
                pieces->push_back(std::move(pc));
            }
            density = [pieces](double x) {
                for (const auto& pc : *pieces)
                    if (x >= pc.from && x < pc.to) return pc.f(x);
                return 0.0;
            };
        } else {
            fail(field + ".density", "expected a number, expression, or pieces table");
        }
    }
    std::vector<Atom> atoms;
    if (j.contains("atoms")) {
        for (const json& a : j.at("atoms")) {
            double at = number_field(a.at("at"), field + ".atoms.at", params);
            double mass = number_field(a.at("mass"), field + ".atoms.mass", params);
            atoms.push_back({at, mass});
        }
    }
    return RadonMeasure(std::move(density), std::move(atoms), std::move(breakpoints));
}

ScaleFunction parse_scale(const json& j, const Interval& iv, const std::string& field,
                          const std::map<std::string, double>& params) {
    if (j.is_null()) return ScaleFunction::identity(iv);
    std::string type = j.value("type", "identity");
    if (type == "identity") return ScaleFunction::identity(iv);
    if (type == "affine") {
        double slope = opt_number(j, "slope", field, params, 1.0);
        double intercept = opt_number(j, "intercept", field, params, 0.0);
        return ScaleFunction::affine(slope, intercept, iv);
    }
    if (type == "expr") {
        if (!j.contains("formula")) fail(field, "expr scale needs a formula");
        auto f = expr_fn(j.at("formula").get<std::string>(), field + ".formula", params);
        std::function<double(double)> inv, der;
        if (j.contains("inverse"))
            inv = expr_fn(j.at("inverse").get<std::string>(), field + ".inverse", params);
        if (j.contains("derivative"))
            der = expr_fn(j.at("derivative").get<std::string>(), field + ".derivative", params);
        std::optional<double> ll, rl;
        if (j.contains("left_limit"))
            ll = number_field(j.at("left_limit"), field + ".left_limit", params);
        if (j.contains("right_limit"))
            rl = number_field(j.at("right_limit"), field + ".right_limit", params);
        return ScaleFunction::custom(std::move(f), iv, ll, rl, std::move(inv), std::move(der));
    }
    if (type == "table") {
        if (!j.contains("x") || !j.contains("s")) fail(field, "table scale needs x and s");
        std::vector<double> xs = j.at("x").get<std::vector<double>>();
        std::vector<double> ys = j.at("s").get<std::vector<double>>();
        std::optional<double> ll, rl;
        if (j.contains("left_limit"))
            ll = number_field(j.at("left_limit"), field + ".left_limit", params);
        if (j.contains("right_limit"))
            rl = number_field(j.at("right_limit"), field + ".right_limit", params);
        return ScaleFunction::tabulated(std::move(xs), std::move(ys), iv, ll, rl);
    }
    fail(field + ".type", "unknown scale type '" + type + "'");
}

} // namespace

PairProblem Problem::pair_problem() const {
    PairProblem p;
    p.spec = spec;
    p.mu = mu;
    p.direction = direction;
    p.c = c;
    p.a = a;
    p.kappa = kappa;
    return p;
}

Problem parse_problem(const json& doc) {
    if (!doc.is_object()) fail("problem", "document must be a JSON object");
    Problem pr;
    if (doc.contains("params")) {
        for (auto& [k, v] : doc.at("params").items()) {
            if (!v.is_number()) fail("params." + k, "parameters must be numbers");
            pr.params[k] = v.get<double>();
        }
    }
    const auto& P = pr.params;

    if (!doc.contains("interval")) fail("interval", "missing");
    double lo = number_field(doc.at("interval").value("lo", json("-inf")), "interval.lo", P);
    double hi = number_field(doc.at("interval").value("hi", json("+inf")), "interval.hi", P);
    if (!(lo < hi)) fail("interval", "requires lo < hi");
    pr.spec.interval = Interval{lo, hi};

    pr.spec.scale = parse_scale(doc.contains("scale") ? doc.at("scale") : json(),
                                pr.spec.interval, "scale", P);

    if (doc.contains("sde")) {
        const json& s = doc.at("sde");
        if (!s.contains("drift") || !s.contains("sigma"))
            fail("sde", "needs drift and sigma expressions");
        SdeCoefficients sde;
        sde.drift = expr_fn(s.at("drift").get<std::string>(), "sde.drift", P);
        sde.sigma = expr_fn(s.at("sigma").get<std::string>(), "sde.sigma", P);
        pr.spec.sde = std::move(sde);
    }

    if (doc.contains("speed")) {
        pr.spec.speed = parse_measure(doc.at("speed"), "speed", P);
    } else if (pr.spec.sde) {
        auto sigma = pr.spec.sde->sigma;
        auto scale = pr.spec.scale;
        pr.spec.speed = RadonMeasure(
            [sigma, scale](double x) {
                double sg = sigma(x);
                return 2.0 / (sg * sg * scale.derivative(x));
            },
            {});
    } else {
        pr.spec.speed = RadonMeasure::lebesgue(2.0);
    }
    pr.spec.speed.validate(pr.spec.interval, "speed");

    if (!doc.contains("mu_A")) fail("mu_A", "missing");
    pr.mu = parse_measure(doc.at("mu_A"), "mu_A", P);
    pr.mu.validate(pr.spec.interval, "mu_A");

    if (doc.contains("pair")) {
        const json& p = doc.at("pair");
        pr.has_pair = true;
        std::string dir = p.value("direction", "increasing");
        if (dir == "increasing") pr.direction = Direction::increasing;
        else if (dir == "decreasing") pr.direction = Direction::decreasing;
        else fail("pair.direction", "must be increasing or decreasing");
        pr.c = opt_number(p, "c", "pair", P, 0.0);
        pr.a = opt_number(p, "a", "pair", P, 1.0);
        if (!(pr.a > 0)) fail("pair.a", "must be positive");
        if (!pr.spec.interval.contains(pr.c)) fail("pair.c", "must be strictly interior");
        if (p.contains("kappa")) pr.kappa = number_field(p.at("kappa"), "pair.kappa", P);
    }

    if (doc.contains("combine")) {
        const json& cmb = doc.at("combine");
        pr.has_combine = true;
        pr.lambda1 = opt_number(cmb, "lambda1", "combine", P, 0.0);
        pr.lambda2 = opt_number(cmb, "lambda2", "combine", P, 0.0);
        if (pr.lambda1 < 0 || pr.lambda2 < 0 || pr.lambda1 + pr.lambda2 <= 0)
            fail("combine", "weights must be non-negative with a positive sum");
    }

    if (doc.contains("reward")) {
        const json& r = doc.at("reward");
        pr.has_reward = true;
        if (!r.contains("f")) fail("reward.f", "missing");
        pr.reward_text = r.at("f").get<std::string>();
        pr.reward.f = expr_fn(pr.reward_text, "reward.f", P);
        auto lim = [&](const char* key) -> std::optional<double> {
            if (!r.contains(key)) return std::nullopt;
            const json& v = r.at(key);
            if (v.is_string() && v.get<std::string>() == "auto") return std::nullopt;
            return number_field(v, std::string("reward.") + key, P);
        };
        pr.reward.limit_left = lim("limit_left");
        pr.reward.limit_right = lim("limit_right");
    }

    if (doc.contains("solve")) {
        const json& s = doc.at("solve");
        pr.solve.s_step = opt_number(s, "s_step", "solve", P, pr.solve.s_step);
        if (s.contains("domain")) {
            pr.solve.domain_lo = opt_number(s.at("domain"), "lo", "solve.domain", P, -kInf);
            pr.solve.domain_hi = opt_number(s.at("domain"), "hi", "solve.domain", P, kInf);
            if (!is_finite(*pr.solve.domain_lo)) pr.solve.domain_lo.reset();
            if (!is_finite(*pr.solve.domain_hi)) pr.solve.domain_hi.reset();
        }
        pr.solve.trunc_tol = opt_number(s, "trunc_tol", "solve", P, pr.solve.trunc_tol);
        pr.solve.trunc_ratio = opt_number(s, "trunc_ratio", "solve", P, pr.solve.trunc_ratio);
        pr.solve.max_refinements = static_cast<int>(
            opt_number(s, "max_refinements", "solve", P, pr.solve.max_refinements));
    }

    if (doc.contains("stop")) {
        const json& s = doc.at("stop");
        pr.stop.anchor_c = opt_number(s, "anchor", "stop", P, pr.stop.anchor_c);
        pr.stop.epsilon = opt_number(s, "epsilon", "stop", P, pr.stop.epsilon);
        pr.stop.grid_points = static_cast<size_t>(
            opt_number(s, "grid_points", "stop", P, static_cast<double>(pr.stop.grid_points)));
    }
    pr.stop.solver = pr.solve;
    pr.stop.domain_lo = pr.solve.domain_lo;
    pr.stop.domain_hi = pr.solve.domain_hi;

    if (doc.contains("mc")) {
        const json& m = doc.at("mc");
        std::string scheme = m.value("scheme", "euler_sde");
        if (scheme == "euler_sde") pr.mc.scheme = Scheme::euler_sde;
        else if (scheme == "scale_random_walk") pr.mc.scheme = Scheme::scale_random_walk;
        else fail("mc.scheme", "unknown scheme '" + scheme + "'");
        pr.mc.step = opt_number(m, "step", "mc", P, pr.mc.step);
        pr.mc.band_halfwidth = opt_number(m, "band", "mc", P, pr.mc.band_halfwidth);
        pr.mc.n_paths = static_cast<int64_t>(
            opt_number(m, "paths", "mc", P, static_cast<double>(pr.mc.n_paths)));
        pr.mc.seed = static_cast<uint64_t>(
            opt_number(m, "seed", "mc", P, static_cast<double>(pr.mc.seed)));
        pr.mc.horizon = opt_number(m, "horizon", "mc", P, pr.mc.horizon);
    }

    if (doc.contains("sweep")) {
        const json& s = doc.at("sweep");
        pr.has_sweep = true;
        if (!s.contains("param") || !s.contains("values"))
            fail("sweep", "needs param and values");
        pr.sweep_param = s.at("param").get<std::string>();
        if (!pr.params.count(pr.sweep_param))
            fail("sweep.param", "sweep parameter must be declared in params");
        pr.sweep_values = s.at("values").get<std::vector<double>>();
        if (s.contains("x") && s.contains("y")) {
            pr.sweep_x = number_field(s.at("x"), "sweep.x", P);
            pr.sweep_y = number_field(s.at("y"), "sweep.y", P);
            pr.has_sweep_xy = true;
        }
    }

    if (doc.contains("decompose")) {
        const json& d = doc.at("decompose");
        pr.has_decompose = true;
        pr.probe_lo = number_field(d.at("probe_lo"), "decompose.probe_lo", P);
        pr.probe_hi = number_field(d.at("probe_hi"), "decompose.probe_hi", P);
        if (!d.contains("g")) fail("decompose.g", "missing target expression");
        pr.decompose_g = d.at("g").get<std::string>();
        (void)expr_fn(pr.decompose_g, "decompose.g", P);
    }

    if (doc.contains("verify")) {
        for (const json& c : doc.at("verify").at("checks")) {
            VerifyCheck vc;
            vc.kind = c.at("kind").get<std::string>();
            vc.x = opt_number(c, "x", "verify", P, 0.0);
            vc.y = opt_number(c, "y", "verify", P, 0.0);
            vc.a = opt_number(c, "a", "verify", P, 0.0);
            vc.b = opt_number(c, "b", "verify", P, 0.0);
            vc.c = opt_number(c, "c", "verify", P, 0.0);
            pr.checks.push_back(vc);
        }
    }
    return pr;
}

Problem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("problem", "cannot open file '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        fail("problem", std::string("JSON parse error: ") + e.what());
    }
    return parse_problem(doc);
}

Problem load_problem_with_param(const std::string& path, const std::string& param,
                                double value) {
    std::ifstream in(path);
    if (!in) fail("problem", "cannot open file '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        fail("problem", std::string("JSON parse error: ") + e.what());
    }
    if (!doc.contains("params") || !doc.at("params").contains(param))
        fail("params." + param, "sweep parameter not declared");
    doc["params"][param] = value;
    return parse_problem(doc);
}

namespace {

json number_or_inf(double v) {
    if (v == kInf) return json("+inf");
    if (v == -kInf) return json("-inf");
    return json(v);
}

} // namespace

json to_json(const PairSolution& sol) {
    json j;
    j["mesh"] = sol.mesh();
    j["g"] = sol.values();
    j["p_minus"] = sol.slopes_minus();
    j["p_plus"] = sol.slopes_plus();
    j["kappa"] = sol.kappa();
    j["direction"] = sol.direction() == Direction::increasing ? "increasing" : "decreasing";
    j["c"] = sol.anchor_c();
    j["a"] = sol.anchor_a();
    return j;
}

PairSolution pair_solution_from_json(const json& j, const ScaleFunction& scale,
                                     const Interval& interval) {
    std::vector<double> x = j.at("mesh").get<std::vector<double>>();
    std::vector<double> g = j.at("g").get<std::vector<double>>();
    std::vector<double> pm = j.at("p_minus").get<std::vector<double>>();
    std::vector<double> pp = j.at("p_plus").get<std::vector<double>>();
    std::vector<double> s(x.size());
    for (size_t i = 0; i < x.size(); ++i) s[i] = scale(x[i]);
    Direction dir = j.at("direction").get<std::string>() == "increasing"
                        ? Direction::increasing
                        : Direction::decreasing;
    return PairSolution(std::move(x), std::move(s), std::move(g), std::move(pm),
                        std::move(pp), j.at("kappa").get<double>(), dir,
                        j.at("c").get<double>(), j.at("a").get<double>(), scale, interval,
                        EndpointRegime::truncated_infinite_scale, 0);
}

json to_json(const TransformedDiffusion& td, size_t max_rows) {
    json j;
    const auto& xs = td.mesh();
    size_t stride = std::max<size_t>(1, xs.size() / max_rows);
    json table = json::array();
    for (size_t i = 0; i < xs.size(); i += stride) {
        json row;
        row["x"] = xs[i];
        row["s_g"] = td.s_g(xs[i]);
        if (td.has_drift()) row["drift"] = td.drift(xs[i]);
        table.push_back(row);
    }
    j["s_g"] = table;
    j["u_l"] = number_or_inf(td.u_l());
    j["u_r"] = number_or_inf(td.u_r());
    j["attainable_left"] = td.attainable_left();
    j["attainable_right"] = td.attainable_right();
    return j;
}

json to_json(const StoppingSolution& sol, size_t max_rows) {
    json j;
    const auto& G = sol.majorant();
    j["knots"] = json::array();
    for (size_t i = 0; i < G.knots_u().size(); ++i)
        j["knots"].push_back({{"u", G.knots_u()[i]}, {"G", G.knots_value()[i]}});
    j["contact_set"] = G.contact_set();
    j["stopping_region"] = json::array();
    for (const auto& [lo, hi] : sol.stopping_region())
        j["stopping_region"].push_back({{"lo", number_or_inf(lo)}, {"hi", number_or_inf(hi)}});
    j["epsilon"] = sol.epsilon();
    switch (sol.verdict()) {
        case OptimalityVerdict::optimal: j["optimal_flag"] = "optimal"; break;
        case OptimalityVerdict::not_optimal: j["optimal_flag"] = "not-optimal"; break;
        case OptimalityVerdict::undetermined: j["optimal_flag"] = "undetermined"; break;
    }
    j["verdict_reason"] = sol.verdict_reason();
    const auto& xs = sol.gain().mesh();
    json table = json::array();
    size_t stride = std::max<size_t>(1, xs.size() / max_rows);
    {
        auto it = std::lower_bound(xs.begin(), xs.end(), sol.gain().anchor_c());
        size_t anchor = (it != xs.end()) ? static_cast<size_t>(it - xs.begin()) : 0;
        for (size_t i = 0; i < xs.size(); i += stride) {
            table.push_back({{"x", xs[i]}, {"V", sol.value(xs[i])}});
            if (anchor > i && anchor < i + stride && anchor < xs.size())
                table.push_back({{"x", xs[anchor]}, {"V", sol.value(xs[anchor])}});
        }
    }
    j["V"] = table;
    return j;
}

json to_json(const EstimateResult& r) {
    json j;
    j["mean"] = r.mean;
    j["se"] = r.std_error;
    j["n"] = r.n_effective;
    j["flags"] = {{"truncation_rate", r.truncation_rate},
                  {"flagged", r.flagged},
                  {"note", r.note}};
    if (r.cv_std_error > 0) {
        j["cv"] = r.cv;
        j["cv_se"] = r.cv_std_error;
    }
    return j;
}

namespace {

void put(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

// Strided row indices that always include `must_have` (the anchor node).
std::vector<size_t> row_indices(const std::vector<double>& xs, size_t max_rows,
                                double must_have) {
    std::vector<size_t> idx;
    size_t stride = std::max<size_t>(1, xs.size() / max_rows);
    for (size_t i = 0; i < xs.size(); i += stride) idx.push_back(i);
    auto it = std::lower_bound(xs.begin(), xs.end(), must_have);
    if (it != xs.end() && *it == must_have)
        idx.push_back(static_cast<size_t>(it - xs.begin()));
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

} // namespace

void write_csv(std::ostream& os, const PairSolution& sol) {
    os << "x,s,g,p_minus,p_plus\n";
    for (size_t i = 0; i < sol.mesh().size(); ++i) {
        put(os, sol.mesh()[i]);
        os << ',';
        put(os, sol.mesh_s()[i]);
        os << ',';
        put(os, sol.values()[i]);
        os << ',';
        put(os, sol.slopes_minus()[i]);
        os << ',';
        put(os, sol.slopes_plus()[i]);
        os << '\n';
    }
}

void write_csv(std::ostream& os, const TransformedDiffusion& td, size_t max_rows) {
    os << "x,s_g" << (td.has_drift() ? ",drift" : "") << "\n";
    const auto& xs = td.mesh();
    size_t stride = std::max<size_t>(1, xs.size() / max_rows);
    for (size_t i = 0; i < xs.size(); i += stride) {
        put(os, xs[i]);
        os << ',';
        put(os, td.s_g(xs[i]));
        if (td.has_drift()) {
            os << ',';
            put(os, td.drift(xs[i]));
        }
        os << '\n';
    }
}

void write_csv(std::ostream& os, const StoppingSolution& sol, size_t max_rows) {
    os << "x,f,g,s_g,V,stop\n";
    const auto& xs = sol.gain().mesh();
    for (size_t i : row_indices(xs, max_rows, sol.gain().anchor_c())) {
        double x = xs[i];
        put(os, x);
        os << ',';
        put(os, sol.reward()(x));
        os << ',';
        put(os, sol.gain().value(x));
        os << ',';
        put(os, sol.transformed().s_g(x));
        os << ',';
        put(os, sol.value(x));
        os << ',' << (sol.stop_at(x) ? 1 : 0) << '\n';
    }
}

} // namespace iwpair
