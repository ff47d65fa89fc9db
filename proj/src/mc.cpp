#include "iwpair/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "iwpair/errors.hpp"
#include "iwpair/quadrature.hpp"

namespace iwpair {

namespace {

uint64_t splitmix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Per-path generator: engine plus a Marsaglia polar normal (bit-reproducible
// across platforms for a fixed engine stream).
struct PathRng {
    std::mt19937_64 eng;
    bool has_spare = false;
    double spare = 0.0;

    explicit PathRng(uint64_t seed) : eng(seed) {}

    double uniform() {
        return (eng() >> 11) * 0x1.0p-53;
    }
    double normal() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double m = std::sqrt(-2.0 * std::log(s) / s);
        spare = v * m;
        has_spare = true;
        return u * m;
    }
};

struct PathOutcome {
    double value = 0.0;
    bool truncated = false;
};

struct BlockStats {
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    int64_t n = 0, truncated = 0;
};

constexpr int64_t kBlock = 1024;

// Fixed block partition; blocks are combined in index order so the estimate is
// identical for any worker count.
template <typename PathFn>
EstimateResult run_paths(const SimConfig& cfg, PathFn&& per_path) {
    if (cfg.n_paths < 1) throw ValidationError("mc.n_paths", "need at least one path");
    const int64_t nblocks = (cfg.n_paths + kBlock - 1) / kBlock;
    std::vector<BlockStats> blocks(nblocks);

    int nthreads = cfg.threads > 0
                       ? cfg.threads
                       : static_cast<int>(std::min<unsigned>(
                             std::max(1u, std::thread::hardware_concurrency()), 8));
    nthreads = static_cast<int>(std::min<int64_t>(nthreads, nblocks));

    std::atomic<int64_t> next{0};
    auto worker = [&]() {
        for (;;) {
            int64_t b = next.fetch_add(1);
            if (b >= nblocks) return;
            BlockStats st;
            int64_t lo = b * kBlock, hi = std::min<int64_t>(cfg.n_paths, lo + kBlock);
            for (int64_t i = lo; i < hi; ++i) {
                PathRng rng(splitmix64(cfg.seed ^ splitmix64(static_cast<uint64_t>(i) + 1)));
                PathOutcome out = per_path(rng);
                double v = out.value;
                st.s1 += v;
                st.s2 += v * v;
                st.s3 += v * v * v;
                st.s4 += v * v * v * v;
                st.n += 1;
                st.truncated += out.truncated ? 1 : 0;
            }
            blocks[b] = st;
        }
    };
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    int64_t n = 0, trunc = 0;
    for (const BlockStats& b : blocks) {
        s1 += b.s1;
        s2 += b.s2;
        s3 += b.s3;
        s4 += b.s4;
        n += b.n;
        trunc += b.truncated;
    }
    EstimateResult r;
    r.n_effective = n;
    r.mean = s1 / n;
    double var = std::max(0.0, s2 / n - r.mean * r.mean);
    r.std_error = std::sqrt(var / n);
    r.truncation_rate = static_cast<double>(trunc) / n;
    if (r.truncation_rate > 0.01) {
        r.flagged = true;
        std::ostringstream os;
        os << "horizon/step cap bound on " << 100.0 * r.truncation_rate << "% of paths";
        r.note = os.str();
    }
    // Coefficient of variation with a delta-method standard error.
    if (r.mean != 0.0 && var > 0.0) {
        double m = r.mean;
        double mu3 = s3 / n - 3 * m * (s2 / n) + 2 * m * m * m;
        double mu4 = s4 / n - 4 * m * (s3 / n) + 6 * m * m * (s2 / n) - 3 * m * m * m * m;
        double cv = std::sqrt(var) / m;
        double vcv = cv * cv * ((mu4 - var * var) / (4 * var * var) - mu3 / (var * m) + cv * cv);
        r.cv = cv;
        r.cv_std_error = vcv > 0 ? std::sqrt(vcv / n) : 0.0;
    }
    return r;
}

// Euler dynamics plus CAF accrual against a reference speed measure.
struct BandAtom {
    double y, w, h, m_half, m_full;
};

struct Accrual {
    std::function<double(double)> ratio; // d(mu)/dm density ratio, may be null
    std::vector<BandAtom> atoms;

    double rate(double x) const {
        double r = ratio ? ratio(x) : 0.0;
        for (const BandAtom& a : atoms) {
            double d = std::fabs(x - a.y);
            // Two-band Richardson: 2 L(h/2) - L(h) kills the O(h) kink bias.
            if (d <= 0.5 * a.h) r += a.w * 2.0 / a.m_half;
            if (d <= a.h) r -= a.w / a.m_full;
        }
        return r;
    }
};

// Atoms sitting exactly on a first-passage target are skipped: local time at a
// level is identically zero before the level is first touched, so any band
// occupation there would be pure estimator noise.
Accrual make_accrual(const RadonMeasure& mu, const RadonMeasure& speed, double h,
                     const std::vector<double>& skip_at) {
    Accrual acc;
    if (mu.has_density()) {
        RadonMeasure m_copy = mu, s_copy = speed;
        acc.ratio = [m_copy, s_copy](double x) {
            double ms = s_copy.density(x);
            return ms > 0 ? m_copy.density(x) / ms : 0.0;
        };
    }
    for (const Atom& a : mu.atoms()) {
        bool skip = false;
        for (double t : skip_at)
            if (a.at == t) skip = true;
        if (skip) continue;
        BandAtom ba;
        ba.y = a.at;
        ba.w = a.mass;
        ba.h = h;
        auto one = [](double) { return 1.0; };
        ba.m_half = measure_integrate(speed, one, a.at - 0.5 * h, a.at + 0.5 * h, 1e-10,
                                      true, true);
        ba.m_full = measure_integrate(speed, one, a.at - h, a.at + h, 1e-10, true, true);
        if (!(ba.m_half > 0) || !(ba.m_full > 0))
            throw NumericError("mc: speed measure vanishes on a local-time band");
        acc.atoms.push_back(ba);
    }
    return acc;
}

struct Dynamics {
    std::function<double(double)> drift, sigma;
    Interval iv;
};

double band_width(const SimConfig& cfg, double sigma_ref) {
    return cfg.band_halfwidth > 0 ? cfg.band_halfwidth
                                  : 4.0 * std::sqrt(sigma_ref * sigma_ref * cfg.step);
}

// Adaptive time step: base near the sensitive set, quadratic growth away.
double step_for(const SimConfig& cfg, const Dynamics& dyn, double x,
                const std::vector<double>& sensitive, double pad) {
    if (!cfg.adaptive_step) return cfg.step;
    double d = kInf;
    for (double s : sensitive) d = std::min(d, std::fabs(x - s));
    if (is_finite(dyn.iv.lo)) d = std::min(d, std::fabs(x - dyn.iv.lo));
    if (is_finite(dyn.iv.hi)) d = std::min(d, std::fabs(x - dyn.iv.hi));
    d = std::max(0.0, d - pad);
    if (d <= 0) return cfg.step;
    double sg = dyn.sigma(x);
    double b = std::fabs(dyn.drift(x));
    double dt = (d / (6.0 * sg)) * (d / (6.0 * sg));
    if (b > 0) dt = std::min(dt, d / (6.0 * b));
    return std::max(cfg.step, std::min(dt, 0.02 * cfg.horizon));
}

// Brownian-bridge probability that the segment from x (over dt) to x2 crossed
// level y even though both endpoints are on the same side.
double bridge_cross_prob(double x, double x2, double y, double sigma, double dt) {
    double a = (x - y) * (x2 - y);
    if (a <= 0) return 1.0;
    return std::exp(-2.0 * a / (sigma * sigma * dt));
}

// Generic Euler path driver. `on_step` sees (x, dt, dA) before the move and
// may stop the path; `on_move` sees the proposed move for crossing checks.
struct EulerPath {
    double x, t = 0.0, a = 0.0;
    bool done = false;
    PathOutcome out;
};

} // namespace

PathEnsemble simulate(const DiffusionSpec& spec, const RadonMeasure& mu_A, double x0,
                      const SimConfig& config) {
    if (!spec.sde)
        throw ValidationError("simulate", "euler scheme needs the SDE form of the diffusion");
    Dynamics dyn{spec.sde->drift, spec.sde->sigma, spec.interval};
    double h = band_width(config, dyn.sigma(x0));
    Accrual acc = make_accrual(mu_A, spec.speed, h, {});
    std::vector<double> sensitive;
    for (const Atom& a : mu_A.atoms()) sensitive.push_back(a.at);

    PathEnsemble ens;
    ens.x.resize(config.n_paths);
    ens.a.resize(config.n_paths);
    ens.t.resize(config.n_paths);
    for (int64_t i = 0; i < config.n_paths; ++i) {
        PathRng rng(splitmix64(config.seed ^ splitmix64(static_cast<uint64_t>(i) + 1)));
        double x = x0, t = 0.0, a = 0.0;
        int64_t steps = 0;
        while (t < config.horizon && steps++ < config.max_steps) {
            double dt = std::min(step_for(config, dyn, x, sensitive, 2 * h),
                                 config.horizon - t);
            a += acc.rate(x) * dt;
            double x2 = x + dyn.drift(x) * dt + dyn.sigma(x) * std::sqrt(dt) * rng.normal();
            t += dt;
            if (is_finite(dyn.iv.lo) && x2 <= dyn.iv.lo) {
                x = dyn.iv.lo;
                break;
            }
            if (is_finite(dyn.iv.hi) && x2 >= dyn.iv.hi) {
                x = dyn.iv.hi;
                break;
            }
            x = x2;
        }
        ens.x[i] = x;
        ens.a[i] = a;
        ens.t[i] = t;
    }
    return ens;
}

PathEnsemble simulate(const TransformedDiffusion& td, const RadonMeasure& mu, double x0,
                      const SimConfig& config) {
    if (!td.has_drift())
        throw ValidationError("simulate", "transformed diffusion lacks a drift form");
    DiffusionSpec q_spec = td.base();
    TransformedDiffusion td_copy = td;
    q_spec.sde = SdeCoefficients{[td_copy](double x) { return td_copy.drift(x); },
                                 td.base().sde->sigma};
    q_spec.speed = td.m_g();
    return simulate(q_spec, mu, x0, config);
}

namespace {

// Shared Euler first-passage engine: runs until a target in `targets` is hit
// (bridge-corrected), a finite boundary is reached, the discount dies, or the
// horizon/step cap binds.
struct PassageResult {
    enum class Kind { hit_target, hit_boundary_lo, hit_boundary_hi, discount_dead, truncated };
    Kind kind;
    double x, a;
    size_t target_index = 0;
};

PassageResult run_passage(PathRng& rng, const SimConfig& cfg, const Dynamics& dyn,
                          const Accrual& acc, double x0,
                          const std::vector<double>& targets,
                          const std::vector<double>& sensitive, double pad,
                          double a_cap = 45.0) {
    double x = x0, t = 0.0, a = 0.0;
    int64_t steps = 0;
    for (;;) {
        if (t >= cfg.horizon || steps++ >= cfg.max_steps)
            return {PassageResult::Kind::truncated, x, a};
        if (a > a_cap) return {PassageResult::Kind::discount_dead, x, a};
        double dt = std::min(step_for(cfg, dyn, x, sensitive, pad), cfg.horizon - t);
        double da = acc.rate(x) * dt;
        double sg = dyn.sigma(x);
        double x2 = x + dyn.drift(x) * dt + sg * std::sqrt(dt) * rng.normal();
        // Crossing checks, nearest target first when both straddle.
        size_t hit = targets.size();
        double frac = 1.0;
        for (size_t k = 0; k < targets.size(); ++k) {
            double y = targets[k];
            if ((x - y) * (x2 - y) <= 0.0 && x != x2) {
                double f = (y - x) / (x2 - x);
                if (f < frac) {
                    frac = f;
                    hit = k;
                }
            }
        }
        if (hit < targets.size()) {
            return {PassageResult::Kind::hit_target, targets[hit], a + frac * da,
                    hit};
        }
        // Same-side bridge correction.
        for (size_t k = 0; k < targets.size(); ++k) {
            double p = bridge_cross_prob(x, x2, targets[k], sg, dt);
            if (p > 0 && rng.uniform() < p)
                return {PassageResult::Kind::hit_target, targets[k], a + 0.5 * da, k};
        }
        a += da;
        t += dt;
        if (is_finite(dyn.iv.lo) && x2 <= dyn.iv.lo)
            return {PassageResult::Kind::hit_boundary_lo, dyn.iv.lo, a};
        if (is_finite(dyn.iv.hi) && x2 >= dyn.iv.hi)
            return {PassageResult::Kind::hit_boundary_hi, dyn.iv.hi, a};
        x = x2;
    }
}

bool measure_between(const RadonMeasure& mu, double a, double b) {
    double lo = std::min(a, b), hi = std::max(a, b);
    if (mu.atom_sum(lo, hi, false, false) > 0) return true;
    if (!mu.has_density()) return false;
    for (int i = 1; i < 16; ++i)
        if (mu.density(lo + (hi - lo) * i / 16.0) > 0) return true;
    return false;
}

// Birth-death chain on an s-grid with per-sojourn expected accrual from the
// cell-killed potential.
struct WalkGrid {
    std::vector<double> x, s, p_up, dA;

    size_t locate(double v) const {
        auto it = std::lower_bound(x.begin(), x.end(), v);
        size_t i = static_cast<size_t>(it - x.begin());
        if (i == 0) return 0;
        if (i >= x.size()) return x.size() - 1;
        return (v - x[i - 1] < x[i] - v) ? i - 1 : i;
    }
};

WalkGrid build_walk_grid(const DiffusionSpec& spec, const RadonMeasure& mu, double core_lo,
                         double core_hi, double s_step, double cut_lo, double cut_hi) {
    WalkGrid g;
    const auto& s = spec.scale;
    std::vector<double> sv;
    double s_lo = s(core_lo), s_hi = s(core_hi);
    size_t n_core = std::max<size_t>(2, static_cast<size_t>(std::ceil((s_hi - s_lo) / s_step)));
    for (size_t i = 0; i <= n_core; ++i) sv.push_back(s_lo + (s_hi - s_lo) * i / n_core);
    double stp = s_step;
    for (double v = s_lo; v > s(cut_lo);) {
        v -= stp;
        stp *= 1.2;
        sv.push_back(std::max(v, s(cut_lo)));
    }
    stp = s_step;
    for (double v = s_hi; v < s(cut_hi);) {
        v += stp;
        stp *= 1.2;
        sv.push_back(std::min(v, s(cut_hi)));
    }
    std::sort(sv.begin(), sv.end());
    sv.erase(std::unique(sv.begin(), sv.end()), sv.end());
    for (double v : sv) g.x.push_back(s.inverse(v));
    for (const Atom& a : mu.atoms())
        if (a.at > g.x.front() && a.at < g.x.back()) g.x.push_back(a.at);
    std::sort(g.x.begin(), g.x.end());
    g.x.erase(std::unique(g.x.begin(), g.x.end()), g.x.end());
    g.s.resize(g.x.size());
    for (size_t i = 0; i < g.x.size(); ++i) g.s[i] = s(g.x[i]);

    g.p_up.assign(g.x.size(), 0.5);
    g.dA.assign(g.x.size(), 0.0);
    for (size_t i = 1; i + 1 < g.x.size(); ++i) {
        double sl = g.s[i - 1], sm = g.s[i], sr = g.s[i + 1];
        g.p_up[i] = (sm - sl) / (sr - sl);
        auto u_cell = [&](double y) {
            double sy = s(y);
            double lo = std::min(sm, sy), hi = std::max(sm, sy);
            return (lo - sl) * (sr - hi) / (sr - sl);
        };
        g.dA[i] = measure_integrate(mu, u_cell, g.x[i - 1], g.x[i + 1], 1e-12, false, false);
    }
    return g;
}

} // namespace

EstimateResult estimate_pair_value(const DiffusionSpec& spec, const RadonMeasure& mu_A,
                                   double x, double c, const SimConfig& config) {
    if (x == c) {
        EstimateResult r;
        r.mean = 1.0;
        r.n_effective = config.n_paths;
        return r;
    }
    const bool from_left = x < c;
    const double far_scale_limit =
        from_left ? spec.scale.left_limit() : spec.scale.right_limit();
    const bool indicator_certain = !is_finite(far_scale_limit);

    if (config.scheme == Scheme::scale_random_walk) {
        // Cutoffs: the far side runs 64 core-widths out (or to the boundary).
        double width = std::max(1.0, std::fabs(c - x));
        double cut_lo = from_left ? x - 64 * width : c;
        double cut_hi = from_left ? c : x + 64 * width;
        if (is_finite(spec.interval.lo))
            cut_lo = std::max(cut_lo, spec.interval.lo + 1e-9 * width);
        if (is_finite(spec.interval.hi))
            cut_hi = std::min(cut_hi, spec.interval.hi - 1e-9 * width);
        WalkGrid grid = build_walk_grid(spec, mu_A, std::min(x, c), std::max(x, c),
                                        config.step, cut_lo, cut_hi);
        size_t start = grid.locate(x), target = grid.locate(c);
        return run_paths(config, [&, start, target](PathRng& rng) {
            PathOutcome out;
            size_t i = start;
            double a = 0.0;
            int64_t steps = 0;
            for (;;) {
                if (steps++ >= config.max_steps) {
                    out.truncated = !indicator_certain || measure_between(mu_A, grid.x[i], c);
                    out.value = out.truncated ? 0.0 : std::exp(-a);
                    return out;
                }
                if (i == target) {
                    out.value = std::exp(-a);
                    return out;
                }
                if (i == 0 || i + 1 == grid.x.size()) {
                    // Far cutoff or killed boundary.
                    bool at_far = from_left ? (i == 0) : (i + 1 == grid.x.size());
                    if (at_far && is_finite(from_left ? spec.interval.lo : spec.interval.hi)) {
                        out.value = 0.0; // genuinely absorbed before c
                        return out;
                    }
                    if (at_far && indicator_certain && !measure_between(mu_A, grid.x[i], c)) {
                        out.value = std::exp(-a);
                        return out;
                    }
                    out.truncated = true;
                    out.value = 0.0;
                    return out;
                }
                a += grid.dA[i];
                if (a > 45.0) {
                    out.value = 0.0;
                    return out;
                }
                i += (rng.uniform() < grid.p_up[i]) ? 1 : -1;
            }
        });
    }

    if (!spec.sde)
        throw ValidationError("estimate_pair_value",
                              "euler scheme needs the SDE form; use scale_random_walk");
    Dynamics dyn{spec.sde->drift, spec.sde->sigma, spec.interval};
    double h = band_width(config, dyn.sigma(x));
    Accrual acc = make_accrual(mu_A, spec.speed, h, {c});
    std::vector<double> sensitive{c};
    for (const Atom& at : mu_A.atoms()) sensitive.push_back(at.at);

    return run_paths(config, [&, h](PathRng& rng) {
        PathOutcome out;
        PassageResult r = run_passage(rng, config, dyn, acc, x, {c}, sensitive, 2 * h);
        switch (r.kind) {
            case PassageResult::Kind::hit_target:
                out.value = std::exp(-r.a);
                break;
            case PassageResult::Kind::discount_dead:
                out.value = 0.0;
                break;
            case PassageResult::Kind::hit_boundary_lo:
            case PassageResult::Kind::hit_boundary_hi:
                out.value = 0.0; // reached the far boundary first
                break;
            case PassageResult::Kind::truncated:
                if (indicator_certain && !measure_between(mu_A, r.x, c)) {
                    out.value = std::exp(-r.a);
                } else {
                    out.value = 0.0;
                    out.truncated = true;
                }
                break;
        }
        return out;
    });
}

EstimateResult martingale_check(const DiffusionSpec& spec,
                                const std::function<double(double)>& g,
                                const RadonMeasure& mu_A, double x, double a, double b,
                                const SimConfig& config) {
    if (!(a < x && x < b))
        throw ValidationError("martingale_check", "requires a < x < b");
    const double gx = g(x);

    if (config.scheme == Scheme::scale_random_walk) {
        WalkGrid grid = build_walk_grid(spec, mu_A, a, b, config.step, a, b);
        size_t start = grid.locate(x);
        return run_paths(config, [&, start](PathRng& rng) {
            PathOutcome out;
            size_t i = start;
            double acc_a = 0.0;
            int64_t steps = 0;
            for (;;) {
                if (i == 0 || i + 1 == grid.x.size()) {
                    out.value = g(grid.x[i]) * std::exp(-acc_a) - gx;
                    return out;
                }
                if (steps++ >= config.max_steps || acc_a > 45.0) {
                    out.value = -gx;
                    out.truncated = steps >= config.max_steps;
                    return out;
                }
                acc_a += grid.dA[i];
                i += (rng.uniform() < grid.p_up[i]) ? 1 : -1;
            }
        });
    }

    if (!spec.sde)
        throw ValidationError("martingale_check", "euler scheme needs the SDE form");
    Dynamics dyn{spec.sde->drift, spec.sde->sigma, spec.interval};
    double h = band_width(config, dyn.sigma(x));
    Accrual acc = make_accrual(mu_A, spec.speed, h, {a, b});
    std::vector<double> sensitive{a, b};
    for (const Atom& at : mu_A.atoms()) sensitive.push_back(at.at);

    return run_paths(config, [&, h, gx](PathRng& rng) {
        PathOutcome out;
        PassageResult r = run_passage(rng, config, dyn, acc, x, {a, b}, sensitive, 2 * h);
        switch (r.kind) {
            case PassageResult::Kind::hit_target:
                out.value = g(r.x) * std::exp(-r.a) - gx;
                break;
            case PassageResult::Kind::discount_dead:
                out.value = -gx;
                break;
            default:
                out.value = -gx;
                out.truncated = true;
                break;
        }
        return out;
    });
}

// Far excursions past a near-zone edge only matter through whether they come
// back; the return probability is an exact scale ratio and a continuous path
// re-enters at the edge itself, so the excursion is replaced by one Bernoulli
// draw plus a teleport. Valid when nothing accrues beyond the edge.
EstimateResult estimate_q_hitting(const TransformedDiffusion& td, double x, double y,
                                  const SimConfig& config) {
    if (!td.has_drift())
        throw ValidationError("estimate_q_hitting", "transformed diffusion lacks a drift form");
    if (x == y) {
        EstimateResult r;
        r.mean = 1.0;
        r.n_effective = config.n_paths;
        return r;
    }
    if (!td.transient())
        throw NumericError("estimate_q_hitting: transformed diffusion is recurrent");
    TransformedDiffusion tdc = td;
    Dynamics dyn{[tdc](double v) { return tdc.drift(v); }, td.base().sde->sigma,
                 td.base().interval};
    std::vector<double> sensitive{y};
    for (const Atom& at : td.m_g().atoms()) sensitive.push_back(at.at);
    double h = band_width(config, dyn.sigma(x));
    const double width = std::max(std::fabs(x - y), 8 * h);
    double dn_edge = std::min(x, y) - 0.5 * width;
    double up_edge = std::max(x, y) + 0.5 * width;
    if (is_finite(dyn.iv.lo)) dn_edge = std::max(dn_edge, dyn.iv.lo);
    if (is_finite(dyn.iv.hi)) up_edge = std::min(up_edge, dyn.iv.hi);

    return run_paths(config, [&, h, dn_edge, up_edge](PathRng& rng) {
        PathOutcome out;
        double cur = x;
        double t = 0.0;
        int64_t steps = 0;
        for (;;) {
            if (t >= config.horizon || steps++ >= config.max_steps) {
                out.truncated = true;
                out.value = q_hitting_probability(td, cur, y);
                return out;
            }
            double dt = step_for(config, dyn, cur, sensitive, 2 * h);
            double sg = dyn.sigma(cur);
            double x2 = cur + dyn.drift(cur) * dt + sg * std::sqrt(dt) * rng.normal();
            t += dt;
            if ((cur - y) * (x2 - y) <= 0.0) {
                out.value = 1.0;
                return out;
            }
            double p = bridge_cross_prob(cur, x2, y, sg, dt);
            if (p > 0 && rng.uniform() < p) {
                out.value = 1.0;
                return out;
            }
            if (x2 <= dn_edge) {
                if (x2 <= dyn.iv.lo) {
                    out.value = 0.0;
                    return out;
                }
                double p_ret = q_hitting_probability(td, x2, dn_edge);
                if (rng.uniform() >= p_ret) {
                    out.value = 0.0;
                    return out;
                }
                x2 = dn_edge;
            } else if (x2 >= up_edge) {
                if (x2 >= dyn.iv.hi) {
                    out.value = 0.0;
                    return out;
                }
                double p_ret = q_hitting_probability(td, x2, up_edge);
                if (rng.uniform() >= p_ret) {
                    out.value = 0.0;
                    return out;
                }
                x2 = up_edge;
            }
            cur = x2;
        }
    });
}

EstimateResult estimate_local_time_total(const TransformedDiffusion& td, double y,
                                         const SimConfig& config) {
    if (!td.has_drift())
        throw ValidationError("estimate_local_time_total",
                              "transformed diffusion lacks a drift form");
    if (!td.transient())
        throw NumericError("estimate_local_time_total: total local time is infinite for a "
                           "recurrent transformed diffusion");
    TransformedDiffusion tdc = td;
    Dynamics dyn{[tdc](double v) { return tdc.drift(v); }, td.base().sde->sigma,
                 td.base().interval};
    double h = band_width(config, dyn.sigma(y));
    std::vector<double> sensitive{y};
    double dn_edge = y - std::max(8 * h, 0.25);
    double up_edge = y + std::max(8 * h, 0.25);
    if (is_finite(dyn.iv.lo)) dn_edge = std::max(dn_edge, dyn.iv.lo);
    if (is_finite(dyn.iv.hi)) up_edge = std::min(up_edge, dyn.iv.hi);

    return run_paths(config, [&, h, dn_edge, up_edge](PathRng& rng) {
        PathOutcome out;
        double x = y, t = 0.0;
        double occ_half = 0.0, occ_full = 0.0;
        int64_t steps = 0;
        for (;;) {
            if (t >= config.horizon || steps++ >= config.max_steps) {
                out.truncated = true;
                break;
            }
            double dt = step_for(config, dyn, x, sensitive, 2 * h);
            double sg = dyn.sigma(x);
            double d = std::fabs(x - y);
            if (d <= 0.5 * h) occ_half += dt * sg * sg;
            if (d <= h) occ_full += dt * sg * sg;
            double x2 = x + dyn.drift(x) * dt + sg * std::sqrt(dt) * rng.normal();
            t += dt;
            if (x2 <= dn_edge) {
                if (x2 <= dyn.iv.lo) break;
                double p_ret = q_hitting_probability(td, x2, dn_edge);
                if (rng.uniform() >= p_ret) break;
                x2 = dn_edge;
            } else if (x2 >= up_edge) {
                if (x2 >= dyn.iv.hi) break;
                double p_ret = q_hitting_probability(td, x2, up_edge);
                if (rng.uniform() >= p_ret) break;
                x2 = up_edge;
            }
            x = x2;
        }
        out.value = 2.0 * (occ_half / h) - occ_full / (2.0 * h);
        return out;
    });
}

EstimateResult estimate_stopping_value(const DiffusionSpec& spec, const RadonMeasure& mu_A,
                                       const std::function<double(double)>& reward,
                                       const std::vector<std::pair<double, double>>& region,
                                       double x, const SimConfig& config) {
    if (!spec.sde)
        throw ValidationError("estimate_stopping_value", "euler scheme needs the SDE form");
    auto in_region = [&](double v) {
        for (const auto& [lo, hi] : region)
            if (v >= lo && v <= hi) return true;
        return false;
    };
    if (in_region(x)) {
        EstimateResult r;
        r.mean = reward(x);
        r.n_effective = config.n_paths;
        return r;
    }
    // Region edges are the passage targets.
    std::vector<double> targets;
    for (const auto& [lo, hi] : region) {
        if (is_finite(lo)) targets.push_back(lo);
        if (is_finite(hi)) targets.push_back(hi);
    }
    if (targets.empty())
        throw ValidationError("estimate_stopping_value", "region has no finite edges");
    Dynamics dyn{spec.sde->drift, spec.sde->sigma, spec.interval};
    double h = band_width(config, dyn.sigma(x));
    Accrual acc = make_accrual(mu_A, spec.speed, h, targets);
    std::vector<double> sensitive = targets;
    for (const Atom& at : mu_A.atoms()) sensitive.push_back(at.at);

    return run_paths(config, [&, h](PathRng& rng) {
        PathOutcome out;
        PassageResult r = run_passage(rng, config, dyn, acc, x, targets, sensitive, 2 * h);
        switch (r.kind) {
            case PassageResult::Kind::hit_target:
                out.value = reward(r.x) * std::exp(-r.a);
                break;
            case PassageResult::Kind::discount_dead:
                out.value = 0.0;
                break;
            default:
                out.value = 0.0;
                out.truncated = (r.kind == PassageResult::Kind::truncated);
                break;
        }
        return out;
    });
}

} // namespace iwpair
