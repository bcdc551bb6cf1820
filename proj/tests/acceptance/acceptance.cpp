// Acceptance run: one PASS/FAIL line per criterion. With no arguments every
// criterion runs; otherwise only the listed numbers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "crsa/cli/commands.hpp"
#include "crsa/cli/config.hpp"
#include "crsa/errors.hpp"
#include "crsa/estimator.hpp"
#include "crsa/mathcore.hpp"
#include "crsa/optimizer.hpp"
#include "crsa/sim.hpp"

using namespace crsa;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const SensingPoint kRefSensing{1e-3, 0.2, 0.3};
const LinkQuality kRefLink{0.9, 0.8};
Scenario ref_scenario() { return Scenario::fixed(0.9, 0.8, 0.2, 0.3); }

// Long-double grid maximizer over [lo, hi] with the end point included.
template <class F>
std::pair<long double, long double> grid_argmax(F f, long double lo, long double hi, long double step)
{
    long double best_x = lo;
    long double best_v = -INFINITY;
    const auto n = static_cast<long>(std::floor((hi - lo) / step));
    for (long i = 0; i <= n + 1; ++i) {
        const long double x = i > n ? hi : lo + step * static_cast<long double>(i);
        const long double v = f(x);
        if (!std::isnan(v) && v > best_v) {
            best_v = v;
            best_x = x;
        }
    }
    return {best_x, best_v};
}

// 1. Closed-form fractional program against a 1e-5 grid.
Verdict criterion_1()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_x = 0.0;
    double worst_obj = 0.0;
    for (int i = 0; i < 1000; ++i) {
        FractionalProgram p;
        p.a = 0.01 + u(rng);
        p.f = 0.01 + u(rng);
        p.c = 0.05 + u(rng);
        p.d = p.c * (1.0 + 2.0 * u(rng));
        p.K = 0.05 + 2.0 * u(rng);
        p.w = u(rng) * p.d;
        const auto sol = solve_fractional(p);
        const long double ub = std::min(1.0L, (static_cast<long double>(p.d) - p.w) / p.c);
        const auto obj = [&](long double x) { return (p.a * x + p.f) / (p.c * x - p.d) + p.K * x; };
        const auto [gx, gv] = grid_argmax(obj, 0.0L, ub, 1e-5L);
        worst_x = std::max(worst_x, static_cast<double>(std::fabs(gx - sol.x_star)));
        worst_obj = std::max(worst_obj, static_cast<double>(std::fabs(gv - obj(sol.x_star))));
    }
    const double secs = seconds_since(t0);
    return {worst_x <= 2e-5 && worst_obj <= 1e-6 && secs < 10.0,
            fmt("1000 programs, max |dx| = %.3g, max objective gap = %.3g, %.2f s", worst_x, worst_obj, secs)};
}

// 2. S1 and S2 closed forms against grid search on the service-rate objective.
Verdict criterion_2()
{
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_s1 = 0.0;
    double worst_s2 = 0.0;
    int drawn = 0;
    while (drawn < 500) {
        const double pp = 0.1 + 0.9 * u(rng);
        const double pmd = 0.01 + 0.98 * u(rng);
        const double pfa = 0.01 + 0.98 * u(rng);
        const double b = u(rng);
        const double lp = u(rng) * pp;
        if (!s2_feasible(lp, pmd, b, pp)) continue;
        ++drawn;
        // mu_s with P_s = 1, NaN where the primary constraint fails.
        const auto value = [&](long double a, long double bb) -> long double {
            const long double mu_p = pp * (pmd * (1 - a) + (1 - pmd) * (1 - bb));
            if (mu_p < lp || mu_p <= 0) return NAN;
            return (a * (1 - pfa) + bb * pfa) * (1 - lp / mu_p);
        };
        const auto g1 = grid_argmax([&](long double a) { return value(a, 0.0L); }, 0.0L, 1.0L, 1e-5L);
        const auto g2 = grid_argmax([&](long double a) { return value(a, b); }, 0.0L, 1.0L, 1e-5L);
        worst_s1 = std::max(worst_s1, static_cast<double>(std::fabs(g1.first - optimal_as_s1(lp, pmd, pp))));
        worst_s2 = std::max(worst_s2,
                            static_cast<double>(std::fabs(g2.first - optimal_as_s2_given(b, lp, pmd, pfa, pp))));
    }
    return {worst_s1 <= 2e-5 && worst_s2 <= 2e-5,
            fmt("500 draws, max |a_s - grid| S1 = %.3g, S2 = %.3g", worst_s1, worst_s2)};
}

// 3. Dominant-mode simulation against the closed-form rates.
Verdict criterion_3()
{
    const auto t0 = Clock::now();
    struct Point {
        double pp, ps, pfa, pmd, lambda_p;
    };
    const std::vector<Point> points{
        {0.9, 0.8, 0.2, 0.3, 0.3},    // reference link
        {0.7, 0.6, 0.1, 0.1, 0.2},
        {0.95, 0.9, 0.3, 0.05, 0.5},
        {0.6609, 0.905, 0.2, 0.02, 0.1},
        {0.8, 0.5, 0.05, 0.5, 0.25},
    };
    double worst_z = 0.0;
    int checks = 0;
    int failures = 0;
    std::string where;
    std::uint64_t seed = 1;
    for (const auto& pt : points) {
        const Scenario sc = Scenario::fixed(pt.pp, pt.ps, pt.pfa, pt.pmd);
        const SensingPoint sensing{1e-3, pt.pfa, pt.pmd};
        OptimizationRequest req;
        req.lambda_p = pt.lambda_p;
        req.variant = Variant::S2;
        const auto s2 = optimize(req, sc);
        const std::vector<SchemeConfig> schemes{
            SchemeConfig::conventional(sensing),
            SchemeConfig::s1(optimal_as_s1(pt.lambda_p, pt.pmd, pt.pp), sensing),
            SchemeConfig::s2(s2.best.a_s, s2.best.b_s, sensing),
            SchemeConfig::s0(optimal_as_s0(pt.lambda_p, pt.pp)),
        };
        for (const auto& scheme : schemes) {
            SimConfig c;
            c.slots = 1'000'000;
            c.seed = seed++;
            c.lambda_p = pt.lambda_p;
            c.lambda_s = 0.05;
            c.scheme = scheme;
            c.link = {pt.pp, pt.ps};
            c.mode = SimMode::Dominant;
            const SimResult r = run(c);
            const ServiceRates want = service_rates(scheme, c.link, pt.lambda_p);
            for (const auto& [est, target] : {std::pair{r.empirical_mu_p, want.mu_p}, std::pair{r.empirical_mu_s, want.mu_s}}) {
                ++checks;
                const double z = std::abs(est.value - target) / est.std_error;
                if (z > worst_z) {
                    worst_z = z;
                    where = fmt("%s at P_p=%.4g", std::string(to_string(scheme.variant)).c_str(), pt.pp);
                }
                failures += z <= 3.0 ? 0 : 1;
            }
        }
    }
    const double secs = seconds_since(t0);
    return {failures == 0 && secs < 120.0,
            fmt("%d rate checks, %d beyond 3 SE, worst z = %.2f (%s), %.1f s", checks, failures, worst_z,
                where.c_str(), secs)};
}

// 4. Empirical stability threshold against the analytic mu_p.
Verdict criterion_4()
{
    SimConfig c;
    c.slots = 1'000'000;
    c.seed = 9;
    c.scheme = SchemeConfig::s1(0.5, kRefSensing);
    c.link = kRefLink;
    c.mode = SimMode::Dominant;
    const double mu_p = primary_service_rate(c.scheme, c.link.p_bar_p_pd);
    const std::uint64_t window = 500'000;

    const auto stable_at = [&](double lp) {
        SimConfig k = c;
        k.lambda_p = lp;
        return measure_stability(k, window).primary.empirically_stable;
    };
    double lo = 0.0;
    double hi = 1.0;
    while (hi - lo > 1e-3) {
        const double mid = 0.5 * (lo + hi);
        (stable_at(mid) ? lo : hi) = mid;
    }
    const double threshold = 0.5 * (lo + hi);
    bool ok = std::abs(threshold - mu_p) <= 0.01;

    double worst_below = -INFINITY;
    for (double lp : {0.5 * mu_p, 0.9 * mu_p, mu_p - 0.02}) {
        SimConfig k = c;
        k.lambda_p = lp;
        const auto rep = measure_stability(k, window);
        worst_below = std::max(worst_below, rep.drift);
        ok = ok && rep.drift <= kDriftThreshold;
    }
    double worst_gap = 0.0;
    for (double lp : {mu_p + 0.02, mu_p + 0.05, std::min(1.0, 1.1 * mu_p)}) {
        SimConfig k = c;
        k.lambda_p = lp;
        const auto rep = measure_stability(k, window);
        worst_gap = std::max(worst_gap, std::abs(rep.drift - (lp - mu_p)));
        ok = ok && !rep.stable;
    }
    ok = ok && worst_gap <= 0.005;
    return {ok, fmt("threshold %.4f vs mu_p %.4f, max drift below %.2e, max |drift - gap| above %.2e", threshold,
                    mu_p, worst_below, worst_gap)};
}

// 5. Region nesting, b_s = 0 reduction, union dominance, perfect sensing.
Verdict criterion_5()
{
    const auto grid = linspace(0.0, 0.9, 50);
    OptimizationRequest req;
    bool ok = true;
    double worst_b0 = 0.0;

    PhyParams phy;
    phy.primary_snr = snr_gain_for_success(phy.spectral_load(), 0.6609);
    const Scenario phy_scenario = Scenario::from_phy(phy, {SensingTarget::Kind::FixedPfa, 0.2}, default_tau_grid(phy.slot_s));

    for (const Scenario& s : {ref_scenario(), phy_scenario}) {
        const auto sc = trace_region(Variant::Sc, grid, req, s);
        const auto s1 = trace_region(Variant::S1, grid, req, s);
        const auto s2 = trace_region(Variant::S2, grid, req, s);
        const auto s0 = trace_region(Variant::S0, grid, req, s);
        const auto un = trace_union(grid, req, s);
        OptimizationRequest b0 = req;
        b0.b_s_grid = {0.0};
        const auto s2b0 = trace_region(Variant::S2, grid, b0, s);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            ok = ok && s2.points[i].lambda_s >= s1.points[i].lambda_s && s1.points[i].lambda_s >= 0.0;
            worst_b0 = std::max(worst_b0, std::abs(s2b0.points[i].lambda_s - s1.points[i].lambda_s));
            for (const auto* c : {&sc, &s1, &s2, &s0}) {
                ok = ok && un.curve.points[i].lambda_s >= c->points[i].lambda_s;
            }
        }
    }

    // Perfect detector at every sensing time: compare tau by tau.
    Scenario perfect = phy_scenario;
    for (auto& c : perfect.candidates) {
        c.sensing.p_fa = 0.0;
        c.sensing.p_md = 0.0;
    }
    double worst_perfect = 0.0;
    for (double lp : grid) {
        req.lambda_p = lp;
        std::vector<OptimizationResult> rs;
        for (Variant v : {Variant::Sc, Variant::S1, Variant::S2}) {
            req.variant = v;
            rs.push_back(optimize(req, perfect));
        }
        for (std::size_t k = 0; k < perfect.candidates.size(); ++k) {
            worst_perfect = std::max({worst_perfect, std::abs(rs[0].per_tau[k].lambda_s - rs[1].per_tau[k].lambda_s),
                                      std::abs(rs[2].per_tau[k].lambda_s - rs[1].per_tau[k].lambda_s)});
        }
    }
    ok = ok && worst_b0 <= 1e-12 && worst_perfect <= 1e-12;
    return {ok, fmt("nesting and union hold: %s, max |S2(b=0) - S1| = %.2g, max perfect-sensing spread = %.2g",
                    ok ? "yes" : "no", worst_b0, worst_perfect)};
}

// 6. Optimal access probability and boundary are non-increasing in lambda_p.
Verdict criterion_6()
{
    const auto grid = linspace(0.0, 0.9, 50);
    OptimizationRequest req;
    std::string bad;
    for (Variant v : {Variant::Sc, Variant::S1, Variant::S2, Variant::S0}) {
        const auto curve = trace_region(v, grid, req, ref_scenario());
        for (std::size_t i = 1; i < curve.points.size(); ++i) {
            const auto& a = curve.points[i - 1];
            const auto& b = curve.points[i];
            if (b.a_s > a.a_s || b.lambda_s > a.lambda_s) {
                bad += fmt(" %s@%.3f", std::string(to_string(v)).c_str(), b.lambda_p);
                break;
            }
        }
    }
    return {bad.empty(), bad.empty() ? "a_s* and boundary non-increasing for Sc, S1, S2, S0 over 50 points"
                                     : "increase found at" + bad};
}

// 7. Crossovers in the sensing-time sweep at P_FA = 0.2, P_p = 0.6609.
Verdict criterion_7()
{
    cli::RunConfig cfg = cli::load_config(CRSA_CONFIG_DIR "/sweep_pfa02.json");
    cfg.output_dir = CRSA_WORK_DIR "/criterion_7";
    const auto summary = cli::cmd_sweep(cfg);
    const auto& x = summary.at("crossovers");
    const auto& short_long = x.at("s2_short_tau_beats_long_tau");
    const auto& silent_long = x.at("s0_beats_s2_long_tau");
    const bool i_ok = short_long.at("count").get<int>() > 0 &&
                      short_long.at("example").at("lambda_p").get<double>() <= 0.1;
    const bool ii_ok = silent_long.at("count").get<int>() > 0;

    // Stronger form: for small positive lambda_p the shortest
    // sensing time also beats no sensing. Reported, not required.
    PhyParams phy = *cfg.phy;
    const Scenario s = Scenario::from_phy(phy, cfg.sensing, cfg.tau_grid);
    Scenario shortest = s;
    shortest.candidates = {s.candidates.front()};
    OptimizationRequest req;
    req.lambda_p = 0.02;
    const double s2_short = optimize(req, shortest).lambda_s_max;
    req.variant = Variant::S0;
    const double s0 = optimize(req, s).lambda_s_max;

    return {i_ok && ii_ok,
            fmt("(i) %d cells, first at lambda_p=%.3g; (ii) %d cells; at lambda_p=0.02 S2(shortest tau)=%.4f vs S0=%.4f",
                short_long.at("count").get<int>(),
                short_long.at("example").is_null() ? NAN : short_long.at("example").at("lambda_p").get<double>(),
                silent_long.at("count").get<int>(), s2_short, s0)};
}

// 8. Mean primary delay of a silent-secondary queue.
Verdict criterion_8()
{
    const double mu_p = 0.9;
    double worst = 0.0;
    std::string detail;
    for (double frac : {0.1, 0.3, 0.5}) {
        SimConfig c;
        c.slots = 1'000'000;
        c.seed = 100 + static_cast<std::uint64_t>(frac * 10);
        c.lambda_p = frac * mu_p;
        c.link = {mu_p, 0.8};
        c.scheme = SchemeConfig::silent();
        const SimResult r = run(c);
        const double want = primary_delay(c.lambda_p, mu_p);
        const double rel = std::abs(r.mean_primary_delay - want) / want;
        worst = std::max(worst, rel);
        detail += fmt(" %.3f/%.3f", r.mean_primary_delay, want);
    }
    return {worst <= 0.05, fmt("measured/formula:%s, max relative error %.3g", detail.c_str(), worst)};
}

// 9. Estimator consistency and an end-to-end learning run.
Verdict criterion_9()
{
    const double lambda_p = 0.3;
    const double p_bar = 0.9;
    bool ok = true;
    std::string detail;
    std::uint64_t seed = 31;
    for (double p_e : {0.0, 0.1, 0.3}) {
        SimConfig c;
        c.slots = 100'000;
        c.seed = seed++;
        c.lambda_p = lambda_p;
        c.link = {p_bar, 0.8};
        c.feedback_error = p_e;
        const auto log = FeedbackLog::from_counts(run(c).feedback_counts, p_e);
        const auto e = estimate(log, EstimatorMode::Unbiased);
        const double z = std::abs(e.lambda_p_est - lambda_p) / e.lambda_p_std_error;
        const double link_err = e.p_bar_p_pd_est ? std::abs(*e.p_bar_p_pd_est - p_bar) : INFINITY;
        ok = ok && z <= 4.0 && link_err <= 0.01;
        detail += fmt(" P_e=%.1f: z=%.2f |dP|=%.4f;", p_e, z, link_err);
    }

    LearningConfig lc;
    lc.lp_slots = 100'000;
    lc.rp_slots = 1'000'000;
    lc.seed = 8;
    lc.lambda_p = lambda_p;
    lc.lambda_s = 1.0;
    lc.feedback_error = 0.1;
    lc.scenario = ref_scenario();
    lc.request.variant = Variant::S2;
    lc.use_margin = true;
    const auto rep = learning_then_regular(lc);
    ok = ok && rep.regular.primary_stable && !rep.fallback_no_access;
    detail += fmt(" LP->RP margin %.4f, primary drift %.2e, stable %s", rep.margin_used, rep.regular.primary_drift,
                  rep.regular.primary_stable ? "yes" : "no");
    return {ok, detail};
}

// 10. Coupled dominant/original runs.
Verdict criterion_10()
{
    bool ok = true;
    int dom = 0;
    int sat = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SimConfig c;
        c.slots = 100'000;
        c.seed = seed;
        c.lambda_p = 0.3;
        c.lambda_s = 0.2;
        c.scheme = SchemeConfig::s2(0.8, 0.2, kRefSensing);
        c.link = kRefLink;
        const auto rep = compare_dominant(c);
        dom += rep.dominant_ge_original ? 1 : 0;
        sat += rep.saturation_indistinguishable ? 1 : 0;
        ok = ok && rep.dominant_ge_original && rep.saturation_indistinguishable && rep.slots_compared == c.slots;
    }
    return {ok, fmt("slotwise dominance %d/10 seeds, saturation traces identical %d/10 seeds", dom, sat)};
}

// 11. Q-function and ROC roundtrips.
Verdict criterion_11()
{
    long double worst_ld = 0.0L;
    for (int i = -6000; i <= 6000; ++i) {
        const long double z = static_cast<long double>(i) / 1000.0L;
        worst_ld = std::max(worst_ld, std::fabs(q_inv(q_func(z)) - z));
    }
    double worst_d = 0.0;
    for (int i = -5000; i <= 6000; ++i) {
        const double z = i / 1000.0;
        worst_d = std::max(worst_d, std::abs(q_inv(q_func(z)) - z));
    }

    const PhyParams phy;
    double worst_roc = 0.0;
    for (double tau : default_tau_grid(phy.slot_s)) {
        for (int k = -40; k <= 40; ++k) {
            const double eps = phy.noise_var * (1.0 + 0.001 * k);
            const auto pt = roc_from_threshold(phy, eps, tau);
            if (pt.p_md > 0 && pt.p_md < 1) {
                worst_roc = std::max(worst_roc, std::abs(pfa_for_target_pmd(phy, pt.p_md, tau).p_fa - pt.p_fa));
            }
            if (pt.p_fa > 0 && pt.p_fa < 1) {
                worst_roc = std::max(worst_roc, std::abs(pmd_for_target_pfa(phy, pt.p_fa, tau).p_md - pt.p_md));
            }
        }
    }
    return {worst_ld <= 1e-9L && worst_roc <= 1e-9,
            fmt("q roundtrip on [-6, 6] (long double) %.2Lg; double on [-5, 6] %.2g; ROC roundtrip %.2g", worst_ld,
                worst_d, worst_roc)};
}

}  // namespace

int main(int argc, char** argv)
{
    const std::map<int, std::function<Verdict()>> criteria{
        {1, criterion_1}, {2, criterion_2}, {3, criterion_3},   {4, criterion_4},
        {5, criterion_5}, {6, criterion_6}, {7, criterion_7},   {8, criterion_8},
        {9, criterion_9}, {10, criterion_10}, {11, criterion_11},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        const int n = std::atoi(argv[i]);
        if (!criteria.count(n)) {
            std::fprintf(stderr, "unknown criterion '%s'\n", argv[i]);
            return 2;
        }
        selected.insert(n);
    }
    if (selected.empty()) {
        for (const auto& [n, _] : criteria) selected.insert(n);
    }

    int failed = 0;
    for (int n : selected) {
        Verdict v;
        try {
            v = criteria.at(n)();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %2d: %s  %s\n", n, v.pass ? "PASS" : "FAIL", v.detail.c_str());
        std::fflush(stdout);
        failed += v.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
