#include "crsa/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crsa/errors.hpp"
#include "crsa/mathcore.hpp"

namespace crsa {

namespace {

void require_primary_link(double p_bar_p_pd)
{
    if (!(p_bar_p_pd > 0.0 && p_bar_p_pd <= 1.0)) {
        throw DomainError("primary success probability must lie in (0, 1]");
    }
}

void require_load(double lambda_p, double margin)
{
    if (!(lambda_p >= 0.0 && lambda_p <= 1.0)) {
        throw DomainError("lambda_p must lie in [0, 1]");
    }
    if (!(margin >= 0.0)) {
        throw DomainError("margin must be >= 0");
    }
}

OptimizationResult empty_result(const OptimizationRequest& req)
{
    OptimizationResult out;
    if (req.margin > 0.0) {
        out.delay_bound = (1.0 - req.lambda_p) / req.margin;
    }
    return out;
}

// Keeps the first strictly better candidate, so ties resolve toward the
// earlier (smaller tau, then smaller b_s) grid point.
void offer(OptimizationResult& out, const SchemeConfig& cfg, double lambda_s, double mu_p,
           double p_bar_s_sd)
{
    if (!out.feasible || lambda_s > out.lambda_s_max) {
        out.feasible = true;
        out.best = cfg;
        out.lambda_s_max = lambda_s;
        out.mu_p = mu_p;
        out.p_bar_s_sd = p_bar_s_sd;
    }
}

double boundary_value(const SchemeConfig& cfg, const LinkQuality& link, double lambda_p)
{
    return service_rates(cfg, link, lambda_p).mu_s;
}

}  // namespace

SensingPoint SensingTarget::at(const PhyParams& phy, double tau) const
{
    switch (kind) {
    case Kind::FixedPfa: return pmd_for_target_pfa(phy, value, tau);
    case Kind::FixedPmd: return pfa_for_target_pmd(phy, value, tau);
    case Kind::FixedThreshold: return roc_from_threshold(phy, value, tau);
    }
    throw DomainError("SensingTarget: unknown kind");
}

std::string_view to_string(SensingTarget::Kind kind) noexcept
{
    switch (kind) {
    case SensingTarget::Kind::FixedPfa: return "pfa";
    case SensingTarget::Kind::FixedPmd: return "pmd";
    case SensingTarget::Kind::FixedThreshold: return "threshold";
    }
    return "?";
}

Scenario Scenario::from_phy(const PhyParams& phy, const SensingTarget& target,
                            std::span<const double> tau_grid)
{
    phy.validate();
    if (tau_grid.empty()) {
        throw DomainError("Scenario: tau grid must not be empty");
    }
    Scenario s;
    s.p_bar_p_pd = primary_success_prob(phy);
    s.p_bar_s_sd_unsensed = secondary_success_prob(phy, 0.0);
    s.candidates.reserve(tau_grid.size());
    double prev = 0.0;
    for (double tau : tau_grid) {
        if (!(tau > prev) || tau >= phy.slot_s) {
            throw DomainError("Scenario: tau grid must be strictly increasing inside (0, T)");
        }
        prev = tau;
        s.candidates.push_back({target.at(phy, tau), secondary_success_prob(phy, tau)});
    }
    return s;
}

Scenario Scenario::fixed(double p_bar_p_pd, double p_bar_s_sd, double p_fa, double p_md,
                         double nominal_tau)
{
    const auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(p_bar_p_pd) || !prob(p_bar_s_sd) || !prob(p_fa) || !prob(p_md) || !(nominal_tau >= 0.0)) {
        throw DomainError("Scenario::fixed: probabilities must lie in [0, 1]");
    }
    Scenario s;
    s.p_bar_p_pd = p_bar_p_pd;
    s.p_bar_s_sd_unsensed = p_bar_s_sd;
    s.candidates.push_back({{nominal_tau, p_fa, p_md}, p_bar_s_sd});
    return s;
}

Scenario Scenario::with_primary(double p_bar_p_pd) const
{
    Scenario s = *this;
    s.p_bar_p_pd = p_bar_p_pd;
    return s;
}

std::vector<double> linspace(double start, double stop, std::size_t count)
{
    std::vector<double> out;
    if (count == 0) {
        return out;
    }
    if (count == 1) {
        out.push_back(start);
        return out;
    }
    out.reserve(count);
    const double step = (stop - start) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(i + 1 == count ? stop : start + step * static_cast<double>(i));
    }
    return out;
}

std::vector<double> logspace(double start, double stop, std::size_t count)
{
    if (!(start > 0.0 && stop > 0.0)) {
        throw DomainError("logspace: bounds must be positive");
    }
    std::vector<double> out = linspace(std::log(start), std::log(stop), count);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (i + 1 == out.size()) ? stop : (i == 0 ? start : std::exp(out[i]));
    }
    return out;
}

std::vector<double> default_tau_grid(double slot_s)
{
    std::vector<double> grid{1e-4 * slot_s};
    const auto logs = logspace(1e-3 * slot_s, (1.0 - 1e-3) * slot_s, 64);
    grid.insert(grid.end(), logs.begin(), logs.end());
    return grid;
}

std::vector<double> default_b_grid() { return linspace(0.0, 1.0, 33); }

void OptimizationRequest::validate() const
{
    require_load(lambda_p, margin);
    if (variant == Variant::S2) {
        if (b_s_grid.empty()) {
            throw DomainError("OptimizationRequest: b_s grid must not be empty");
        }
        double prev = -1.0;
        for (double b : b_s_grid) {
            if (!(b > prev) || b > 1.0) {
                throw DomainError("OptimizationRequest: b_s grid must be strictly increasing in [0, 1]");
            }
            prev = b;
        }
    }
}

double optimal_as_s1(double lambda_p, double p_md, double p_bar_p_pd, double margin)
{
    require_primary_link(p_bar_p_pd);
    require_load(lambda_p, margin);
    const double loaded = lambda_p + margin;
    if (loaded > p_bar_p_pd) {
        throw InfeasibleError("optimal_as_s1: lambda_p + margin exceeds P_p");
    }
    if (p_md <= 0.0) {
        return 1.0;  // access never disturbs a correctly detected primary
    }
    const double unconstrained = (1.0 - std::sqrt(lambda_p / p_bar_p_pd)) / p_md;
    const double stability_cap = (1.0 - loaded / p_bar_p_pd) / p_md;
    return std::max(std::min({unconstrained, stability_cap, 1.0}), 0.0);
}

double optimal_as_s2_given(double b_s, double lambda_p, double p_md, double p_fa,
                           double p_bar_p_pd, double margin)
{
    require_primary_link(p_bar_p_pd);
    require_load(lambda_p, margin);
    if (!(b_s >= 0.0 && b_s <= 1.0) || !(p_md >= 0.0 && p_md <= 1.0) || !(p_fa >= 0.0 && p_fa <= 1.0)) {
        throw DomainError("optimal_as_s2_given: probabilities must lie in [0, 1]");
    }
    if (!s2_feasible(lambda_p + margin, p_md, b_s, p_bar_p_pd)) {
        throw InfeasibleError("optimal_as_s2_given: P_MD + (1-P_MD)(1-b_s) < lambda_p/P_p");
    }

    if (b_s == 0.0) {
        // Same maximizer; the S1 form keeps S2 >= S1 exact in floating point.
        return optimal_as_s1(lambda_p, p_md, p_bar_p_pd, margin);
    }

    const double load = lambda_p / p_bar_p_pd;
    const double reach = p_md + (1.0 - p_md) * (1.0 - b_s);  // d
    const double p_fa_bar = 1.0 - p_fa;                       // K

    if (p_fa_bar <= 0.0) {
        // a_s earns nothing; with b_s > 0 it only raises collisions.
        return 0.0;
    }
    if (p_md <= 0.0) {
        return 1.0;
    }

    FractionalProgram prog;
    prog.a = load * p_fa_bar;
    prog.f = load * b_s * p_fa;
    prog.c = p_md;
    prog.d = reach;
    prog.K = p_fa_bar;
    prog.w = (lambda_p + margin) / p_bar_p_pd;
    return solve_fractional(prog).x_star;
}

double optimal_as_s0(double lambda_p, double p_bar_p_pd, double margin)
{
    require_primary_link(p_bar_p_pd);
    require_load(lambda_p, margin);
    const double loaded = lambda_p + margin;
    if (loaded > p_bar_p_pd) {
        throw InfeasibleError("optimal_as_s0: lambda_p + margin exceeds P_p");
    }
    const double unconstrained = 1.0 - std::sqrt(lambda_p / p_bar_p_pd);
    return std::clamp(std::min(unconstrained, 1.0 - loaded / p_bar_p_pd), 0.0, 1.0);
}

OptimizationResult optimize_sc(const OptimizationRequest& req, const Scenario& scenario)
{
    req.validate();
    require_primary_link(scenario.p_bar_p_pd);
    OptimizationResult out = empty_result(req);
    const double loaded = req.lambda_p + req.margin;
    for (const auto& cand : scenario.candidates) {
        TauResult row{cand.sensing.tau, 1.0, 0.0, 0.0, false};
        const auto cfg = SchemeConfig::conventional(cand.sensing);
        const double mu_p = primary_service_rate(cfg, scenario.p_bar_p_pd);
        if (loaded <= mu_p) {
            row.feasible = true;
            row.lambda_s = boundary_value(cfg, {scenario.p_bar_p_pd, cand.p_bar_s_sd}, req.lambda_p);
            offer(out, cfg, row.lambda_s, mu_p, cand.p_bar_s_sd);
        }
        out.per_tau.push_back(row);
    }
    return out;
}

OptimizationResult optimize_s1(const OptimizationRequest& req, const Scenario& scenario)
{
    req.validate();
    require_primary_link(scenario.p_bar_p_pd);
    OptimizationResult out = empty_result(req);
    const bool feasible = req.lambda_p + req.margin <= scenario.p_bar_p_pd;
    for (const auto& cand : scenario.candidates) {
        TauResult row{cand.sensing.tau, 0.0, 0.0, 0.0, false};
        if (feasible) {
            row.a_s = optimal_as_s1(req.lambda_p, cand.sensing.p_md, scenario.p_bar_p_pd, req.margin);
            const auto cfg = SchemeConfig::s1(row.a_s, cand.sensing);
            row.feasible = true;
            row.lambda_s = boundary_value(cfg, {scenario.p_bar_p_pd, cand.p_bar_s_sd}, req.lambda_p);
            offer(out, cfg, row.lambda_s, primary_service_rate(cfg, scenario.p_bar_p_pd), cand.p_bar_s_sd);
        }
        out.per_tau.push_back(row);
    }
    return out;
}

OptimizationResult optimize_s2(const OptimizationRequest& req, const Scenario& scenario)
{
    req.validate();
    require_primary_link(scenario.p_bar_p_pd);
    OptimizationResult out = empty_result(req);
    const double loaded = req.lambda_p + req.margin;
    for (const auto& cand : scenario.candidates) {
        TauResult row{cand.sensing.tau, 0.0, 0.0, 0.0, false};
        const LinkQuality link{scenario.p_bar_p_pd, cand.p_bar_s_sd};
        for (double b : req.b_s_grid) {
            if (!s2_feasible(loaded, cand.sensing.p_md, b, scenario.p_bar_p_pd)) {
                continue;
            }
            const double a = optimal_as_s2_given(b, req.lambda_p, cand.sensing.p_md, cand.sensing.p_fa,
                                                 scenario.p_bar_p_pd, req.margin);
            const auto cfg = SchemeConfig::s2(a, b, cand.sensing);
            const double lambda_s = boundary_value(cfg, link, req.lambda_p);
            if (!row.feasible || lambda_s > row.lambda_s) {
                row = {cand.sensing.tau, a, b, lambda_s, true};
            }
            offer(out, cfg, lambda_s, primary_service_rate(cfg, scenario.p_bar_p_pd), cand.p_bar_s_sd);
        }
        out.per_tau.push_back(row);
    }
    return out;
}

OptimizationResult optimize_s0(const OptimizationRequest& req, const Scenario& scenario)
{
    req.validate();
    require_primary_link(scenario.p_bar_p_pd);
    OptimizationResult out = empty_result(req);
    TauResult row{0.0, 0.0, 0.0, 0.0, false};
    if (req.lambda_p + req.margin <= scenario.p_bar_p_pd) {
        row.a_s = optimal_as_s0(req.lambda_p, scenario.p_bar_p_pd, req.margin);
        const auto cfg = SchemeConfig::s0(row.a_s);
        row.feasible = true;
        row.lambda_s =
            boundary_value(cfg, {scenario.p_bar_p_pd, scenario.p_bar_s_sd_unsensed}, req.lambda_p);
        offer(out, cfg, row.lambda_s, primary_service_rate(cfg, scenario.p_bar_p_pd),
              scenario.p_bar_s_sd_unsensed);
    }
    out.per_tau.push_back(row);
    return out;
}

OptimizationResult optimize(const OptimizationRequest& req, const Scenario& scenario)
{
    switch (req.variant) {
    case Variant::Sc: return optimize_sc(req, scenario);
    case Variant::S1: return optimize_s1(req, scenario);
    case Variant::S2: return optimize_s2(req, scenario);
    case Variant::S0: return optimize_s0(req, scenario);
    }
    throw DomainError("optimize: unknown variant");
}

OptimizationResult optimize_with_margin(const OptimizationRequest& req, const Scenario& scenario)
{
    if (req.lambda_p + req.margin > 1.0) {
        throw DomainError("optimize_with_margin: lambda_p + margin must not exceed 1");
    }
    return optimize(req, scenario);
}

double primary_delay(double lambda_p, double mu_p)
{
    if (!(lambda_p >= 0.0 && lambda_p <= 1.0) || !(mu_p >= 0.0 && mu_p <= 1.0)) {
        throw DomainError("primary_delay: rates must lie in [0, 1]");
    }
    if (lambda_p >= mu_p) {
        return std::numeric_limits<double>::infinity();
    }
    return (1.0 - lambda_p) / (mu_p - lambda_p);
}

namespace {

void require_increasing(std::span<const double> grid)
{
    if (grid.empty()) {
        throw DomainError("lambda_p grid must not be empty");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0 && grid[i] <= 1.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
            throw DomainError("lambda_p grid must be strictly increasing within [0, 1]");
        }
    }
}

RegionPoint point_from(double lambda_p, Variant scheme, const OptimizationResult& r)
{
    RegionPoint p;
    p.lambda_p = lambda_p;
    p.scheme = scheme;
    if (r.feasible) {
        p.lambda_s = r.lambda_s_max;
        p.tau = r.best.sensing.tau;
        p.a_s = r.best.a_s;
        p.b_s = r.best.b_s;
    }
    return p;
}

}  // namespace

RegionCurve trace_region(Variant scheme, std::span<const double> lambda_p_grid,
                         const OptimizationRequest& req, const Scenario& scenario)
{
    require_increasing(lambda_p_grid);
    RegionCurve curve{std::string(to_string(scheme)), {}};
    curve.points.reserve(lambda_p_grid.size());
    OptimizationRequest cell = req;
    cell.variant = scheme;
    for (double lp : lambda_p_grid) {
        cell.lambda_p = lp;
        const bool over = lp + cell.margin > 1.0;
        const OptimizationResult r = over ? OptimizationResult{} : optimize(cell, scenario);
        curve.points.push_back(point_from(lp, scheme, r));
    }
    return curve;
}

UnionTrace trace_union(std::span<const double> lambda_p_grid, const OptimizationRequest& req,
                       const Scenario& scenario)
{
    require_increasing(lambda_p_grid);
    UnionTrace out;
    out.curve.scheme = "UNION";
    OptimizationRequest cell = req;
    for (double lp : lambda_p_grid) {
        cell.lambda_p = lp;
        OptimizationResult s2;
        OptimizationResult s0;
        if (lp + cell.margin <= 1.0) {
            cell.variant = Variant::S2;
            s2 = optimize(cell, scenario);
            cell.variant = Variant::S0;
            s0 = optimize(cell, scenario);
        }
        // S2 keeps ties; S0 must be strictly better to be selected.
        const bool pick_s0 = s0.feasible && (!s2.feasible || s0.lambda_s_max > s2.lambda_s_max);
        const OptimizationResult& chosen = pick_s0 ? s0 : s2;
        const Variant v = pick_s0 ? Variant::S0 : Variant::S2;
        out.curve.points.push_back(point_from(lp, v, chosen));
        out.policy.push_back({lp, chosen.best, chosen.feasible ? chosen.lambda_s_max : 0.0});
    }
    return out;
}

}  // namespace crsa
