#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crsa/phy.hpp"
#include "crsa/schemes.hpp"

namespace crsa {

/// How the detector operating point is derived from the sensing time.
struct SensingTarget {
    enum class Kind { FixedPfa, FixedPmd, FixedThreshold };
    Kind kind = Kind::FixedPfa;
    double value = 0.1;  ///< target probability, or the threshold epsilon

    [[nodiscard]] SensingPoint at(const PhyParams& phy, double tau) const;
};

std::string_view to_string(SensingTarget::Kind kind) noexcept;

/// One sensing duration together with everything it determines.
struct TauCandidate {
    SensingPoint sensing;
    double p_bar_s_sd = 0.0;
};

/// Everything the optimizers need about the channel: the primary link, the
/// unsensed secondary link (used by S0) and one candidate per sensing time.
///
/// Built either from PhyParams and a sensing target over a tau grid, or from a
/// fixed operating point where (p_fa, p_md, P_s) do not depend on tau.
struct Scenario {
    double p_bar_p_pd = 1.0;
    double p_bar_s_sd_unsensed = 1.0;
    std::vector<TauCandidate> candidates;

    static Scenario from_phy(const PhyParams& phy, const SensingTarget& target,
                             std::span<const double> tau_grid);
    static Scenario fixed(double p_bar_p_pd, double p_bar_s_sd, double p_fa, double p_md,
                          double nominal_tau = 0.0);

    /// Same scenario with the primary success probability replaced (used when
    /// planning from an estimate).
    [[nodiscard]] Scenario with_primary(double p_bar_p_pd) const;
};

/// 64 log-spaced points over tau/T in [1e-3, 1 - 1e-3] plus the
/// 0-adjacent point tau/T = 1e-4.
std::vector<double> default_tau_grid(double slot_s);
/// 33 uniform points on [0, 1].
std::vector<double> default_b_grid();
std::vector<double> linspace(double start, double stop, std::size_t count);
std::vector<double> logspace(double start, double stop, std::size_t count);

struct OptimizationRequest {
    Variant variant = Variant::S2;
    double lambda_p = 0.0;
    std::vector<double> b_s_grid = default_b_grid();  ///< S2 only
    double margin = 0.0;                              ///< mu_pe

    void validate() const;
};

struct TauResult {
    double tau = 0.0;
    double a_s = 0.0;
    double b_s = 0.0;
    double lambda_s = 0.0;
    bool feasible = false;
};

struct OptimizationResult {
    SchemeConfig best = SchemeConfig::silent();
    double lambda_s_max = 0.0;
    double mu_p = 0.0;  ///< primary service rate under `best`
    double p_bar_s_sd = 0.0;  ///< secondary link success at `best`'s sensing time
    std::vector<TauResult> per_tau;
    bool feasible = false;
    /// (1 - lambda_p)/mu_pe, present when a positive margin was requested.
    std::optional<double> delay_bound;
};

// Closed-form access probabilities. `margin` tightens the primary constraint
// to mu_p >= lambda_p + margin; the objective keeps the true lambda_p.

/// clip((1 - sqrt(lambda_p/P_p))/P_MD, 0, 1), further limited by the margin.
double optimal_as_s1(double lambda_p, double p_md, double p_bar_p_pd, double margin = 0.0);

/// a_s* for S2 at fixed b_s, obtained by mapping the problem onto
/// solve_fractional. Throws InfeasibleError when s2_feasible fails.
double optimal_as_s2_given(double b_s, double lambda_p, double p_md, double p_fa,
                           double p_bar_p_pd, double margin = 0.0);

/// 1 - sqrt(lambda_p/P_p), further limited by the margin.
double optimal_as_s0(double lambda_p, double p_bar_p_pd, double margin = 0.0);

OptimizationResult optimize_sc(const OptimizationRequest& req, const Scenario& scenario);
OptimizationResult optimize_s1(const OptimizationRequest& req, const Scenario& scenario);
OptimizationResult optimize_s2(const OptimizationRequest& req, const Scenario& scenario);
OptimizationResult optimize_s0(const OptimizationRequest& req, const Scenario& scenario);
/// Dispatches on req.variant.
OptimizationResult optimize(const OptimizationRequest& req, const Scenario& scenario);

/// optimize() with a protection margin; also reports the designed delay bound.
/// Throws DomainError if lambda_p + margin > 1.
OptimizationResult optimize_with_margin(const OptimizationRequest& req, const Scenario& scenario);

/// (1 - lambda_p)/(mu_p - lambda_p); +infinity when lambda_p >= mu_p.
double primary_delay(double lambda_p, double mu_p);

struct RegionPoint {
    double lambda_p = 0.0;
    double lambda_s = 0.0;
    Variant scheme = Variant::S2;
    double tau = 0.0;
    double a_s = 0.0;
    double b_s = 0.0;
};

struct RegionCurve {
    std::string scheme;  ///< "Sc", "S1", "S2", "S0" or "UNION"
    std::vector<RegionPoint> points;
};

struct SwitchDecision {
    double lambda_p = 0.0;
    SchemeConfig config;
    double lambda_s = 0.0;
};
using SwitchPolicy = std::vector<SwitchDecision>;

struct UnionTrace {
    RegionCurve curve;
    SwitchPolicy policy;
};

/// Optimized boundary of one scheme over a strictly increasing lambda_p grid.
/// req.lambda_p is ignored. Infeasible points map to boundary 0.
RegionCurve trace_region(Variant scheme, std::span<const double> lambda_p_grid,
                         const OptimizationRequest& req, const Scenario& scenario);

/// Pointwise max of the S0 and optimized S2 boundaries, with the argmax
/// scheme recorded as the switching decision.
UnionTrace trace_union(std::span<const double> lambda_p_grid, const OptimizationRequest& req,
                       const Scenario& scenario);

}  // namespace crsa
