#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "crsa/optimizer.hpp"
#include "crsa/sim.hpp"

namespace crsa {

/// Literal: heard ACKs multiplied by (1 - P_e), taking the textbook correction at face value.
/// Unbiased: heard ACKs divided by (1 - P_e), which undoes the erasures.
enum class EstimatorMode { Literal, Unbiased };

std::string_view to_string(EstimatorMode mode) noexcept;
EstimatorMode estimator_mode_from_string(std::string_view name);

/// Counts overheard by the secondary during the learning phase.
struct FeedbackLog {
    std::uint64_t slots = 0;           ///< N
    std::uint64_t feedback_heard = 0;  ///< M
    std::uint64_t acks_heard = 0;      ///< A
    double p_e_assumed = 0.0;

    /// Throws DomainError unless A <= M <= N and P_e in [0, 1).
    void validate() const;

    static FeedbackLog from_counts(const FeedbackCounts& counts, double p_e);
    static FeedbackLog from_trace(std::span<const TraceRow> rows, double p_e);
};

/// Number of standard errors of lambda_p_est folded into the recommended margin.
inline constexpr double kMarginSigmas = 3.0;

struct EstimationReport {
    double lambda_p_est = 0.0;
    double lambda_p_std_error = 0.0;  ///< binomial standard error of lambda_p_est
    /// Empty when no feedback was heard (M = 0).
    std::optional<double> p_bar_p_pd_est;
    std::optional<double> mu_p_est;
    double p_nonempty_est = 0.0;
    /// recommend_margin(kMarginSigmas * lambda_p_std_error)
    double recommended_mu_pe = 0.0;
    EstimatorMode mode = EstimatorMode::Unbiased;

    [[nodiscard]] bool link_quality_available() const noexcept { return p_bar_p_pd_est.has_value(); }
};

EstimationReport estimate(const FeedbackLog& log, EstimatorMode mode);

/// Smallest protection margin covering a positive estimation error of at most
/// error_bound: mu_pe = e_lambda_p. Throws DomainError for negative input.
double recommend_margin(double error_bound);

struct LearningConfig {
    std::uint64_t lp_slots = 10'000;
    std::uint64_t rp_slots = 1'000'000;  ///< must be >= 10 * lp_slots
    std::uint64_t seed = 1;
    double lambda_p = 0.3;
    double lambda_s = 1.0;
    double feedback_error = 0.0;
    /// True channel. The secondary knows its own link and detector; the
    /// primary success probability is what it has to learn.
    Scenario scenario;
    /// Variant and b_s grid for the regular-phase policy; lambda_p and
    /// margin are filled from the estimate.
    OptimizationRequest request;
    EstimatorMode mode = EstimatorMode::Unbiased;
    /// Margin policy: none, the estimator's recommendation, or a fixed bound.
    bool use_margin = true;
    std::optional<double> error_bound;
    /// Plan with the true lambda_p and P_p instead of the estimates.
    bool oracle_parameters = false;
};

struct RegularPhaseReport {
    double secondary_throughput = 0.0;  ///< real secondary departures per slot
    double primary_throughput = 0.0;
    double primary_drift = 0.0;
    std::uint64_t final_qp = 0;
    bool primary_stable = false;  ///< drift and terminal-queue surrogates
};

struct LearningReport {
    FeedbackLog log;
    EstimationReport estimation;
    double margin_used = 0.0;
    OptimizationResult policy;
    bool fallback_no_access = false;
    RegularPhaseReport regular;
};

/// Silent learning phase, estimation, policy computation from the estimates
/// (plus margin), then the regular phase with that policy, continuing the
/// same queues. An infeasible planning problem falls back to no access.
LearningReport learning_then_regular(const LearningConfig& cfg);

}  // namespace crsa
