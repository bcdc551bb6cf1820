#include "crsa/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crsa/errors.hpp"

namespace crsa {

std::string_view to_string(EstimatorMode mode) noexcept
{
    return mode == EstimatorMode::Literal ? "literal" : "unbiased";
}

EstimatorMode estimator_mode_from_string(std::string_view name)
{
    if (name == "literal") return EstimatorMode::Literal;
    if (name == "unbiased") return EstimatorMode::Unbiased;
    throw DomainError("unknown estimator mode '" + std::string(name) + "' (expected literal, unbiased)");
}

void FeedbackLog::validate() const
{
    if (slots == 0) {
        throw DomainError("FeedbackLog: N must be > 0");
    }
    if (!(acks_heard <= feedback_heard && feedback_heard <= slots)) {
        throw DomainError("FeedbackLog: counts must satisfy A <= M <= N");
    }
    if (!(p_e_assumed >= 0.0 && p_e_assumed < 1.0)) {
        throw DomainError("FeedbackLog: P_e must lie in [0, 1)");
    }
}

FeedbackLog FeedbackLog::from_counts(const FeedbackCounts& counts, double p_e)
{
    return {counts.slots, counts.feedback_heard, counts.acks_heard, p_e};
}

FeedbackLog FeedbackLog::from_trace(std::span<const TraceRow> rows, double p_e)
{
    FeedbackLog log{rows.size(), 0, 0, p_e};
    for (const auto& r : rows) {
        if (r.feedback != Feedback::None && (r.events & kFeedbackHeard)) {
            ++log.feedback_heard;
            if (r.feedback == Feedback::Ack) {
                ++log.acks_heard;
            }
        }
    }
    return log;
}

double recommend_margin(double error_bound)
{
    if (!(error_bound >= 0.0) || !std::isfinite(error_bound)) {
        throw DomainError("recommend_margin: error bound must be finite and >= 0");
    }
    return error_bound;
}

EstimationReport estimate(const FeedbackLog& log, EstimatorMode mode)
{
    log.validate();
    const auto n = static_cast<double>(log.slots);
    const double keep = 1.0 - log.p_e_assumed;
    // Heard counts are thinned by (1 - P_e); literal mode multiplies by the
    // same factor, unbiased mode inverts the thinning.
    const double scale = mode == EstimatorMode::Literal ? keep : 1.0 / keep;

    EstimationReport rep;
    rep.mode = mode;
    const double ack_rate = static_cast<double>(log.acks_heard) / n;
    rep.lambda_p_est = std::min(1.0, ack_rate * scale);
    rep.lambda_p_std_error = std::sqrt(ack_rate * (1.0 - ack_rate) / n) * scale;
    rep.recommended_mu_pe = recommend_margin(kMarginSigmas * rep.lambda_p_std_error);

    if (log.feedback_heard > 0) {
        const double p_bar = static_cast<double>(log.acks_heard) / static_cast<double>(log.feedback_heard);
        rep.p_bar_p_pd_est = p_bar;
        rep.mu_p_est = p_bar;
        if (p_bar > 0.0) {
            rep.p_nonempty_est = std::min(1.0, rep.lambda_p_est / p_bar);
        } else {
            rep.p_nonempty_est = std::min(1.0, static_cast<double>(log.feedback_heard) / n * scale);
        }
    }
    return rep;
}

LearningReport learning_then_regular(const LearningConfig& cfg)
{
    if (cfg.lp_slots == 0) {
        throw DomainError("learning_then_regular: learning phase needs at least one slot");
    }
    if (cfg.rp_slots < 10 * cfg.lp_slots) {
        throw DomainError("learning_then_regular: regular phase must be >= 10x the learning phase");
    }

    SimConfig sim_cfg;
    sim_cfg.slots = cfg.lp_slots + cfg.rp_slots;
    sim_cfg.seed = cfg.seed;
    sim_cfg.lambda_p = cfg.lambda_p;
    sim_cfg.lambda_s = cfg.lambda_s;
    sim_cfg.scheme = SchemeConfig::silent();
    sim_cfg.link = {cfg.scenario.p_bar_p_pd, cfg.scenario.p_bar_s_sd_unsensed};
    sim_cfg.mode = SimMode::Original;
    sim_cfg.feedback_error = cfg.feedback_error;
    Simulator sim(sim_cfg);

    FeedbackCounts counts;
    for (std::uint64_t t = 0; t < cfg.lp_slots; ++t) {
        const SlotOutcome o = sim.step();
        if (o.primary_tx && o.feedback_heard) {
            ++counts.feedback_heard;
            if (o.feedback == Feedback::Ack) {
                ++counts.acks_heard;
            }
        }
    }
    counts.slots = cfg.lp_slots;

    LearningReport rep;
    rep.log = FeedbackLog::from_counts(counts, cfg.feedback_error);
    rep.estimation = estimate(rep.log, cfg.mode);

    double plan_lambda = rep.estimation.lambda_p_est;
    std::optional<double> plan_p_bar = rep.estimation.p_bar_p_pd_est;
    if (cfg.oracle_parameters) {
        plan_lambda = cfg.lambda_p;
        plan_p_bar = cfg.scenario.p_bar_p_pd;
    }
    if (cfg.use_margin && !cfg.oracle_parameters) {
        rep.margin_used = cfg.error_bound ? recommend_margin(*cfg.error_bound)
                                          : rep.estimation.recommended_mu_pe;
    }

    rep.fallback_no_access = true;
    if (plan_p_bar && *plan_p_bar > 0.0 && plan_lambda + rep.margin_used <= 1.0) {
        OptimizationRequest req = cfg.request;
        req.lambda_p = plan_lambda;
        req.margin = rep.margin_used;
        rep.policy = optimize_with_margin(req, cfg.scenario.with_primary(*plan_p_bar));
        rep.fallback_no_access = !rep.policy.feasible;
    }

    if (rep.fallback_no_access) {
        rep.policy.best = SchemeConfig::silent();
        sim.set_policy(rep.policy.best, cfg.scenario.p_bar_s_sd_unsensed);
    } else {
        sim.set_policy(rep.policy.best, rep.policy.p_bar_s_sd);
    }

    DriftMeter meter;
    std::uint64_t secondary_departures = 0;
    std::uint64_t primary_departures = 0;
    for (std::uint64_t t = 0; t < cfg.rp_slots; ++t) {
        const SlotOutcome o = sim.step();
        if (o.secondary_success && !o.dummy) ++secondary_departures;
        if (o.primary_success) ++primary_departures;
        meter.add(sim.qp(), sim.qs());
    }
    const auto rp = static_cast<double>(cfg.rp_slots);
    rep.regular.secondary_throughput = static_cast<double>(secondary_departures) / rp;
    rep.regular.primary_throughput = static_cast<double>(primary_departures) / rp;
    rep.regular.primary_drift = meter.primary_slope();
    rep.regular.final_qp = sim.qp();
    rep.regular.primary_stable = rep.regular.primary_drift <= kDriftThreshold &&
                                 static_cast<double>(sim.qp()) < kTerminalFactor * std::sqrt(rp);
    return rep;
}

}  // namespace crsa
