#include <doctest.h>

#include <cmath>

#include "crsa/errors.hpp"
#include "crsa/estimator.hpp"

using namespace crsa;

namespace {

FeedbackLog learn(std::uint64_t slots, double lambda_p, double p_bar, double p_e, std::uint64_t seed)
{
    SimConfig c;
    c.slots = slots;
    c.seed = seed;
    c.lambda_p = lambda_p;
    c.link = {p_bar, 0.8};
    c.feedback_error = p_e;
    return FeedbackLog::from_counts(run(c).feedback_counts, p_e);
}

LearningConfig ref_learning()
{
    LearningConfig lc;
    lc.lp_slots = 10'000;
    lc.rp_slots = 200'000;
    lc.seed = 5;
    lc.lambda_p = 0.3;
    lc.lambda_s = 1.0;
    lc.scenario = Scenario::fixed(0.9, 0.8, 0.2, 0.3);
    lc.request.variant = Variant::S2;
    return lc;
}

}  // namespace

TEST_CASE("mode names")
{
    CHECK(estimator_mode_from_string("literal") == EstimatorMode::Literal);
    CHECK(estimator_mode_from_string(to_string(EstimatorMode::Unbiased)) == EstimatorMode::Unbiased);
    CHECK_THROWS_AS(estimator_mode_from_string("biased"), DomainError);
}

TEST_CASE("degenerate counts")
{
    const auto perfect = estimate({1000, 400, 400, 0.0}, EstimatorMode::Unbiased);
    REQUIRE(perfect.p_bar_p_pd_est);
    CHECK(*perfect.p_bar_p_pd_est == 1.0);

    const auto none = estimate({1000, 400, 0, 0.0}, EstimatorMode::Unbiased);
    CHECK(none.lambda_p_est == 0.0);
    CHECK(*none.p_bar_p_pd_est == 0.0);

    const auto silent = estimate({1000, 0, 0, 0.2}, EstimatorMode::Unbiased);
    CHECK_FALSE(silent.link_quality_available());
    CHECK_FALSE(silent.mu_p_est.has_value());
}

TEST_CASE("log validation")
{
    CHECK_THROWS_AS(estimate({0, 0, 0, 0.0}, EstimatorMode::Literal), DomainError);
    CHECK_THROWS_AS(estimate({10, 5, 6, 0.0}, EstimatorMode::Literal), DomainError);
    CHECK_THROWS_AS(estimate({10, 11, 1, 0.0}, EstimatorMode::Literal), DomainError);
    CHECK_THROWS_AS(estimate({10, 5, 1, 1.0}, EstimatorMode::Literal), DomainError);
}

TEST_CASE("the two modes differ only in how erasures are corrected")
{
    const FeedbackLog log{10'000, 2'000, 1'500, 0.2};
    const auto p = estimate(log, EstimatorMode::Literal);
    const auto u = estimate(log, EstimatorMode::Unbiased);
    CHECK(p.lambda_p_est == doctest::Approx(0.15 * 0.8));
    CHECK(u.lambda_p_est == doctest::Approx(0.15 / 0.8));
    CHECK(*p.p_bar_p_pd_est == *u.p_bar_p_pd_est);
    CHECK(u.recommended_mu_pe == doctest::Approx(kMarginSigmas * u.lambda_p_std_error));
}

TEST_CASE("arrival-rate estimate from a simulated learning phase")
{
    const auto log = learn(10'000, 0.3, 0.9, 0.0, 17);
    const auto e = estimate(log, EstimatorMode::Unbiased);
    CHECK(std::abs(e.lambda_p_est - 0.3) <= 0.015);
}

TEST_CASE("consistency as the learning phase grows")
{
    for (double p_e : {0.0, 0.1, 0.3}) {
        double prev_err = INFINITY;
        for (std::uint64_t n : {1'000ull, 10'000ull, 100'000ull}) {
            // Average the error over a few seeds so the trend is not luck.
            double err = 0.0;
            for (std::uint64_t seed = 1; seed <= 8; ++seed) {
                const auto e = estimate(learn(n, 0.3, 0.9, p_e, seed), EstimatorMode::Unbiased);
                CHECK(std::abs(e.lambda_p_est - 0.3) <= 4 * e.lambda_p_std_error);
                err += std::abs(e.lambda_p_est - 0.3);
            }
            CHECK(err < prev_err);
            prev_err = err;
        }
    }
}

TEST_CASE("recommend_margin")
{
    CHECK(recommend_margin(0.0) == 0.0);
    CHECK(recommend_margin(0.05) == 0.05);
    CHECK(primary_delay(0.0, 0.0 + 0.05) == doctest::Approx((1 - 0.0) / 0.05));
    CHECK_THROWS_AS(recommend_margin(-0.01), DomainError);
    CHECK_THROWS_AS(recommend_margin(NAN), DomainError);
}

TEST_CASE("learning then regular phase")
{
    SUBCASE("phase lengths")
    {
        LearningConfig lc = ref_learning();
        lc.rp_slots = 5 * lc.lp_slots;
        CHECK_THROWS_AS(learning_then_regular(lc), DomainError);
    }
    SUBCASE("long learning phase tracks the oracle policy")
    {
        LearningConfig lc = ref_learning();
        lc.lp_slots = 100'000;
        lc.rp_slots = 1'000'000;
        lc.use_margin = false;
        const auto learned = learning_then_regular(lc);
        lc.oracle_parameters = true;
        const auto oracle = learning_then_regular(lc);
        CHECK(learned.regular.secondary_throughput ==
              doctest::Approx(oracle.regular.secondary_throughput).epsilon(0.02));
    }
    SUBCASE("short noisy learning phase with margin keeps the primary stable")
    {
        LearningConfig lc = ref_learning();
        lc.lp_slots = 100;
        lc.rp_slots = 500'000;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            lc.seed = seed;
            const auto rep = learning_then_regular(lc);
            CHECK(rep.margin_used > 0.0);
            CHECK(rep.regular.primary_stable);
        }
    }
    SUBCASE("over-estimated load without margin is conservative")
    {
        LearningConfig lc = ref_learning();
        lc.use_margin = false;
        lc.oracle_parameters = true;
        const auto exact = learning_then_regular(lc);
        OptimizationRequest req = lc.request;
        req.lambda_p = 0.35;
        const auto cautious = optimize(req, lc.scenario);
        CHECK(cautious.mu_p >= exact.policy.mu_p - 1e-12);
        CHECK(exact.regular.primary_stable);
    }
    SUBCASE("infeasible plan falls back to silence")
    {
        LearningConfig lc = ref_learning();
        lc.lambda_p = 0.3;
        lc.error_bound = 0.69;
        const auto rep = learning_then_regular(lc);
        CHECK(rep.fallback_no_access);
        CHECK(rep.policy.best.a_s == 0.0);
        CHECK(rep.regular.secondary_throughput == 0.0);
    }
}
