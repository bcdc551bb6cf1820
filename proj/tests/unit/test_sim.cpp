#include <doctest.h>

#include <cmath>
#include <sstream>

#include "crsa/errors.hpp"
#include "crsa/optimizer.hpp"
#include "crsa/sim.hpp"

using namespace crsa;

namespace {

const SensingPoint kRefSensing{1e-3, 0.2, 0.3};
const LinkQuality kRefLink{0.9, 0.8};

SimConfig base(std::uint64_t slots = 100'000)
{
    SimConfig c;
    c.slots = slots;
    c.seed = 42;
    c.link = kRefLink;
    return c;
}

}  // namespace

TEST_CASE("mode and feedback names")
{
    CHECK(sim_mode_from_string("dominant") == SimMode::Dominant);
    CHECK(sim_mode_from_string(to_string(SimMode::Original)) == SimMode::Original);
    CHECK_THROWS_AS(sim_mode_from_string("other"), DomainError);
    CHECK(to_string(Feedback::Ack) == "ACK");
}

TEST_CASE("config validation")
{
    SimConfig c = base();
    c.slots = 0;
    CHECK_THROWS_AS(run(c), DomainError);
    c = base();
    c.lambda_p = 1.5;
    CHECK_THROWS_AS(run(c), DomainError);
    c = base();
    c.feedback_error = 1.0;
    CHECK_THROWS_AS(run(c), DomainError);
    c = base();
    c.scheme = SchemeConfig::s1(2.0, kRefSensing);
    CHECK_THROWS_AS(run(c), DomainError);
}

TEST_CASE("idle primary: secondary service equals its idle-slot success")
{
    SimConfig c = base(1'000'000);
    c.lambda_p = 0.0;
    c.lambda_s = 0.1;
    c.mode = SimMode::Dominant;
    c.scheme = SchemeConfig::s1(1.0, kRefSensing);
    const SimResult r = run(c);
    CHECK(std::abs(r.empirical_mu_s.value - 0.64) <= 3 * r.empirical_mu_s.std_error);
    CHECK(r.empirical_mu_s.std_error > 0.0);
}

TEST_CASE("dominant mode, reference link, optimal S1 access")
{
    SimConfig c = base(1'000'000);
    c.lambda_p = 0.3;
    c.lambda_s = 0.05;
    c.mode = SimMode::Dominant;
    const double a = optimal_as_s1(0.3, 0.3, 0.9);
    c.scheme = SchemeConfig::s1(a, kRefSensing);
    const SimResult r = run(c);
    CHECK(std::abs(r.empirical_mu_p.value - 0.9 * (1 - a * 0.3)) <= 0.005);
}

TEST_CASE("silent secondary never transmits")
{
    SimConfig c = base();
    c.lambda_p = 0.4;
    c.lambda_s = 0.3;
    c.mode = SimMode::Dominant;
    c.scheme = SchemeConfig::silent();
    const SimResult r = run(c);
    CHECK(std::abs(r.empirical_mu_p.value - 0.9) <= 4 * r.empirical_mu_p.std_error);
    CHECK(r.secondary_departures == 0);
    CHECK(r.empirical_mu_s.value == 0.0);
}

TEST_CASE("determinism")
{
    SimConfig c = base(20'000);
    c.lambda_p = 0.3;
    c.lambda_s = 0.2;
    c.scheme = SchemeConfig::s2(0.7, 0.2, kRefSensing);
    c.record_traces = true;
    c.feedback_error = 0.1;
    const SimResult a = run(c);
    const SimResult b = run(c);
    CHECK(*a.queue_traces == *b.queue_traces);
    CHECK(a.empirical_mu_p.value == b.empirical_mu_p.value);
    CHECK(a.empirical_mu_s.value == b.empirical_mu_s.value);
    CHECK(a.mean_primary_delay == b.mean_primary_delay);
    c.seed = 43;
    const SimResult d = run(c);
    CHECK_FALSE(*a.queue_traces == *d.queue_traces);
}

TEST_CASE("queue recursion replays and the trace CSV roundtrips")
{
    SimConfig c = base(5'000);
    c.lambda_p = 0.35;
    c.lambda_s = 0.3;
    c.scheme = SchemeConfig::s2(0.6, 0.3, kRefSensing);
    c.record_traces = true;
    c.initial_qp = 3;
    for (SimMode m : {SimMode::Original, SimMode::Dominant}) {
        c.mode = m;
        const SimResult r = run(c);
        REQUIRE(r.queue_traces);
        CHECK(r.queue_traces->front().qp == 3);
        CHECK(replay_matches(*r.queue_traces));
        std::stringstream ss;
        write_trace_csv(ss, *r.queue_traces);
        const auto back = read_trace_csv(ss);
        CHECK(back == *r.queue_traces);

        auto tampered = *r.queue_traces;
        tampered[100].qp += 1;
        CHECK_FALSE(replay_matches(tampered));
    }
}

TEST_CASE("trace CSV rejects malformed input")
{
    std::istringstream no_header("1,2,3,4,ACK\n");
    CHECK_THROWS_AS(read_trace_csv(no_header), DomainError);
    std::istringstream bad_fb("slot,qp,qs,events,feedback\n0,0,0,0,MAYBE\n");
    CHECK_THROWS_AS(read_trace_csv(bad_fb), DomainError);
    std::istringstream short_row("slot,qp,qs,events,feedback\n0,0,0\n");
    CHECK_THROWS_AS(read_trace_csv(short_row), DomainError);
}

TEST_CASE("slot event invariants")
{
    SimConfig c = base(50'000);
    c.lambda_p = 0.3;
    c.lambda_s = 0.3;
    c.scheme = SchemeConfig::s2(0.8, 0.4, kRefSensing);
    c.mode = SimMode::Dominant;
    Simulator sim(c);
    for (int i = 0; i < 50'000; ++i) {
        const auto o = sim.step();
        CHECK_FALSE((o.primary_success && o.secondary_success));
        if (o.collision) {
            CHECK_FALSE(o.primary_success);
            CHECK_FALSE(o.secondary_success);
        }
        if (!o.primary_tx) CHECK(o.feedback == Feedback::None);
        if (o.dummy) CHECK(o.secondary_tx);
    }
}

TEST_CASE("feedback is overheard at rate 1 - P_e")
{
    SimConfig c = base(200'000);
    c.lambda_p = 0.4;
    c.feedback_error = 0.3;
    const SimResult r = run(c);
    const double tx = static_cast<double>(r.primary_departures) / r.empirical_mu_p.value;
    const double heard = static_cast<double>(r.feedback_counts.feedback_heard) / tx;
    CHECK(heard == doctest::Approx(0.7).epsilon(0.02));
}

TEST_CASE("primary delay of a silent-secondary queue")
{
    SimConfig c = base(1'000'000);
    c.lambda_p = 0.3;
    c.scheme = SchemeConfig::silent();
    c.link = {0.63, 0.8};
    const SimResult r = run(c);
    CHECK(r.mean_primary_delay == doctest::Approx(primary_delay(0.3, 0.63)).epsilon(0.05));
}

TEST_CASE("stability surrogate")
{
    SimConfig c = base(300'000);
    c.scheme = SchemeConfig::silent();
    c.link = {0.5, 0.8};
    SUBCASE("well inside")
    {
        c.lambda_p = 0.45;
        const auto rep = measure_stability(c, 200'000);
        CHECK(rep.stable);
        CHECK(rep.primary.empirically_stable);
        CHECK(rep.drift <= kDriftThreshold);
    }
    SUBCASE("outside: drift tracks the rate gap")
    {
        c.lambda_p = 0.55;
        const auto rep = measure_stability(c, 200'000);
        CHECK_FALSE(rep.stable);
        CHECK(rep.drift == doctest::Approx(0.05).epsilon(0.1));
    }
    SUBCASE("on the boundary")
    {
        c.lambda_p = 0.5;
        const auto rep = measure_stability(c, 200'000);
        CHECK_FALSE(rep.analytic.primary);
        CHECK_FALSE(rep.stable);
    }
    SUBCASE("window limits")
    {
        c.lambda_p = 0.3;
        CHECK_THROWS_AS(measure_stability(c, 9'999), DomainError);
        CHECK_THROWS_AS(measure_stability(c, 300'001), DomainError);
    }
}

TEST_CASE("drift meter fits a line exactly")
{
    DriftMeter m;
    for (std::uint64_t t = 0; t < 1000; ++t) m.add(3 * t + 7, 5);
    CHECK(m.primary_slope() == doctest::Approx(3.0));
    CHECK(m.secondary_slope() == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("dominant system bounds the original one")
{
    SimConfig c = base(100'000);
    c.scheme = SchemeConfig::s2(0.8, 0.2, kRefSensing);
    SUBCASE("generic load")
    {
        c.lambda_p = 0.3;
        c.lambda_s = 0.2;
        const auto rep = compare_dominant(c);
        CHECK(rep.dominant_ge_original);
        CHECK(rep.saturation_indistinguishable);
        CHECK(rep.slots_compared == 100'000);
    }
    SUBCASE("no secondary traffic")
    {
        c.lambda_p = 0.3;
        c.lambda_s = 0.0;
        const auto rep = compare_dominant(c);
        CHECK(rep.dominant_ge_original);
    }
}

TEST_CASE("policy switch between slots")
{
    SimConfig c = base(1000);
    c.lambda_p = 0.2;
    Simulator sim(c);
    for (int i = 0; i < 500; ++i) sim.step();
    sim.set_policy(SchemeConfig::s1(0.5, kRefSensing), 0.7);
    CHECK(sim.scheme().variant == Variant::S1);
    CHECK_THROWS_AS(sim.set_policy(SchemeConfig::s1(0.5, kRefSensing), 1.2), DomainError);
}
