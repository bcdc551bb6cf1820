#include "crsa/sim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "crsa/errors.hpp"

namespace crsa {

namespace {

enum StreamId : std::uint32_t {
    kArrivalsP = 1,
    kArrivalsS = 2,
    kSensing = 3,
    kAccess = 4,
    kChannels = 5,
    kFeedback = 6,
};

std::mt19937_64 make_stream(std::uint64_t seed, StreamId id)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(id)};
    return std::mt19937_64(seq);
}

double success_threshold(double p_bar)
{
    if (p_bar <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return -std::log(p_bar);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

constexpr std::string_view kTraceMagic = "# crsa-trace v1";
constexpr std::string_view kTraceHeader = "slot,qp,qs,events,feedback";

}  // namespace

std::string_view to_string(SimMode mode) noexcept
{
    return mode == SimMode::Dominant ? "dominant" : "original";
}

SimMode sim_mode_from_string(std::string_view name)
{
    if (name == "original") return SimMode::Original;
    if (name == "dominant") return SimMode::Dominant;
    throw DomainError("unknown simulation mode '" + std::string(name) + "' (expected original, dominant)");
}

std::string_view to_string(Feedback fb) noexcept
{
    switch (fb) {
    case Feedback::Ack: return "ACK";
    case Feedback::Nack: return "NACK";
    case Feedback::None: return "none";
    }
    return "none";
}

void SimConfig::validate() const
{
    if (slots < 1) {
        throw DomainError("SimConfig: slots must be >= 1");
    }
    if (!is_probability(lambda_p) || !is_probability(lambda_s)) {
        throw DomainError("SimConfig: arrival rates must lie in [0, 1]");
    }
    if (!(feedback_error >= 0.0 && feedback_error < 1.0)) {
        throw DomainError("SimConfig: feedback_error must lie in [0, 1)");
    }
    if (!is_probability(link.p_bar_p_pd) || !is_probability(link.p_bar_s_sd)) {
        throw DomainError("SimConfig: link success probabilities must lie in [0, 1]");
    }
    if (batches < 1) {
        throw DomainError("SimConfig: batches must be >= 1");
    }
    scheme.validate();
}

std::uint32_t SlotOutcome::events() const noexcept
{
    std::uint32_t bits = 0;
    if (primary_nonempty) bits |= kPrimaryNonempty;
    if (sensed_busy) bits |= kSensedBusy;
    if (primary_tx) bits |= kPrimaryTx;
    if (secondary_tx) bits |= kSecondaryTx;
    if (collision) bits |= kCollision;
    if (primary_success) bits |= kPrimarySuccess;
    if (secondary_success) bits |= kSecondarySuccess;
    if (dummy) bits |= kDummy;
    if (feedback_heard) bits |= kFeedbackHeard;
    if (primary_arrival) bits |= kPrimaryArrival;
    if (secondary_arrival) bits |= kSecondaryArrival;
    return bits;
}

Simulator::Simulator(const SimConfig& cfg)
    : scheme_(cfg.scheme),
      lambda_p_(cfg.lambda_p),
      lambda_s_(cfg.lambda_s),
      p_bar_p_pd_(cfg.link.p_bar_p_pd),
      p_bar_s_sd_(cfg.link.p_bar_s_sd),
      primary_threshold_(success_threshold(cfg.link.p_bar_p_pd)),
      secondary_threshold_(success_threshold(cfg.link.p_bar_s_sd)),
      mode_(cfg.mode),
      feedback_error_(cfg.feedback_error),
      arrivals_p_(make_stream(cfg.seed, kArrivalsP)),
      arrivals_s_(make_stream(cfg.seed, kArrivalsS)),
      sensing_(make_stream(cfg.seed, kSensing)),
      access_(make_stream(cfg.seed, kAccess)),
      channels_(make_stream(cfg.seed, kChannels)),
      feedback_(make_stream(cfg.seed, kFeedback)),
      qp_(cfg.initial_qp),
      qs_(cfg.initial_qs)
{
    cfg.validate();
    // Packets present at start are stamped as having arrived just before slot 0.
    primary_arrival_slots_.assign(qp_, 0);
}

void Simulator::set_policy(const SchemeConfig& scheme, double p_bar_s_sd)
{
    scheme.validate();
    if (!is_probability(p_bar_s_sd)) {
        throw DomainError("set_policy: secondary success probability must lie in [0, 1]");
    }
    scheme_ = scheme;
    p_bar_s_sd_ = p_bar_s_sd;
    secondary_threshold_ = success_threshold(p_bar_s_sd);
}

SlotOutcome Simulator::step()
{
    // Fixed draw schedule; see class comment.
    const double u_sense = uniform(sensing_);
    const double u_access = uniform(access_);
    const double g_primary = gain_(channels_);
    const double g_secondary = gain_(channels_);
    const double u_feedback = uniform(feedback_);
    const double u_arrival_p = uniform(arrivals_p_);
    const double u_arrival_s = uniform(arrivals_s_);

    SlotOutcome o;
    o.primary_nonempty = qp_ > 0;
    o.primary_tx = o.primary_nonempty;

    bool wants = false;
    if (scheme_.variant == Variant::S0) {
        wants = u_access < scheme_.a_s;
    } else {
        const SensingPoint& s = scheme_.sensing;
        o.sensed_busy = o.primary_tx ? (u_sense >= s.p_md) : (u_sense < s.p_fa);
        wants = u_access < (o.sensed_busy ? scheme_.b_s : scheme_.a_s);
    }

    const bool has_packet = qs_ > 0;
    o.secondary_tx = wants && (has_packet || mode_ == SimMode::Dominant);
    o.dummy = o.secondary_tx && !has_packet;
    o.collision = o.primary_tx && o.secondary_tx;
    o.primary_success = o.primary_tx && !o.collision && g_primary >= primary_threshold_;
    o.secondary_success = o.secondary_tx && !o.primary_tx && g_secondary >= secondary_threshold_;

    if (o.primary_tx) {
        o.feedback = o.primary_success ? Feedback::Ack : Feedback::Nack;
        o.feedback_heard = u_feedback >= feedback_error_;
    }

    // Departures before arrivals.
    if (o.primary_success) {
        --qp_;
        delay_sum_ += static_cast<double>(slot_ - primary_arrival_slots_.front());
        ++delay_count_;
        primary_arrival_slots_.pop_front();
    }
    if (o.secondary_success && !o.dummy) {
        --qs_;
    }
    o.primary_arrival = u_arrival_p < lambda_p_;
    o.secondary_arrival = u_arrival_s < lambda_s_;
    if (o.primary_arrival) {
        ++qp_;
        primary_arrival_slots_.push_back(slot_);
    }
    if (o.secondary_arrival) {
        ++qs_;
    }
    ++slot_;
    return o;
}

SimResult run(const SimConfig& cfg)
{
    cfg.validate();
    Simulator sim(cfg);
    SimResult res;
    if (cfg.record_traces) {
        res.queue_traces.emplace();
        res.queue_traces->reserve(cfg.slots);
    }

    const std::uint64_t n_batches = std::min<std::uint64_t>(cfg.batches, cfg.slots);
    const std::uint64_t batch_len = cfg.slots / n_batches;
    std::vector<double> batch_means;
    batch_means.reserve(n_batches);
    std::uint64_t batch_successes = 0;

    std::uint64_t primary_attempts = 0;
    std::uint64_t primary_successes = 0;
    std::uint64_t secondary_successes = 0;
    std::uint64_t empty_slots = 0;

    for (std::uint64_t t = 0; t < cfg.slots; ++t) {
        const std::uint64_t qp = sim.qp();
        const std::uint64_t qs = sim.qs();
        const SlotOutcome o = sim.step();
        if (res.queue_traces) {
            res.queue_traces->push_back({t, qp, qs, o.events(), o.feedback});
        }
        empty_slots += qp == 0 ? 1 : 0;
        if (o.primary_tx) {
            ++primary_attempts;
            if (o.feedback_heard) {
                ++res.feedback_counts.feedback_heard;
                if (o.feedback == Feedback::Ack) {
                    ++res.feedback_counts.acks_heard;
                }
            }
        }
        if (o.primary_success) {
            ++primary_successes;
        }
        if (o.secondary_success) {
            ++secondary_successes;
            ++batch_successes;
            if (!o.dummy) {
                ++res.secondary_departures;
            }
        }
        res.primary_arrivals += o.primary_arrival ? 1 : 0;
        res.secondary_arrivals += o.secondary_arrival ? 1 : 0;
        if ((t + 1) % batch_len == 0 && batch_means.size() < n_batches) {
            batch_means.push_back(static_cast<double>(batch_successes) / static_cast<double>(batch_len));
            batch_successes = 0;
        }
    }

    const auto n = static_cast<double>(cfg.slots);
    res.primary_departures = primary_successes;
    res.feedback_counts.slots = cfg.slots;
    res.final_qp = sim.qp();
    res.final_qs = sim.qs();
    res.empirical_p_empty = static_cast<double>(empty_slots) / n;
    res.mean_primary_delay =
        sim.delay_count() > 0 ? sim.delay_sum() / static_cast<double>(sim.delay_count()) : 0.0;

    if (primary_attempts > 0) {
        const double m = static_cast<double>(primary_successes) / static_cast<double>(primary_attempts);
        res.empirical_mu_p = {m, std::sqrt(m * (1.0 - m) / static_cast<double>(primary_attempts))};
    }

    const double mu_s = static_cast<double>(secondary_successes) / n;
    double se = 0.0;
    if (batch_means.size() >= 2) {
        double mean = 0.0;
        for (double b : batch_means) mean += b;
        mean /= static_cast<double>(batch_means.size());
        double ss = 0.0;
        for (double b : batch_means) ss += (b - mean) * (b - mean);
        const auto k = static_cast<double>(batch_means.size());
        se = std::sqrt(ss / (k - 1.0) / k);
    }
    res.empirical_mu_s = {mu_s, se};
    return res;
}

void DriftMeter::add(std::uint64_t qp, std::uint64_t qs) noexcept
{
    const auto t = static_cast<long double>(n_);
    sum_qp_ += qp;
    sum_tqp_ += t * qp;
    sum_qs_ += qs;
    sum_tqs_ += t * qs;
    ++n_;
}

double DriftMeter::slope(long double sum_y, long double sum_ty) const noexcept
{
    if (n_ < 2) {
        return 0.0;
    }
    const auto n = static_cast<long double>(n_);
    // t = 0..n-1: sum t = n(n-1)/2, sum (t - mean)^2 = n(n^2 - 1)/12
    const long double t_mean = (n - 1) / 2;
    const long double stt = n * (n * n - 1) / 12;
    return static_cast<double>((sum_ty - t_mean * sum_y) / stt);
}

double DriftMeter::primary_slope() const noexcept { return slope(sum_qp_, sum_tqp_); }

double DriftMeter::secondary_slope() const noexcept { return slope(sum_qs_, sum_tqs_); }

StabilityReport measure_stability(const SimConfig& cfg, std::uint64_t window)
{
    cfg.validate();
    if (window < 10'000 || window > cfg.slots) {
        throw DomainError("measure_stability: window must lie in [1e4, slots]");
    }
    Simulator sim(cfg);
    DriftMeter meter;
    const std::uint64_t start = cfg.slots - window;
    for (std::uint64_t t = 0; t < cfg.slots; ++t) {
        sim.step();
        if (t >= start) {
            meter.add(sim.qp(), sim.qs());
        }
    }

    const double bound = kTerminalFactor * std::sqrt(static_cast<double>(cfg.slots));
    const auto judge = [&](double drift, std::uint64_t terminal) {
        return QueueDrift{drift, terminal,
                          drift <= kDriftThreshold && static_cast<double>(terminal) < bound};
    };

    StabilityReport rep;
    rep.primary = judge(meter.primary_slope(), sim.qp());
    rep.secondary = judge(meter.secondary_slope(), sim.qs());

    const double mu_p = primary_service_rate(cfg.scheme, cfg.link.p_bar_p_pd);
    rep.analytic.primary = cfg.lambda_p < mu_p;
    if (rep.analytic.primary) {
        const ServiceRates rates = service_rates(cfg.scheme, cfg.link, cfg.lambda_p);
        rep.analytic.secondary = cfg.lambda_s < rates.mu_s;
    }
    rep.stable = rep.primary.empirically_stable && rep.analytic.primary;
    rep.drift = rep.primary.drift;
    return rep;
}

DominanceReport compare_dominant(const SimConfig& cfg)
{
    cfg.validate();
    DominanceReport rep;

    SimConfig orig_cfg = cfg;
    orig_cfg.mode = SimMode::Original;
    SimConfig dom_cfg = cfg;
    dom_cfg.mode = SimMode::Dominant;
    Simulator orig(orig_cfg);
    Simulator dom(dom_cfg);

    rep.dominant_ge_original = true;
    for (std::uint64_t t = 0; t < cfg.slots; ++t) {
        orig.step();
        dom.step();
        ++rep.slots_compared;
        if (dom.qp() < orig.qp() || dom.qs() < orig.qs()) {
            rep.dominant_ge_original = false;
            rep.first_violation = t;
            break;
        }
    }

    SimConfig sat = cfg;
    sat.lambda_s = 1.0;
    sat.initial_qs = std::max<std::uint64_t>(cfg.initial_qs, 1);
    sat.mode = SimMode::Original;
    Simulator sat_orig(sat);
    sat.mode = SimMode::Dominant;
    Simulator sat_dom(sat);

    rep.saturation_indistinguishable = true;
    for (std::uint64_t t = 0; t < cfg.slots; ++t) {
        const SlotOutcome a = sat_orig.step();
        const SlotOutcome b = sat_dom.step();
        if (!(a == b) || sat_orig.qp() != sat_dom.qp() || sat_orig.qs() != sat_dom.qs()) {
            rep.saturation_indistinguishable = false;
            break;
        }
    }
    return rep;
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows)
{
    out << kTraceMagic << '\n' << kTraceHeader << '\n';
    for (const auto& r : rows) {
        out << r.slot << ',' << r.qp << ',' << r.qs << ',' << r.events << ',' << to_string(r.feedback)
            << '\n';
    }
}

std::vector<TraceRow> read_trace_csv(std::istream& in)
{
    std::vector<TraceRow> rows;
    std::string line;
    bool header_seen = false;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (!header_seen) {
            if (line != kTraceHeader) {
                throw DomainError("trace csv: unexpected header '" + line + "'");
            }
            header_seen = true;
            continue;
        }
        std::istringstream fields(line);
        std::string cell[5];
        for (int i = 0; i < 5; ++i) {
            if (!std::getline(fields, cell[i], ',')) {
                throw DomainError("trace csv: line " + std::to_string(line_no) + " has fewer than 5 fields");
            }
        }
        TraceRow r;
        try {
            r.slot = std::stoull(cell[0]);
            r.qp = std::stoull(cell[1]);
            r.qs = std::stoull(cell[2]);
            r.events = static_cast<std::uint32_t>(std::stoul(cell[3]));
        } catch (const std::exception&) {
            throw DomainError("trace csv: line " + std::to_string(line_no) + " has a non-numeric field");
        }
        if (cell[4] == "ACK") {
            r.feedback = Feedback::Ack;
        } else if (cell[4] == "NACK") {
            r.feedback = Feedback::Nack;
        } else if (cell[4] == "none") {
            r.feedback = Feedback::None;
        } else {
            throw DomainError("trace csv: line " + std::to_string(line_no) + " has unknown feedback");
        }
        rows.push_back(r);
    }
    if (!header_seen) {
        throw DomainError("trace csv: missing header");
    }
    return rows;
}

bool replay_matches(std::span<const TraceRow> rows)
{
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const TraceRow& r = rows[i];
        const std::uint64_t dep_p = (r.events & kPrimarySuccess) ? 1 : 0;
        const std::uint64_t dep_s = ((r.events & kSecondarySuccess) && !(r.events & kDummy)) ? 1 : 0;
        const std::uint64_t arr_p = (r.events & kPrimaryArrival) ? 1 : 0;
        const std::uint64_t arr_s = (r.events & kSecondaryArrival) ? 1 : 0;
        const std::uint64_t qp = (r.qp > dep_p ? r.qp - dep_p : 0) + arr_p;
        const std::uint64_t qs = (r.qs > dep_s ? r.qs - dep_s : 0) + arr_s;
        if (qp != rows[i + 1].qp || qs != rows[i + 1].qs) {
            return false;
        }
    }
    return true;
}

}  // namespace crsa
