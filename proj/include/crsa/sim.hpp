#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "crsa/schemes.hpp"

namespace crsa {

/// Original: the secondary transmits only when it has a packet.
/// Dominant: the secondary sends a dummy packet whenever its queue is empty
/// and the access rule says transmit.
enum class SimMode { Original, Dominant };

std::string_view to_string(SimMode mode) noexcept;
SimMode sim_mode_from_string(std::string_view name);

enum class Feedback : std::uint8_t { None, Ack, Nack };

std::string_view to_string(Feedback fb) noexcept;

struct SimConfig {
    std::uint64_t slots = 1'000'000;
    std::uint64_t seed = 1;
    double lambda_p = 0.0;
    double lambda_s = 0.0;
    SchemeConfig scheme = SchemeConfig::silent();
    /// Link success probabilities; use link_from_phy() to derive them from
    /// PhyParams at the scheme's sensing time.
    LinkQuality link{};
    SimMode mode = SimMode::Original;
    double feedback_error = 0.0;  ///< P_e, probability an ACK/NACK is not decoded
    bool record_traces = false;
    std::uint64_t initial_qp = 0;
    std::uint64_t initial_qs = 0;
    /// Batches used for the batch-means standard error of mu_s.
    std::uint32_t batches = 50;

    void validate() const;
};

/// Bits of TraceRow::events.
enum SlotEvent : std::uint32_t {
    kPrimaryNonempty = 1u << 0,
    kSensedBusy = 1u << 1,
    kPrimaryTx = 1u << 2,
    kSecondaryTx = 1u << 3,
    kCollision = 1u << 4,
    kPrimarySuccess = 1u << 5,
    kSecondarySuccess = 1u << 6,
    kDummy = 1u << 7,
    kFeedbackHeard = 1u << 8,
    kPrimaryArrival = 1u << 9,
    kSecondaryArrival = 1u << 10,
};

struct SlotOutcome {
    bool primary_nonempty = false;
    bool sensed_busy = false;
    bool primary_tx = false;
    bool secondary_tx = false;
    bool dummy = false;  ///< secondary_tx carried a dummy packet
    bool collision = false;
    bool primary_success = false;
    bool secondary_success = false;
    Feedback feedback = Feedback::None;
    bool feedback_heard = false;
    bool primary_arrival = false;
    bool secondary_arrival = false;

    [[nodiscard]] std::uint32_t events() const noexcept;
    bool operator==(const SlotOutcome&) const = default;
};

/// Queue lengths at the start of the slot plus what happened during it.
struct TraceRow {
    std::uint64_t slot = 0;
    std::uint64_t qp = 0;
    std::uint64_t qs = 0;
    std::uint32_t events = 0;
    Feedback feedback = Feedback::None;

    bool operator==(const TraceRow&) const = default;
};

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

struct FeedbackCounts {
    std::uint64_t acks_heard = 0;      ///< A
    std::uint64_t feedback_heard = 0;  ///< M
    std::uint64_t slots = 0;           ///< N
};

struct SimResult {
    /// Primary successes per primary transmission (binomial standard error).
    Estimate empirical_mu_p;
    /// Secondary successful transmissions, real or dummy, per slot
    /// (batch-means standard error). Equals the secondary service rate in
    /// dominant mode and the secondary throughput in original mode.
    Estimate empirical_mu_s;
    double empirical_p_empty = 0.0;
    /// Mean slots from arrival to successful departure over departed packets.
    double mean_primary_delay = 0.0;
    std::uint64_t primary_departures = 0;
    std::uint64_t secondary_departures = 0;  ///< real packets only
    std::uint64_t primary_arrivals = 0;
    std::uint64_t secondary_arrivals = 0;
    std::uint64_t final_qp = 0;
    std::uint64_t final_qs = 0;
    FeedbackCounts feedback_counts;
    std::optional<std::vector<TraceRow>> queue_traces;
};

/// Slot-by-slot simulator of the primary/secondary queue pair.
///
/// Every slot consumes exactly one draw from each of the arrival, sensing and
/// access streams, two from the channel stream and one from the feedback
/// stream, whether or not the draw is used. Two simulators built from the
/// same seed therefore see identical arrivals, coin tosses, channels and
/// noise, which is the coupling the dominant-system comparison relies on.
class Simulator {
public:
    explicit Simulator(const SimConfig& cfg);

    SlotOutcome step();

    [[nodiscard]] std::uint64_t slot() const noexcept { return slot_; }
    [[nodiscard]] std::uint64_t qp() const noexcept { return qp_; }
    [[nodiscard]] std::uint64_t qs() const noexcept { return qs_; }
    [[nodiscard]] const SchemeConfig& scheme() const noexcept { return scheme_; }

    /// Switch the access policy (and the secondary link quality that goes
    /// with its sensing time) between slots.
    void set_policy(const SchemeConfig& scheme, double p_bar_s_sd);

    /// Sum and count of primary delays for packets departed so far.
    [[nodiscard]] double delay_sum() const noexcept { return delay_sum_; }
    [[nodiscard]] std::uint64_t delay_count() const noexcept { return delay_count_; }

private:
    double uniform(std::mt19937_64& gen) { return unit_(gen); }

    SchemeConfig scheme_;
    double lambda_p_;
    double lambda_s_;
    double p_bar_p_pd_;
    double p_bar_s_sd_;
    double primary_threshold_;    // -ln P_p: unit-mean gain must reach this
    double secondary_threshold_;  // -ln P_s
    SimMode mode_;
    double feedback_error_;

    std::mt19937_64 arrivals_p_;
    std::mt19937_64 arrivals_s_;
    std::mt19937_64 sensing_;
    std::mt19937_64 access_;
    std::mt19937_64 channels_;
    std::mt19937_64 feedback_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
    std::exponential_distribution<double> gain_{1.0};

    std::uint64_t slot_ = 0;
    std::uint64_t qp_ = 0;
    std::uint64_t qs_ = 0;
    std::deque<std::uint64_t> primary_arrival_slots_;
    double delay_sum_ = 0.0;
    std::uint64_t delay_count_ = 0;
};

SimResult run(const SimConfig& cfg);

/// Streaming least-squares slope of both queue lengths against slot index.
class DriftMeter {
public:
    void add(std::uint64_t qp, std::uint64_t qs) noexcept;
    [[nodiscard]] double primary_slope() const noexcept;
    [[nodiscard]] double secondary_slope() const noexcept;
    [[nodiscard]] std::uint64_t count() const noexcept { return n_; }

private:
    [[nodiscard]] double slope(long double sum_y, long double sum_ty) const noexcept;

    std::uint64_t n_ = 0;
    long double sum_qp_ = 0;
    long double sum_tqp_ = 0;
    long double sum_qs_ = 0;
    long double sum_tqs_ = 0;
};

/// Finite-run surrogates for stability.
inline constexpr double kDriftThreshold = 1e-3;  ///< packets/slot
/// Terminal queue bound is kTerminalFactor * sqrt(slots).
inline constexpr double kTerminalFactor = 10.0;

struct QueueDrift {
    double drift = 0.0;
    std::uint64_t terminal = 0;
    bool empirically_stable = false;
};

struct StabilityReport {
    QueueDrift primary;
    QueueDrift secondary;
    /// Strict Loynes test on the closed-form dominant-system rates.
    StabilityVerdict analytic;
    /// Primary verdict: empirical surrogate and strict Loynes must both hold,
    /// so a run exactly on lambda_p = mu_p is declared unstable.
    bool stable = false;
    double drift = 0.0;  ///< primary drift, repeated for convenience
};

/// Runs cfg and fits the queue-length slope over the final `window` slots.
/// Requires window >= 1e4 and window <= cfg.slots.
StabilityReport measure_stability(const SimConfig& cfg, std::uint64_t window);

struct DominanceReport {
    bool dominant_ge_original = false;
    bool saturation_indistinguishable = false;
    std::uint64_t slots_compared = 0;
    std::optional<std::uint64_t> first_violation;
};

/// Runs cfg in both modes with shared randomness and checks that dominant
/// queues are never shorter slot by slot; then repeats with lambda_s = 1 and
/// a non-empty initial secondary queue and checks the two runs coincide.
DominanceReport compare_dominant(const SimConfig& cfg);

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows);
/// Parses the format written by write_trace_csv. Throws DomainError on
/// malformed input.
std::vector<TraceRow> read_trace_csv(std::istream& in);

/// Replays Q^{t+1} = (Q^t - U^t)^+ + A^t over the trace and reports whether
/// every stored queue length is reproduced.
bool replay_matches(std::span<const TraceRow> rows);

}  // namespace crsa
