#pragma once

#include <string_view>

#include "crsa/phy.hpp"

namespace crsa {

/// Secondary access schemes.
///   Sc: conventional sensing, transmit w.p. 1 when the channel is sensed idle
///   S1: transmit w.p. a_s when sensed idle
///   S2: transmit w.p. a_s when sensed idle and w.p. b_s when sensed busy
///   S0: no sensing, transmit w.p. a_s in every slot
enum class Variant { Sc, S1, S2, S0 };

std::string_view to_string(Variant v) noexcept;
/// Accepts "Sc", "S1", "S2", "S0" (case-insensitive). Throws DomainError otherwise.
Variant variant_from_string(std::string_view name);

struct SchemeConfig {
    Variant variant = Variant::S1;
    double a_s = 0.0;
    double b_s = 0.0;
    SensingPoint sensing{};

    static SchemeConfig conventional(SensingPoint sensing) { return {Variant::Sc, 1.0, 0.0, sensing}; }
    static SchemeConfig s1(double a_s, SensingPoint sensing) { return {Variant::S1, a_s, 0.0, sensing}; }
    static SchemeConfig s2(double a_s, double b_s, SensingPoint sensing)
    {
        return {Variant::S2, a_s, b_s, sensing};
    }
    static SchemeConfig s0(double a_s) { return {Variant::S0, a_s, 0.0, SensingPoint{}}; }
    /// Secondary never transmits.
    static SchemeConfig silent() { return s0(0.0); }

    /// Throws DomainError when the variant's invariants are violated
    /// (Sc needs a_s = 1 and b_s = 0, S1 needs b_s = 0, S0 needs tau = 0).
    void validate() const;

    /// Sensing probabilities the service-rate algebra should use. S0 behaves
    /// like a detector that always reports idle: p_md = 1, p_fa = 0.
    [[nodiscard]] SensingPoint effective_sensing() const noexcept;
};

/// Success probabilities of the two links for a given sensing time.
struct LinkQuality {
    double p_bar_p_pd = 1.0;
    double p_bar_s_sd = 1.0;
};

LinkQuality link_from_phy(const PhyParams& phy, double tau);

struct ServiceRates {
    double mu_p = 0.0;
    double mu_s = 0.0;
    double p_empty = 0.0;  ///< Pr{Q_p = 0} = 1 - lambda_p/mu_p
};

struct RatePair {
    double lambda_p = 0.0;
    double lambda_s = 0.0;
};

struct StabilityVerdict {
    bool primary = false;
    bool secondary = false;
    [[nodiscard]] bool both() const noexcept { return primary && secondary; }
};

/// mu_p for the configuration; does not depend on lambda_p.
double primary_service_rate(const SchemeConfig& cfg, double p_bar_p_pd);

/// Secondary success probability in a slot where the primary queue is empty.
double secondary_idle_service(const SchemeConfig& cfg, double p_bar_s_sd);

/// Closed-form service rates of the dominant system.
///
/// Throws PrimaryUnstableError when lambda_p > mu_p. At lambda_p == mu_p the
/// boundary value (p_empty = 0, mu_s = 0) is returned so region tracing stays
/// continuous; is_stable still reports the primary unstable there.
ServiceRates service_rates(const SchemeConfig& cfg, const LinkQuality& link, double lambda_p);

/// Boundary of the no-sensing region: P_s (1 - sqrt(lambda_p/P_p))^2, 0 when
/// lambda_p > P_p.
double s0_boundary(double lambda_p, double p_bar_p_pd, double p_bar_s_sd);

/// Loynes with strict inequality per queue.
StabilityVerdict is_stable(const ServiceRates& rates, const RatePair& arrivals) noexcept;

/// P_MD + (1 - P_MD)(1 - b_s) >= lambda_p / P_p.
bool s2_feasible(double lambda_p, double p_md, double b_s, double p_bar_p_pd) noexcept;

}  // namespace crsa
