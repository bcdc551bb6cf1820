#include "crsa/schemes.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "crsa/errors.hpp"

namespace crsa {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

// Relative slack when comparing lambda_p against mu_p so that optimizer
// outputs sitting on the constraint are not rejected because of rounding.
constexpr double kBoundarySlack = 1e-12;

}  // namespace

std::string_view to_string(Variant v) noexcept
{
    switch (v) {
    case Variant::Sc: return "Sc";
    case Variant::S1: return "S1";
    case Variant::S2: return "S2";
    case Variant::S0: return "S0";
    }
    return "?";
}

Variant variant_from_string(std::string_view name)
{
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "sc") return Variant::Sc;
    if (lower == "s1") return Variant::S1;
    if (lower == "s2") return Variant::S2;
    if (lower == "s0") return Variant::S0;
    throw DomainError("unknown scheme '" + std::string(name) + "' (expected Sc, S1, S2, S0)");
}

void SchemeConfig::validate() const
{
    if (!is_probability(a_s) || !is_probability(b_s)) {
        throw DomainError("SchemeConfig: access probabilities must lie in [0, 1]");
    }
    if (!is_probability(sensing.p_fa) || !is_probability(sensing.p_md) || !(sensing.tau >= 0.0)) {
        throw DomainError("SchemeConfig: invalid sensing point");
    }
    switch (variant) {
    case Variant::Sc:
        if (a_s != 1.0 || b_s != 0.0) {
            throw DomainError("SchemeConfig: Sc requires a_s = 1 and b_s = 0");
        }
        break;
    case Variant::S1:
        if (b_s != 0.0) {
            throw DomainError("SchemeConfig: S1 requires b_s = 0");
        }
        break;
    case Variant::S2:
        break;
    case Variant::S0:
        if (sensing.tau != 0.0) {
            throw DomainError("SchemeConfig: S0 does not sense (tau must be 0)");
        }
        break;
    }
}

SensingPoint SchemeConfig::effective_sensing() const noexcept
{
    if (variant == Variant::S0) {
        return {0.0, 0.0, 1.0};
    }
    return sensing;
}

LinkQuality link_from_phy(const PhyParams& phy, double tau)
{
    return {primary_success_prob(phy), secondary_success_prob(phy, tau)};
}

double primary_service_rate(const SchemeConfig& cfg, double p_bar_p_pd)
{
    const SensingPoint s = cfg.effective_sensing();
    // Primary survives when the secondary stays silent: after a misdetection
    // with prob 1 - a_s, after a correct detection with prob 1 - b_s.
    return p_bar_p_pd * (s.p_md * (1.0 - cfg.a_s) + (1.0 - s.p_md) * (1.0 - cfg.b_s));
}

double secondary_idle_service(const SchemeConfig& cfg, double p_bar_s_sd)
{
    const SensingPoint s = cfg.effective_sensing();
    return p_bar_s_sd * (cfg.a_s * (1.0 - s.p_fa) + cfg.b_s * s.p_fa);
}

ServiceRates service_rates(const SchemeConfig& cfg, const LinkQuality& link, double lambda_p)
{
    cfg.validate();
    if (!is_probability(link.p_bar_p_pd) || !is_probability(link.p_bar_s_sd)) {
        throw DomainError("service_rates: link success probabilities must lie in [0, 1]");
    }
    if (!is_probability(lambda_p)) {
        throw DomainError("service_rates: lambda_p must lie in [0, 1]");
    }
    ServiceRates rates;
    rates.mu_p = primary_service_rate(cfg, link.p_bar_p_pd);
    if (lambda_p > rates.mu_p * (1.0 + kBoundarySlack)) {
        throw PrimaryUnstableError("service_rates: lambda_p exceeds mu_p, mu_s undefined");
    }
    if (lambda_p == 0.0) {
        rates.p_empty = 1.0;
    } else {
        rates.p_empty = std::clamp(1.0 - lambda_p / rates.mu_p, 0.0, 1.0);
    }
    rates.mu_s = secondary_idle_service(cfg, link.p_bar_s_sd) * rates.p_empty;
    return rates;
}

double s0_boundary(double lambda_p, double p_bar_p_pd, double p_bar_s_sd)
{
    if (lambda_p < 0.0 || p_bar_p_pd <= 0.0) {
        throw DomainError("s0_boundary: need lambda_p >= 0 and P_p > 0");
    }
    if (lambda_p > p_bar_p_pd) {
        return 0.0;
    }
    const double gap = 1.0 - std::sqrt(lambda_p / p_bar_p_pd);
    return p_bar_s_sd * gap * gap;
}

StabilityVerdict is_stable(const ServiceRates& rates, const RatePair& arrivals) noexcept
{
    return {arrivals.lambda_p < rates.mu_p, arrivals.lambda_s < rates.mu_s};
}

bool s2_feasible(double lambda_p, double p_md, double b_s, double p_bar_p_pd) noexcept
{
    return p_md + (1.0 - p_md) * (1.0 - b_s) >= lambda_p / p_bar_p_pd;
}

}  // namespace crsa
