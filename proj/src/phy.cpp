#include "crsa/phy.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "crsa/errors.hpp"
#include "crsa/mathcore.hpp"

namespace crsa {

namespace {

void require_positive(double v, const char* name)
{
    if (!std::isfinite(v) || v <= 0.0) {
        throw DomainError(std::string("PhyParams.") + name + " must be finite and > 0");
    }
}

void require_sensing_time(const PhyParams& params, double tau, const char* op)
{
    if (!std::isfinite(tau) || tau <= 0.0 || tau > params.slot_s) {
        throw DomainError(std::string(op) + ": sensing time must lie in (0, T]");
    }
}

void require_open_probability(double p, const char* op)
{
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError(std::string(op) + ": target probability must lie in (0, 1)");
    }
}

}  // namespace

void PhyParams::validate() const
{
    require_positive(bits_per_packet, "bits_per_packet");
    require_positive(slot_s, "slot_s");
    require_positive(bandwidth_hz, "bandwidth_hz");
    require_positive(sampling_hz, "sampling_hz");
    require_positive(sense_snr, "sense_snr");
    require_positive(noise_var, "noise_var");
    require_positive(secondary_snr, "secondary_snr");
    require_positive(secondary_gain, "secondary_gain");
    require_positive(primary_snr, "primary_snr");
    require_positive(primary_gain, "primary_gain");
    if (!std::isfinite(spectral_load())) {
        throw DomainError("PhyParams: b/(T W) must be finite");
    }
}

double tx_rate(const PhyParams& params, double tau)
{
    if (!(tau >= 0.0) || tau >= params.slot_s) {
        throw DomainError("tx_rate: sensing time must lie in [0, T)");
    }
    return params.bits_per_packet / (params.slot_s - tau);
}

double rayleigh_success(double load, double snr_gain)
{
    // 2^load - 1 via expm1 keeps precision for small loads.
    return std::exp(-std::expm1(load * std::numbers::ln2) / snr_gain);
}

double snr_gain_for_success(double load, double target)
{
    if (!(target > 0.0 && target < 1.0)) {
        throw DomainError("snr_gain_for_success: target must lie in (0, 1)");
    }
    return std::expm1(load * std::numbers::ln2) / -std::log(target);
}

double secondary_success_prob(const PhyParams& params, double tau)
{
    if (!(tau >= 0.0)) {
        throw DomainError("secondary_success_prob: sensing time must be >= 0");
    }
    if (tau >= params.slot_s) {
        return 0.0;
    }
    const double load = params.spectral_load() / (1.0 - tau / params.slot_s);
    return rayleigh_success(load, params.secondary_snr * params.secondary_gain);
}

double primary_success_prob(const PhyParams& params)
{
    return rayleigh_success(params.spectral_load(), params.primary_snr * params.primary_gain);
}

SensingPoint roc_from_threshold(const PhyParams& params, double epsilon, double tau)
{
    require_sensing_time(params, tau, "roc_from_threshold");
    if (!std::isfinite(epsilon) || epsilon <= 0.0) {
        throw DomainError("roc_from_threshold: threshold must be > 0");
    }
    const double gamma = params.sense_snr;
    const double ratio = epsilon / params.noise_var;
    const double samples = tau * params.sampling_hz;
    const double fa_arg = (ratio - 1.0) * std::sqrt(samples);
    const double det_arg = (ratio - gamma - 1.0) * std::sqrt(samples / (2.0 * gamma + 1.0));
    // 1 - Q(x) written as Q(-x) so tiny misdetection probabilities keep precision.
    return {tau, q_func(fa_arg), q_func(-det_arg)};
}

SensingPoint pfa_for_target_pmd(const PhyParams& params, double p_md_target, double tau)
{
    require_sensing_time(params, tau, "pfa_for_target_pmd");
    require_open_probability(p_md_target, "pfa_for_target_pmd");
    const double gamma = params.sense_snr;
    // Q^{-1}(1 - p) = -Q^{-1}(p)
    const double arg = -std::sqrt(2.0 * gamma + 1.0) * q_inv(p_md_target) +
                       std::sqrt(tau * params.sampling_hz) * gamma;
    return {tau, q_func(arg), p_md_target};
}

SensingPoint pmd_for_target_pfa(const PhyParams& params, double p_fa_target, double tau)
{
    require_sensing_time(params, tau, "pmd_for_target_pfa");
    require_open_probability(p_fa_target, "pmd_for_target_pfa");
    const double gamma = params.sense_snr;
    const double det_arg = (q_inv(p_fa_target) - std::sqrt(tau * params.sampling_hz) * gamma) /
                           std::sqrt(2.0 * gamma + 1.0);
    return {tau, p_fa_target, q_func(-det_arg)};
}

double db_to_linear(double db) noexcept { return std::pow(10.0, db / 10.0); }

double linear_to_db(double linear) noexcept { return 10.0 * std::log10(linear); }

}  // namespace crsa
