#pragma once

namespace crsa {

/// Physical-layer constants. All SNRs are linear; dB conversion happens at the
/// CLI boundary only.
struct PhyParams {
    double bits_per_packet = 1000.0;    ///< b
    double slot_s = 0.1;                ///< T, seconds
    double bandwidth_hz = 1.0e4;        ///< W
    double sampling_hz = 6.0e6;         ///< f_s
    double sense_snr = 0.0316227766;    ///< gamma at the detector
    double noise_var = 1.0;             ///< sigma_u^2 at the detector
    double secondary_snr = 10.0;        ///< gamma_{s,sd} at unit gain
    double secondary_gain = 1.0;        ///< sigma^2_{s,sd}, mean channel gain
    double primary_snr = 10.0;          ///< gamma_{p,pd} at unit gain
    double primary_gain = 1.0;          ///< sigma^2_{p,pd}, mean channel gain

    /// Throws DomainError unless every field is finite and strictly positive.
    void validate() const;
    /// b/(T W), the spectral efficiency needed with a full slot.
    [[nodiscard]] double spectral_load() const noexcept
    {
        return bits_per_packet / (slot_s * bandwidth_hz);
    }
};

/// Detector operating point. tau = 0 denotes the no-sensing scheme; its
/// p_fa/p_md are then assigned by scheme code, not by the detector formulas.
struct SensingPoint {
    double tau = 0.0;
    double p_fa = 0.0;
    double p_md = 0.0;
};

/// b/(T - tau), bits per second.
double tx_rate(const PhyParams& params, double tau);

/// Rayleigh probability of correct reception on the secondary link when
/// tau seconds of the slot are spent sensing. Returns 0 for tau >= T.
double secondary_success_prob(const PhyParams& params, double tau);

/// Same closed form for the primary link with tau = 0.
double primary_success_prob(const PhyParams& params);

/// Rayleigh success probability exp(-(2^load - 1)/snr_gain) for a link whose
/// required spectral efficiency is `load` and mean SNR is `snr_gain`.
double rayleigh_success(double load, double snr_gain);

/// Inverse of rayleigh_success in the SNR: the gamma*sigma^2 product that
/// makes a link with the given load succeed with probability `target`.
double snr_gain_for_success(double load, double target);

/// Energy-detector ROC at threshold epsilon and sensing time tau.
SensingPoint roc_from_threshold(const PhyParams& params, double epsilon, double tau);

/// Constant-detection-probability operating point: p_md is fixed, p_fa follows.
SensingPoint pfa_for_target_pmd(const PhyParams& params, double p_md_target, double tau);

/// Constant-false-alarm operating point: p_fa is fixed, p_md follows.
SensingPoint pmd_for_target_pfa(const PhyParams& params, double p_fa_target, double tau);

double db_to_linear(double db) noexcept;
double linear_to_db(double linear) noexcept;

}  // namespace crsa
