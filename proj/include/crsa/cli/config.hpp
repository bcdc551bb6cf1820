#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "crsa/estimator.hpp"
#include "crsa/optimizer.hpp"
#include "crsa/phy.hpp"
#include "crsa/sim.hpp"

namespace crsa::cli {

/// Schema violations in a run configuration. what() joins all diagnostics.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> diagnostics);
    [[nodiscard]] const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::vector<std::string> diagnostics_;
};

struct OperatingPoint {
    double p_fa = 0.0;
    double p_md = 0.0;
    double p_bar_p_pd = 1.0;
    double p_bar_s_sd = 1.0;
    double tau = 0.0;  ///< informational only
};

/// Access policy for simulate: either explicit probabilities or "optimal",
/// which runs the optimizer at the simulated lambda_p.
struct PolicySpec {
    Variant variant = Variant::S1;
    bool optimal = false;
    double a_s = 0.0;
    double b_s = 0.0;
    std::optional<double> tau;  ///< seconds; required for sensing variants with a phy scenario
};

struct SimulateSection {
    std::uint64_t slots = 1'000'000;
    double lambda_p = 0.3;
    double lambda_s = 0.1;
    PolicySpec policy;
    SimMode mode = SimMode::Dominant;
    double feedback_error = 0.0;
    bool record_traces = false;
    std::uint64_t stability_window = 100'000;
    std::uint64_t initial_qp = 0;
    std::uint64_t initial_qs = 0;
    std::uint32_t batches = 50;
};

struct EstimateSection {
    std::uint64_t lp_slots = 10'000;
    std::uint64_t rp_slots = 1'000'000;
    double lambda_p = 0.3;
    double lambda_s = 1.0;
    double feedback_error = 0.0;
    EstimatorMode mode = EstimatorMode::Unbiased;
    Variant variant = Variant::S2;
    bool use_margin = true;
    std::optional<double> error_bound;
};

struct SweepSection {
    std::vector<double> targets;  ///< defaults to the scenario's sensing target value
};

/// Everything a subcommand needs, parsed and validated from one JSON document.
struct RunConfig {
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = ".";

    std::optional<PhyParams> phy;
    SensingTarget sensing{};
    std::vector<double> tau_grid;
    std::optional<OperatingPoint> operating_point;

    std::vector<Variant> schemes{Variant::Sc, Variant::S1, Variant::S2, Variant::S0};
    std::optional<double> lambda_p;
    std::vector<double> lambda_p_grid;
    std::vector<double> b_s_grid = default_b_grid();
    double margin = 0.0;

    SimulateSection simulate;
    EstimateSection estimate;
    SweepSection sweep;

    [[nodiscard]] Scenario scenario() const;
};

/// Throws ConfigError listing every problem found (unknown keys, wrong types,
/// out-of-range values).
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace crsa::cli
