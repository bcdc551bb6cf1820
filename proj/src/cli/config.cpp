#include "crsa/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "crsa/errors.hpp"

namespace crsa::cli {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& lines)
{
    std::string out = "invalid configuration:";
    for (const auto& l : lines) {
        out += "\n  - " + l;
    }
    return out;
}

/// Typed, path-aware view of one JSON object. Every accessor records the key
/// as known; finish() reports the keys nobody asked for.
class Section {
public:
    Section(const json& obj, std::string path, std::vector<std::string>& diag)
        : obj_(obj), path_(std::move(path)), diag_(diag)
    {
        if (!obj_.is_object()) {
            error("", "must be an object");
        }
    }

    ~Section() = default;
    Section(const Section&) = delete;
    Section& operator=(const Section&) = delete;

    [[nodiscard]] bool has(const std::string& key)
    {
        known_.insert(key);
        return obj_.is_object() && obj_.contains(key) && !obj_.at(key).is_null();
    }

    std::optional<double> number(const std::string& key, double lo, double hi)
    {
        if (!has(key)) return std::nullopt;
        const json& v = obj_.at(key);
        if (!v.is_number()) {
            error(key, "must be a number");
            return std::nullopt;
        }
        const double x = v.get<double>();
        if (!(x >= lo && x <= hi)) {
            std::ostringstream msg;
            msg << "must lie in [" << lo << ", " << hi << "], got " << x;
            error(key, msg.str());
            return std::nullopt;
        }
        return x;
    }

    double number(const std::string& key, double fallback, double lo, double hi)
    {
        return number(key, lo, hi).value_or(fallback);
    }

    std::uint64_t count(const std::string& key, std::uint64_t fallback, std::uint64_t lo,
                        std::uint64_t hi = std::numeric_limits<std::uint64_t>::max())
    {
        if (!has(key)) return fallback;
        const json& v = obj_.at(key);
        // Accept integral doubles such as 1e6.
        if (v.is_number_unsigned() || v.is_number_integer()) {
            if (v.is_number_integer() && v.get<std::int64_t>() < 0) {
                error(key, "must be a non-negative integer");
                return fallback;
            }
        } else if (!(v.is_number_float() && v.get<double>() >= 0 && v.get<double>() == std::floor(v.get<double>()) &&
                     v.get<double>() < 1.8e19)) {
            error(key, "must be a non-negative integer");
            return fallback;
        }
        const auto x = v.is_number_float() ? static_cast<std::uint64_t>(v.get<double>()) : v.get<std::uint64_t>();
        if (x < lo || x > hi) {
            error(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            return fallback;
        }
        return x;
    }

    bool boolean(const std::string& key, bool fallback)
    {
        if (!has(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_boolean()) {
            error(key, "must be true or false");
            return fallback;
        }
        return v.get<bool>();
    }

    std::optional<std::string> string(const std::string& key)
    {
        if (!has(key)) return std::nullopt;
        const json& v = obj_.at(key);
        if (!v.is_string()) {
            error(key, "must be a string");
            return std::nullopt;
        }
        return v.get<std::string>();
    }

    const json* object(const std::string& key)
    {
        if (!has(key)) return nullptr;
        const json& v = obj_.at(key);
        if (!v.is_object()) {
            error(key, "must be an object");
            return nullptr;
        }
        return &v;
    }

    /// Either an explicit array or {"start", "stop", "count", "spacing"}.
    std::optional<std::vector<double>> grid(const std::string& key, double lo, double hi)
    {
        if (!has(key)) return std::nullopt;
        const json& v = obj_.at(key);
        std::vector<double> out;
        if (v.is_array()) {
            for (const auto& e : v) {
                if (!e.is_number()) {
                    error(key, "entries must be numbers");
                    return std::nullopt;
                }
                out.push_back(e.get<double>());
            }
        } else if (v.is_object()) {
            Section g(v, child_path(key), diag_);
            const auto start = g.number("start", lo, hi);
            const auto stop = g.number("stop", lo, hi);
            const auto n = g.count("count", 0, 1, 10'000'000);
            const std::string spacing = g.string("spacing").value_or("linear");
            g.finish();
            if (!start || !stop) {
                error(key, "range needs numeric start and stop");
                return std::nullopt;
            }
            if (spacing == "linear") {
                out = linspace(*start, *stop, n);
            } else if (spacing == "log") {
                if (*start <= 0.0) {
                    error(key, "log spacing needs start > 0");
                    return std::nullopt;
                }
                out = logspace(*start, *stop, n);
            } else {
                error(key + ".spacing", "must be \"linear\" or \"log\"");
                return std::nullopt;
            }
        } else {
            error(key, "must be an array of numbers or a {start, stop, count} range");
            return std::nullopt;
        }
        if (out.empty()) {
            error(key, "must not be empty");
            return std::nullopt;
        }
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (!(out[i] >= lo && out[i] <= hi)) {
                error(key, "values must lie in the allowed range");
                return std::nullopt;
            }
            if (i > 0 && !(out[i] > out[i - 1])) {
                error(key, "values must be strictly increasing");
                return std::nullopt;
            }
        }
        return out;
    }

    void finish()
    {
        if (!obj_.is_object()) return;
        for (const auto& [k, _] : obj_.items()) {
            if (!known_.count(k)) {
                error(k, "unknown key");
            }
        }
    }

    void error(const std::string& key, const std::string& msg)
    {
        const std::string where = key.empty() ? path_ : child_path(key);
        diag_.push_back(where + ": " + msg);
    }

    [[nodiscard]] std::string child_path(const std::string& key) const
    {
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    const json& obj_;
    std::string path_;
    std::vector<std::string>& diag_;
    std::set<std::string> known_;
};

constexpr double kHuge = 1e300;

std::optional<Variant> parse_variant(Section& s, const std::string& key, const std::string& text)
{
    try {
        return variant_from_string(text);
    } catch (const DomainError& e) {
        s.error(key, e.what());
        return std::nullopt;
    }
}

/// SNR given in dB, or calibrated from a target success probability.
double link_snr(Section& phy, const std::string& prefix, double load, double gain, double fallback_db)
{
    const auto db = phy.number(prefix + "_snr_db", -200.0, 200.0);
    const auto target = phy.number(prefix + "_success", 0.0, 1.0);
    if (db && target) {
        phy.error(prefix + "_snr_db", "give either " + prefix + "_snr_db or " + prefix + "_success, not both");
    }
    if (target) {
        if (*target <= 0.0 || *target >= 1.0) {
            phy.error(prefix + "_success", "must lie strictly inside (0, 1)");
            return db_to_linear(fallback_db);
        }
        return snr_gain_for_success(load, *target) / gain;
    }
    return db_to_linear(db.value_or(fallback_db));
}

void parse_scenario(const json& node, RunConfig& cfg, std::vector<std::string>& diag)
{
    Section s(node, "scenario", diag);
    if (const json* op = s.object("operating_point")) {
        Section o(*op, "scenario.operating_point", diag);
        OperatingPoint pt;
        pt.p_fa = o.number("p_fa", 0.0, 0.0, 1.0);
        pt.p_md = o.number("p_md", 0.0, 0.0, 1.0);
        pt.p_bar_p_pd = o.number("p_bar_p_pd", 1.0, 0.0, 1.0);
        pt.p_bar_s_sd = o.number("p_bar_s_sd", 1.0, 0.0, 1.0);
        pt.tau = o.number("tau", 0.0, 0.0, kHuge);
        if (pt.p_bar_p_pd <= 0.0) {
            o.error("p_bar_p_pd", "must be > 0");
        }
        o.finish();
        cfg.operating_point = pt;
    }
    if (const json* ph = s.object("phy")) {
        Section p(*ph, "scenario.phy", diag);
        PhyParams phy;
        phy.bits_per_packet = p.number("bits_per_packet", phy.bits_per_packet, 1e-300, kHuge);
        phy.slot_s = p.number("slot_s", phy.slot_s, 1e-300, kHuge);
        phy.bandwidth_hz = p.number("bandwidth_hz", phy.bandwidth_hz, 1e-300, kHuge);
        phy.sampling_hz = p.number("sampling_hz", phy.sampling_hz, 1e-300, kHuge);
        phy.sense_snr = db_to_linear(p.number("sense_snr_db", -15.0, -200.0, 200.0));
        phy.noise_var = p.number("noise_var", phy.noise_var, 1e-300, kHuge);
        phy.secondary_gain = p.number("secondary_gain", phy.secondary_gain, 1e-300, kHuge);
        phy.primary_gain = p.number("primary_gain", phy.primary_gain, 1e-300, kHuge);
        const double load = phy.spectral_load();
        phy.secondary_snr = link_snr(p, "secondary", load, phy.secondary_gain, 10.0);
        phy.primary_snr = link_snr(p, "primary", load, phy.primary_gain, 10.0);
        p.finish();
        cfg.phy = phy;
    }
    if (const json* se = s.object("sensing")) {
        Section t(*se, "scenario.sensing", diag);
        const std::string kind = t.string("target").value_or("pfa");
        if (kind == "pfa") {
            cfg.sensing.kind = SensingTarget::Kind::FixedPfa;
        } else if (kind == "pmd") {
            cfg.sensing.kind = SensingTarget::Kind::FixedPmd;
        } else if (kind == "threshold") {
            cfg.sensing.kind = SensingTarget::Kind::FixedThreshold;
        } else {
            t.error("target", "must be \"pfa\", \"pmd\" or \"threshold\"");
        }
        cfg.sensing.value = t.number("value", 0.1, 0.0, kHuge);
        t.finish();
    }
    if (auto g = s.grid("tau_grid", 1e-300, kHuge)) {
        cfg.tau_grid = *g;
    }
    s.finish();

    if (cfg.phy && cfg.operating_point) {
        s.error("", "give either phy or operating_point, not both");
    } else if (!cfg.phy && !cfg.operating_point) {
        s.error("", "needs a phy block or an operating_point block");
    }
    if (cfg.phy && cfg.tau_grid.empty()) {
        cfg.tau_grid = default_tau_grid(cfg.phy->slot_s);
    }
    if (cfg.phy) {
        for (double tau : cfg.tau_grid) {
            if (tau >= cfg.phy->slot_s) {
                s.error("tau_grid", "sensing times must be < slot_s");
                break;
            }
        }
        if (cfg.sensing.kind != SensingTarget::Kind::FixedThreshold &&
            !(cfg.sensing.value > 0.0 && cfg.sensing.value < 1.0)) {
            s.error("sensing.value", "target probability must lie in (0, 1)");
        }
    }
}

void parse_simulate(const json& node, RunConfig& cfg, std::vector<std::string>& diag)
{
    Section s(node, "simulate", diag);
    SimulateSection& sim = cfg.simulate;
    sim.slots = s.count("slots", sim.slots, 1);
    sim.lambda_p = s.number("lambda_p", sim.lambda_p, 0.0, 1.0);
    sim.lambda_s = s.number("lambda_s", sim.lambda_s, 0.0, 1.0);
    if (auto m = s.string("mode")) {
        try {
            sim.mode = sim_mode_from_string(*m);
        } catch (const DomainError& e) {
            s.error("mode", e.what());
        }
    }
    sim.feedback_error = s.number("feedback_error", sim.feedback_error, 0.0, 1.0);
    if (sim.feedback_error >= 1.0) {
        s.error("feedback_error", "must be < 1");
    }
    sim.record_traces = s.boolean("record_traces", sim.record_traces);
    sim.stability_window = s.count("stability_window", sim.stability_window, 10'000);
    sim.initial_qp = s.count("initial_qp", 0, 0);
    sim.initial_qs = s.count("initial_qs", 0, 0);
    sim.batches = static_cast<std::uint32_t>(s.count("batches", sim.batches, 1, 1'000'000));
    if (const json* pol = s.object("policy")) {
        Section p(*pol, "simulate.policy", diag);
        if (auto v = p.string("variant")) {
            if (auto parsed = parse_variant(p, "variant", *v)) sim.policy.variant = *parsed;
        }
        sim.policy.optimal = p.boolean("optimal", false);
        sim.policy.a_s = p.number("a_s", sim.policy.variant == Variant::Sc ? 1.0 : 0.0, 0.0, 1.0);
        sim.policy.b_s = p.number("b_s", 0.0, 0.0, 1.0);
        sim.policy.tau = p.number("tau", 0.0, kHuge);
        p.finish();
    }
    s.finish();
    if (sim.stability_window > sim.slots) {
        s.error("stability_window", "must not exceed slots");
    }
}

void parse_estimate(const json& node, RunConfig& cfg, std::vector<std::string>& diag)
{
    Section s(node, "estimate", diag);
    EstimateSection& est = cfg.estimate;
    est.lp_slots = s.count("lp_slots", est.lp_slots, 1);
    est.rp_slots = s.count("rp_slots", est.rp_slots, 1);
    est.lambda_p = s.number("lambda_p", est.lambda_p, 0.0, 1.0);
    est.lambda_s = s.number("lambda_s", est.lambda_s, 0.0, 1.0);
    est.feedback_error = s.number("feedback_error", est.feedback_error, 0.0, 1.0);
    if (est.feedback_error >= 1.0) {
        s.error("feedback_error", "must be < 1");
    }
    if (auto m = s.string("mode")) {
        try {
            est.mode = estimator_mode_from_string(*m);
        } catch (const DomainError& e) {
            s.error("mode", e.what());
        }
    }
    if (auto v = s.string("variant")) {
        if (auto parsed = parse_variant(s, "variant", *v)) est.variant = *parsed;
    }
    est.use_margin = s.boolean("use_margin", est.use_margin);
    est.error_bound = s.number("error_bound", 0.0, 1.0);
    s.finish();
    if (est.rp_slots < 10 * est.lp_slots) {
        s.error("rp_slots", "must be at least 10 * lp_slots");
    }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> diagnostics)
    : std::runtime_error(join(diagnostics)), diagnostics_(std::move(diagnostics))
{
}

Scenario RunConfig::scenario() const
{
    if (operating_point) {
        const auto& o = *operating_point;
        return Scenario::fixed(o.p_bar_p_pd, o.p_bar_s_sd, o.p_fa, o.p_md, o.tau);
    }
    return Scenario::from_phy(*phy, sensing, tau_grid);
}

RunConfig parse_config(const json& doc)
{
    std::vector<std::string> diag;
    RunConfig cfg;
    Section root(doc, "", diag);

    cfg.seed = root.count("seed", cfg.seed, 0);
    if (auto dir = root.string("output_dir")) {
        cfg.output_dir = *dir;
    }
    if (const json* sc = root.object("scenario")) {
        parse_scenario(*sc, cfg, diag);
    } else {
        root.error("scenario", "is required");
    }

    if (root.has("schemes")) {
        const json& arr = doc.at("schemes");
        if (!arr.is_array() || arr.empty()) {
            root.error("schemes", "must be a non-empty array of scheme names");
        } else {
            cfg.schemes.clear();
            for (const auto& e : arr) {
                if (!e.is_string()) {
                    root.error("schemes", "entries must be strings");
                    continue;
                }
                if (auto v = parse_variant(root, "schemes", e.get<std::string>())) {
                    cfg.schemes.push_back(*v);
                }
            }
        }
    }
    cfg.lambda_p = root.number("lambda_p", 0.0, 1.0);
    if (auto g = root.grid("lambda_p_grid", 0.0, 1.0)) {
        cfg.lambda_p_grid = *g;
    }
    if (auto g = root.grid("b_s_grid", 0.0, 1.0)) {
        cfg.b_s_grid = *g;
    }
    cfg.margin = root.number("margin", 0.0, 0.0, 1.0);

    if (const json* sim = root.object("simulate")) {
        parse_simulate(*sim, cfg, diag);
    }
    if (const json* est = root.object("estimate")) {
        parse_estimate(*est, cfg, diag);
    }
    if (const json* sw = root.object("sweep")) {
        Section s(*sw, "sweep", diag);
        if (auto g = s.grid("targets", 0.0, kHuge)) {
            cfg.sweep.targets = *g;
        }
        s.finish();
    }
    root.finish();

    if (!diag.empty()) {
        throw ConfigError(std::move(diag));
    }
    if (cfg.phy) {
        try {
            cfg.phy->validate();
        } catch (const DomainError& e) {
            throw ConfigError({std::string("scenario.phy: ") + e.what()});
        }
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError({"cannot open config file '" + path.string() + "'"});
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
    }
    return parse_config(doc);
}

}  // namespace crsa::cli
