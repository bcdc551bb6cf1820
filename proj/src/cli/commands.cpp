#include "crsa/cli/commands.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "crsa/errors.hpp"

namespace crsa::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kSchemaVersion = 1;

json number_or_null(double x)
{
    return std::isfinite(x) ? json(x) : json(nullptr);
}

template <class T>
json optional_or_null(const std::optional<T>& v)
{
    return v ? json(*v) : json(nullptr);
}

fs::path prepare_output(const RunConfig& cfg)
{
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) {
        throw ConfigError({"output_dir: cannot create '" + cfg.output_dir.string() + "': " + ec.message()});
    }
    return cfg.output_dir;
}

std::ofstream open_output(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError({"cannot write '" + path.string() + "'"});
    }
    return out;
}

void write_json(const fs::path& path, const json& doc)
{
    auto out = open_output(path);
    out << doc.dump(2) << '\n';
}

json header(std::string_view command, const RunConfig& cfg)
{
    return {{"schema_version", kSchemaVersion}, {"command", command}, {"seed", cfg.seed}};
}

json scheme_json(const SchemeConfig& s)
{
    json j = {{"scheme", to_string(s.variant)}, {"a_s", s.a_s}, {"b_s", s.b_s}};
    if (s.variant == Variant::S0) {
        j["tau"] = nullptr;
        j["p_fa"] = nullptr;
        j["p_md"] = nullptr;
    } else {
        j["tau"] = s.sensing.tau;
        j["p_fa"] = s.sensing.p_fa;
        j["p_md"] = s.sensing.p_md;
    }
    return j;
}

OptimizationRequest base_request(const RunConfig& cfg, Variant v, double lambda_p)
{
    OptimizationRequest req;
    req.variant = v;
    req.lambda_p = lambda_p;
    req.b_s_grid = cfg.b_s_grid;
    req.margin = cfg.margin;
    return req;
}

const std::vector<double>& require_lambda_grid(const RunConfig& cfg)
{
    if (cfg.lambda_p_grid.empty()) {
        throw ConfigError({"lambda_p_grid: required and must not be empty"});
    }
    return cfg.lambda_p_grid;
}

void write_region_csv(const fs::path& path, const RegionCurve& curve)
{
    auto out = open_output(path);
    out << "# crsa-region v" << kSchemaVersion << '\n';
    out << "lambda_p,lambda_s,scheme,tau,a_s,b_s\n";
    for (const auto& p : curve.points) {
        out << format_double(p.lambda_p) << ',' << format_double(p.lambda_s) << ',' << to_string(p.scheme)
            << ',' << format_double(p.tau) << ',' << format_double(p.a_s) << ',' << format_double(p.b_s)
            << '\n';
    }
}

json curve_summary(const RegionCurve& curve, const std::string& file)
{
    double peak = 0.0;
    double area = 0.0;
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        peak = std::max(peak, curve.points[i].lambda_s);
        if (i > 0) {
            const auto& a = curve.points[i - 1];
            const auto& b = curve.points[i];
            area += 0.5 * (a.lambda_s + b.lambda_s) * (b.lambda_p - a.lambda_p);
        }
    }
    return {{"scheme", curve.scheme},
            {"file", file},
            {"points", curve.points.size()},
            {"max_lambda_s", peak},
            {"area", area}};
}

/// Access policy and matching link for the simulate command.
struct ResolvedPolicy {
    SchemeConfig scheme;
    LinkQuality link;
    bool optimized = false;
    bool fallback_silent = false;
};

ResolvedPolicy resolve_policy(const RunConfig& cfg)
{
    const SimulateSection& sim = cfg.simulate;
    const PolicySpec& spec = sim.policy;
    const Scenario scenario = cfg.scenario();
    ResolvedPolicy out;

    if (spec.optimal) {
        OptimizationRequest req = base_request(cfg, spec.variant, sim.lambda_p);
        if (sim.lambda_p + req.margin > 1.0) {
            throw ConfigError({"margin: lambda_p + margin must not exceed 1"});
        }
        const OptimizationResult r = optimize_with_margin(req, scenario);
        out.optimized = true;
        if (r.feasible) {
            out.scheme = r.best;
            out.link = {scenario.p_bar_p_pd, r.p_bar_s_sd};
        } else {
            out.fallback_silent = true;
            out.scheme = SchemeConfig::silent();
            out.link = {scenario.p_bar_p_pd, scenario.p_bar_s_sd_unsensed};
        }
        return out;
    }

    if (spec.variant == Variant::S0) {
        out.scheme = SchemeConfig::s0(spec.a_s);
        out.link = {scenario.p_bar_p_pd, scenario.p_bar_s_sd_unsensed};
        return out;
    }

    SensingPoint sensing;
    if (cfg.operating_point) {
        sensing = scenario.candidates.front().sensing;
        out.link = {scenario.p_bar_p_pd, scenario.candidates.front().p_bar_s_sd};
    } else {
        if (!spec.tau) {
            throw ConfigError({"simulate.policy.tau: required for sensing schemes with a phy scenario"});
        }
        if (!(*spec.tau > 0.0 && *spec.tau < cfg.phy->slot_s)) {
            throw ConfigError({"simulate.policy.tau: must lie in (0, slot_s)"});
        }
        sensing = cfg.sensing.at(*cfg.phy, *spec.tau);
        out.link = link_from_phy(*cfg.phy, *spec.tau);
    }
    switch (spec.variant) {
    case Variant::Sc: out.scheme = SchemeConfig::conventional(sensing); break;
    case Variant::S1: out.scheme = SchemeConfig::s1(spec.a_s, sensing); break;
    case Variant::S2: out.scheme = SchemeConfig::s2(spec.a_s, spec.b_s, sensing); break;
    case Variant::S0: break;
    }
    return out;
}

json rate_comparison(const Estimate& e, double analytic)
{
    json j = {{"empirical", e.value}, {"std_error", e.std_error}, {"analytic", number_or_null(analytic)}};
    if (std::isfinite(analytic)) {
        const double diff = std::abs(e.value - analytic);
        j["abs_diff"] = diff;
        j["z_score"] = e.std_error > 0.0 ? json(diff / e.std_error) : json(nullptr);
    } else {
        j["abs_diff"] = nullptr;
        j["z_score"] = nullptr;
    }
    return j;
}

json drift_json(const QueueDrift& d)
{
    return {{"drift", d.drift}, {"terminal", d.terminal}, {"empirically_stable", d.empirically_stable}};
}

}  // namespace

std::string format_double(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

std::string_view to_string(Command c) noexcept
{
    switch (c) {
    case Command::Region: return "region";
    case Command::Optimize: return "optimize";
    case Command::Simulate: return "simulate";
    case Command::Estimate: return "estimate";
    case Command::Sweep: return "sweep";
    }
    return "?";
}

std::optional<Command> command_from_string(std::string_view name) noexcept
{
    for (Command c : {Command::Region, Command::Optimize, Command::Simulate, Command::Estimate, Command::Sweep}) {
        if (to_string(c) == name) return c;
    }
    return std::nullopt;
}

void apply_overrides(RunConfig& cfg, Command cmd, const Overrides& o)
{
    if (o.seed) cfg.seed = *o.seed;
    if (o.output_dir) cfg.output_dir = *o.output_dir;
    if (!o.mode) return;
    try {
        if (cmd == Command::Simulate) {
            cfg.simulate.mode = sim_mode_from_string(*o.mode);
        } else if (cmd == Command::Estimate) {
            cfg.estimate.mode = estimator_mode_from_string(*o.mode);
        } else {
            throw ConfigError({"--mode: only applies to simulate and estimate"});
        }
    } catch (const DomainError& e) {
        throw ConfigError({std::string("--mode: ") + e.what()});
    }
}

json cmd_region(const RunConfig& cfg)
{
    const auto& grid = require_lambda_grid(cfg);
    const fs::path dir = prepare_output(cfg);
    const Scenario scenario = cfg.scenario();
    const OptimizationRequest req = base_request(cfg, Variant::S2, 0.0);

    json doc = header("region", cfg);
    doc["margin"] = cfg.margin;
    doc["curves"] = json::array();
    for (Variant v : cfg.schemes) {
        const RegionCurve curve = trace_region(v, grid, req, scenario);
        const std::string file = "region_" + curve.scheme + ".csv";
        write_region_csv(dir / file, curve);
        doc["curves"].push_back(curve_summary(curve, file));
    }
    const UnionTrace u = trace_union(grid, req, scenario);
    write_region_csv(dir / "region_UNION.csv", u.curve);
    doc["curves"].push_back(curve_summary(u.curve, "region_UNION.csv"));

    doc["switching"] = json::array();
    for (const auto& d : u.policy) {
        json row = scheme_json(d.config);
        row["lambda_p"] = d.lambda_p;
        row["lambda_s"] = d.lambda_s;
        doc["switching"].push_back(std::move(row));
    }
    write_json(dir / "region_summary.json", doc);
    return doc;
}

json cmd_optimize(const RunConfig& cfg)
{
    if (!cfg.lambda_p) {
        throw ConfigError({"lambda_p: required for optimize"});
    }
    const double lambda_p = *cfg.lambda_p;
    if (lambda_p + cfg.margin > 1.0) {
        throw ConfigError({"margin: lambda_p + margin must not exceed 1"});
    }
    const fs::path dir = prepare_output(cfg);
    const Scenario scenario = cfg.scenario();

    json doc = header("optimize", cfg);
    doc["lambda_p"] = lambda_p;
    doc["margin"] = cfg.margin;
    doc["results"] = json::array();
    for (Variant v : cfg.schemes) {
        const OptimizationResult r = optimize_with_margin(base_request(cfg, v, lambda_p), scenario);
        json j = {{"scheme", to_string(v)}, {"feasible", r.feasible}};
        if (r.feasible) {
            json best = scheme_json(r.best);
            best.erase("scheme");
            j["best"] = best;
            j["lambda_s_max"] = r.lambda_s_max;
            j["mu_p"] = r.mu_p;
            j["p_bar_s_sd"] = r.p_bar_s_sd;
            j["primary_delay"] = number_or_null(primary_delay(lambda_p, r.mu_p));
        } else {
            j["best"] = nullptr;
            j["lambda_s_max"] = 0.0;
            j["mu_p"] = nullptr;
            j["p_bar_s_sd"] = nullptr;
            j["primary_delay"] = nullptr;
        }
        j["delay_bound"] = optional_or_null(r.delay_bound);
        j["per_tau"] = json::array();
        for (const auto& t : r.per_tau) {
            j["per_tau"].push_back({{"tau", v == Variant::S0 ? json(nullptr) : json(t.tau)},
                                    {"a_s", t.a_s},
                                    {"b_s", t.b_s},
                                    {"lambda_s", t.lambda_s},
                                    {"feasible", t.feasible}});
        }
        doc["results"].push_back(std::move(j));
    }
    write_json(dir / "optimize.json", doc);
    return doc;
}

json cmd_simulate(const RunConfig& cfg)
{
    const SimulateSection& s = cfg.simulate;
    const fs::path dir = prepare_output(cfg);
    const ResolvedPolicy pol = resolve_policy(cfg);

    SimConfig sc;
    sc.slots = s.slots;
    sc.seed = cfg.seed;
    sc.lambda_p = s.lambda_p;
    sc.lambda_s = s.lambda_s;
    sc.scheme = pol.scheme;
    sc.link = pol.link;
    sc.mode = s.mode;
    sc.feedback_error = s.feedback_error;
    sc.record_traces = s.record_traces;
    sc.initial_qp = s.initial_qp;
    sc.initial_qs = s.initial_qs;
    sc.batches = s.batches;
    try {
        sc.validate();
    } catch (const DomainError& e) {
        throw ConfigError({std::string("simulate: ") + e.what()});
    }

    const SimResult r = run(sc);
    SimConfig quiet = sc;
    quiet.record_traces = false;
    const StabilityReport st = measure_stability(quiet, s.stability_window);

    const double mu_p = primary_service_rate(pol.scheme, pol.link.p_bar_p_pd);
    double mu_s = 0.0;
    double p_empty = 0.0;
    if (s.lambda_p < mu_p) {
        const ServiceRates rates = service_rates(pol.scheme, pol.link, s.lambda_p);
        mu_s = rates.mu_s;
        p_empty = rates.p_empty;
    }

    json doc = header("simulate", cfg);
    doc["mode"] = to_string(s.mode);
    doc["slots"] = s.slots;
    doc["lambda_p"] = s.lambda_p;
    doc["lambda_s"] = s.lambda_s;
    doc["feedback_error"] = s.feedback_error;
    json policy = scheme_json(pol.scheme);
    policy["optimized"] = pol.optimized;
    policy["fallback_silent"] = pol.fallback_silent;
    doc["policy"] = policy;
    doc["link"] = {{"p_bar_p_pd", pol.link.p_bar_p_pd}, {"p_bar_s_sd", pol.link.p_bar_s_sd}};
    doc["rates"] = {
        {"mu_p", rate_comparison(r.empirical_mu_p, mu_p)},
        {"mu_s", rate_comparison(r.empirical_mu_s, mu_s)},
        {"p_empty", {{"empirical", r.empirical_p_empty}, {"analytic", p_empty}}},
    };
    doc["mean_primary_delay"] = {{"empirical", r.mean_primary_delay},
                                 {"analytic", number_or_null(primary_delay(s.lambda_p, mu_p))}};
    doc["counts"] = {{"primary_arrivals", r.primary_arrivals},
                     {"primary_departures", r.primary_departures},
                     {"secondary_arrivals", r.secondary_arrivals},
                     {"secondary_departures", r.secondary_departures},
                     {"final_qp", r.final_qp},
                     {"final_qs", r.final_qs},
                     {"acks_heard", r.feedback_counts.acks_heard},
                     {"feedback_heard", r.feedback_counts.feedback_heard}};
    doc["stability"] = {{"window", s.stability_window},
                        {"primary", drift_json(st.primary)},
                        {"secondary", drift_json(st.secondary)},
                        {"analytic", {{"primary", st.analytic.primary}, {"secondary", st.analytic.secondary}}},
                        {"stable", st.stable}};
    if (s.record_traces && r.queue_traces) {
        auto out = open_output(dir / "trace.csv");
        write_trace_csv(out, *r.queue_traces);
        doc["trace_file"] = "trace.csv";
    } else {
        doc["trace_file"] = nullptr;
    }
    write_json(dir / "simulate.json", doc);
    return doc;
}

json cmd_estimate(const RunConfig& cfg)
{
    const EstimateSection& e = cfg.estimate;
    const fs::path dir = prepare_output(cfg);

    LearningConfig lc;
    lc.lp_slots = e.lp_slots;
    lc.rp_slots = e.rp_slots;
    lc.seed = cfg.seed;
    lc.lambda_p = e.lambda_p;
    lc.lambda_s = e.lambda_s;
    lc.feedback_error = e.feedback_error;
    lc.scenario = cfg.scenario();
    lc.request = base_request(cfg, e.variant, e.lambda_p);
    lc.mode = e.mode;
    lc.use_margin = e.use_margin;
    lc.error_bound = e.error_bound;
    const LearningReport rep = learning_then_regular(lc);

    json doc = header("estimate", cfg);
    doc["mode"] = to_string(e.mode);
    doc["lambda_p_true"] = e.lambda_p;
    doc["log"] = {{"slots", rep.log.slots},
                  {"feedback_heard", rep.log.feedback_heard},
                  {"acks_heard", rep.log.acks_heard},
                  {"p_e_assumed", rep.log.p_e_assumed}};
    const EstimationReport& est = rep.estimation;
    doc["estimation"] = {{"lambda_p_est", est.lambda_p_est},
                         {"lambda_p_std_error", est.lambda_p_std_error},
                         {"p_bar_p_pd_est", optional_or_null(est.p_bar_p_pd_est)},
                         {"mu_p_est", optional_or_null(est.mu_p_est)},
                         {"p_nonempty_est", est.p_nonempty_est},
                         {"recommended_mu_pe", est.recommended_mu_pe},
                         {"link_quality_available", est.link_quality_available()}};
    doc["flags"] = json::array();
    if (!est.link_quality_available()) {
        doc["flags"].push_back("no_feedback_heard");
    }
    if (rep.fallback_no_access) {
        doc["flags"].push_back("fallback_no_access");
    }
    doc["margin_used"] = rep.margin_used;
    json policy = scheme_json(rep.policy.best);
    policy["feasible"] = rep.policy.feasible;
    policy["lambda_s_max"] = rep.policy.lambda_s_max;
    policy["delay_bound"] = optional_or_null(rep.policy.delay_bound);
    doc["policy"] = policy;
    doc["regular"] = {{"slots", e.rp_slots},
                      {"secondary_throughput", rep.regular.secondary_throughput},
                      {"primary_throughput", rep.regular.primary_throughput},
                      {"primary_drift", rep.regular.primary_drift},
                      {"final_qp", rep.regular.final_qp},
                      {"primary_stable", rep.regular.primary_stable}};
    write_json(dir / "estimate.json", doc);
    return doc;
}

json cmd_sweep(const RunConfig& cfg)
{
    if (!cfg.phy) {
        throw ConfigError({"sweep: needs a scenario.phy block (sensing time must be a free variable)"});
    }
    std::vector<double> lambdas = cfg.lambda_p_grid;
    if (lambdas.empty() && cfg.lambda_p) {
        lambdas.push_back(*cfg.lambda_p);
    }
    if (lambdas.empty()) {
        throw ConfigError({"sweep: lambda_p_grid or lambda_p is required"});
    }
    const std::vector<double> targets =
        cfg.sweep.targets.empty() ? std::vector<double>{cfg.sensing.value} : cfg.sweep.targets;
    const auto& taus = cfg.tau_grid;

    // Checked in long double so the product cannot wrap.
    const long double cells = static_cast<long double>(targets.size()) * taus.size() * lambdas.size() *
                              cfg.schemes.size();
    if (cells > static_cast<long double>(kMaxSweepCells)) {
        std::ostringstream msg;
        msg << "sweep: " << targets.size() << " targets x " << taus.size() << " tau x " << lambdas.size()
            << " lambda_p x " << cfg.schemes.size() << " schemes = " << static_cast<double>(cells)
            << " cells exceeds the limit of " << kMaxSweepCells << "; shrink sweep.targets, tau_grid or lambda_p_grid";
        throw ConfigError({msg.str()});
    }

    const fs::path dir = prepare_output(cfg);
    auto csv = open_output(dir / "sweep.csv");
    csv << "# crsa-sweep v" << kSchemaVersion << '\n';
    csv << "target_kind,target_value,tau,lambda_p,scheme,lambda_s,a_s,b_s,p_fa,p_md,p_bar_s_sd,feasible\n";

    const bool has_s2 = std::count(cfg.schemes.begin(), cfg.schemes.end(), Variant::S2) > 0;
    const bool has_s0 = std::count(cfg.schemes.begin(), cfg.schemes.end(), Variant::S0) > 0;
    const std::size_t nl = lambdas.size();
    constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

    json short_beats_long = {{"count", 0}, {"example", nullptr}};
    json silent_beats_long = {{"count", 0}, {"example", nullptr}};
    std::uint64_t rows = 0;

    for (double target : targets) {
        SensingTarget st = cfg.sensing;
        st.value = target;
        const Scenario full = Scenario::from_phy(*cfg.phy, st, taus);
        std::vector<double> s2_first(nl, kNaN);
        std::vector<double> s2_last(nl, kNaN);
        std::vector<double> s0(nl, kNaN);

        for (std::size_t ti = 0; ti < full.candidates.size(); ++ti) {
            const TauCandidate& cand = full.candidates[ti];
            Scenario cell = full;
            cell.candidates = {cand};
            for (std::size_t li = 0; li < nl; ++li) {
                const double lp = lambdas[li];
                for (Variant v : cfg.schemes) {
                    OptimizationResult r;
                    if (lp + cfg.margin <= 1.0) {
                        r = optimize_with_margin(base_request(cfg, v, lp), cell);
                    }
                    const double ls = r.feasible ? r.lambda_s_max : 0.0;
                    const double link = v == Variant::S0 ? full.p_bar_s_sd_unsensed : cand.p_bar_s_sd;
                    csv << to_string(st.kind) << ',' << format_double(target) << ',' << format_double(cand.sensing.tau)
                        << ',' << format_double(lp) << ',' << to_string(v) << ',' << format_double(ls) << ','
                        << format_double(r.feasible ? r.best.a_s : 0.0) << ','
                        << format_double(r.feasible ? r.best.b_s : 0.0) << ',' << format_double(cand.sensing.p_fa)
                        << ',' << format_double(cand.sensing.p_md) << ',' << format_double(link) << ','
                        << (r.feasible ? 1 : 0) << '\n';
                    ++rows;
                    if (v == Variant::S2 && ti == 0) s2_first[li] = ls;
                    if (v == Variant::S2 && ti + 1 == full.candidates.size()) s2_last[li] = ls;
                    if (v == Variant::S0 && ti == 0) s0[li] = ls;
                }
            }
        }

        for (std::size_t li = 0; li < nl; ++li) {
            if (has_s2 && s2_first[li] > s2_last[li]) {
                short_beats_long["count"] = short_beats_long["count"].get<int>() + 1;
                if (short_beats_long["example"].is_null()) {
                    short_beats_long["example"] = {{"target_value", target},
                                                   {"lambda_p", lambdas[li]},
                                                   {"tau_short", taus.front()},
                                                   {"tau_long", taus.back()},
                                                   {"lambda_s_short", s2_first[li]},
                                                   {"lambda_s_long", s2_last[li]}};
                }
            }
            if (has_s2 && has_s0 && s0[li] > s2_last[li]) {
                silent_beats_long["count"] = silent_beats_long["count"].get<int>() + 1;
                if (silent_beats_long["example"].is_null()) {
                    const SensingPoint& p = full.candidates.back().sensing;
                    silent_beats_long["example"] = {{"target_value", target},
                                                    {"lambda_p", lambdas[li]},
                                                    {"tau_long", taus.back()},
                                                    {"p_fa", p.p_fa},
                                                    {"p_md", p.p_md},
                                                    {"lambda_s_s0", s0[li]},
                                                    {"lambda_s_s2_long", s2_last[li]}};
                }
            }
        }
    }
    csv.close();

    json doc = header("sweep", cfg);
    doc["target_kind"] = to_string(cfg.sensing.kind);
    doc["cells"] = rows;
    doc["file"] = "sweep.csv";
    doc["crossovers"] = {{"s2_short_tau_beats_long_tau", short_beats_long},
                         {"s0_beats_s2_long_tau", silent_beats_long}};
    write_json(dir / "sweep_summary.json", doc);
    return doc;
}

json dispatch(Command cmd, const RunConfig& cfg)
{
    switch (cmd) {
    case Command::Region: return cmd_region(cfg);
    case Command::Optimize: return cmd_optimize(cfg);
    case Command::Simulate: return cmd_simulate(cfg);
    case Command::Estimate: return cmd_estimate(cfg);
    case Command::Sweep: return cmd_sweep(cfg);
    }
    throw DomainError("unknown command");
}

}  // namespace crsa::cli
