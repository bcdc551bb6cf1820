#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "crsa/cli/commands.hpp"
#include "crsa/cli/config.hpp"
#include "crsa/errors.hpp"

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<std::string> mode;
    bool quiet = false;
};

void add_flags(CLI::App& sub, Flags& f)
{
    sub.add_option("-c,--config", f.config, "JSON run configuration")->required();
    sub.add_option("--seed", f.seed, "override the config seed");
    sub.add_option("-o,--output-dir", f.output_dir, "override the config output_dir");
    sub.add_option("--mode", f.mode, "simulate: original|dominant; estimate: literal|unbiased");
    sub.add_flag("-q,--quiet", f.quiet, "do not echo the result document");
}

}  // namespace

int main(int argc, char** argv)
{
    using namespace crsa::cli;

    CLI::App app{"Cognitive-radio spectrum access: stability regions, optimization, simulation"};
    app.require_subcommand(1);
    Flags flags;
    for (Command c : {Command::Region, Command::Optimize, Command::Simulate, Command::Estimate, Command::Sweep}) {
        add_flags(*app.add_subcommand(std::string(to_string(c))), flags);
    }
    app.get_subcommand("region")->description("stability-region boundaries per scheme plus their union");
    app.get_subcommand("optimize")->description("optimal access probabilities and sensing time at lambda_p");
    app.get_subcommand("simulate")->description("slotted queue simulation against the closed forms");
    app.get_subcommand("estimate")->description("learning phase, estimation, then the regular phase");
    app.get_subcommand("sweep")->description("long-format grid over sensing target, tau and lambda_p");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    const Command cmd = *command_from_string(app.get_subcommands().front()->get_name());
    try {
        RunConfig cfg = load_config(flags.config);
        Overrides o;
        o.seed = flags.seed;
        if (flags.output_dir) o.output_dir = *flags.output_dir;
        o.mode = flags.mode;
        apply_overrides(cfg, cmd, o);
        const auto doc = dispatch(cmd, cfg);
        if (!flags.quiet) {
            std::cout << doc.dump(2) << '\n';
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "crsa: " << e.what() << '\n';
        return kExitConfig;
    } catch (const crsa::DomainError& e) {
        std::cerr << "crsa: invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "crsa: internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}
