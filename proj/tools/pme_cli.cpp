#include "pme/harness.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Moving-mesh solver for the porous medium equation"};
    app.require_subcommand(1);

    pme::CliRequest req;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"run", "Run one simulation and write diag.csv, summary.json and snapshots"},
        {"converge", "Barenblatt convergence study over [converge] levels"},
        {"mass-table", "Mass drift and |M - 1| over [converge] levels"},
        {"waiting-time", "Run with every step recorded and report the waiting-time estimate"},
        {"mesh-gen", "Write the initial mesh and snapshot"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config,-c", req.config, "Experiment config file")->required();
        sub->add_option("--out,-o", req.out, "Output directory (overrides output.dir)");
        sub->add_flag("--strict", req.strict, "Stop on the first negative density");
        sub->add_option("--quad-order", req.quad_order, "Gauss points per cell (1D) or triangle degree (2D)")
            ->check(CLI::PositiveNumber);
        sub->callback([&req, name = name]() { req.command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : pme::exit_config;
    }
    return pme::dispatch(req, std::cout, std::cerr);
}
