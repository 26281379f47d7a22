#include "droplet/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Thermal Coulomb gas droplet solver"};
    app.require_subcommand(1);

    std::string config, out, dump;
    int jobs = 0;
    for (const char* name : {"equilibrium", "thermal", "radial", "expansion", "verify"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "JSON run configuration")->required();
        sub->add_option("--out", out, "output directory (overrides the config)");
        sub->add_option("--jobs", jobs, "concurrent solves")->check(CLI::PositiveNumber);
        sub->add_option("--dump-fields", dump, "field dumps")->check(CLI::IsMember({"csv", "bin", "none"}));
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : droplet::cli::exit_config;
    }

    droplet::cli::Overrides ov;
    if (!out.empty()) ov.out = out;
    if (jobs > 0) ov.jobs = jobs;
    if (!dump.empty()) ov.dump = droplet::parse_dump_format(dump);
    return droplet::cli::run(app.get_subcommands().front()->get_name(), config, ov);
}
