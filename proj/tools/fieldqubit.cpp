#include "fieldqubit/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Fluxonium circuit, field and noise modelling toolkit"};
    app.require_subcommand(1);

    std::string run_config;
    auto* run = app.add_subcommand("run", "Run the task described by a JSON config");
    run->add_option("config", run_config, "Path to the config file")->required();

    std::string gen_config;
    auto* gen = app.add_subcommand("gen", "Write a synthetic dataset and a matching fit config");
    gen->add_option("config", gen_config, "Path to the config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : fieldqubit::cli::exit_input;
    }

    using fieldqubit::cli::Mode;
    if (run->parsed()) return fieldqubit::cli::execute(Mode::run, run_config, std::cout, std::cerr);
    return fieldqubit::cli::execute(Mode::generate, gen_config, std::cout, std::cerr);
}
