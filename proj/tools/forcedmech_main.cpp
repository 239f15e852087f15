#include "forcedmech/cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"symbolic and numerical toolkit for forced mechanical systems"};
    app.require_subcommand(1);
    // --h is a real option below, so only the long spelling of help is kept.
    app.set_help_flag("--help", "print help and exit");

    struct Raw {
        std::string system;
        std::string out;
        std::uint64_t seed = 0;
        double h = 0;
        double T = 0;
        int degree = 1;
    } raw;

    auto add_common = [&](CLI::App* sub) {
        sub->set_help_flag("--help", "print help and exit");
        sub->add_option("--system", raw.system, "system description file")->required();
        sub->add_option("--out", raw.out, "write the primary output to this file");
        sub->add_option("--seed", raw.seed, "seed for probabilistic identity checks");
    };
    auto add_time = [&](CLI::App* sub) {
        sub->add_option("--h", raw.h, "step size, overriding the system file");
        sub->add_option("--T", raw.T, "final time, overriding the system file");
    };

    CLI::App* derive = app.add_subcommand("derive", "print the forced equations of motion");
    add_common(derive);
    CLI::App* check = app.add_subcommand("check", "classify the candidate symmetry fields");
    add_common(check);
    CLI::App* simulate = app.add_subcommand("simulate", "integrate and emit a CSV trajectory");
    add_common(simulate);
    add_time(simulate);
    CLI::App* reduce = app.add_subcommand("reduce", "reduce by a cyclic coordinate and compare");
    add_common(reduce);
    add_time(reduce);
    CLI::App* find = app.add_subcommand("find", "search for polynomial symmetry fields");
    add_common(find);
    find->add_option("--degree", raw.degree, "total degree of the polynomial ansatz");

    CLI11_PARSE(app, argc, argv);

    CLI::App* sub = app.get_subcommands().front();
    auto given = [&](const char* name) {
        const CLI::Option* o = sub->get_option_no_throw(name);
        return o && o->count() > 0;
    };
    fm::cli::Options options;
    options.command = sub->get_name();
    options.system_path = raw.system;
    if (given("--out")) options.out_path = raw.out;
    if (given("--seed")) options.seed = raw.seed;
    if (given("--h")) options.h = raw.h;
    if (given("--T")) options.T = raw.T;
    options.degree = raw.degree;

    return fm::cli::run(options, std::cout, std::cerr);
}
