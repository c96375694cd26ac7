#include <CLI11.hpp>
#include <iostream>

#include "nsopt/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"configuration-driven experiment runner for nonsmooth optimization"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "run one experiment config");
    run->add_option("config", config_path, "config file")->required();

    std::vector<std::string> compare_paths;
    auto* cmp = app.add_subcommand("compare", "compare several configs on one problem");
    cmp->add_option("configs", compare_paths, "config files")->required();

    auto* cat = app.add_subcommand("catalog", "list the problem catalog");

    std::string validate_path;
    auto* val = app.add_subcommand("validate", "check a config's schedule conditions");
    val->add_option("config", validate_path, "config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            nsopt::Config cfg = nsopt::Config::parse_file(config_path);
            return nsopt::run_experiment(cfg, std::cout).exit_code;
        }
        if (*cmp) {
            std::vector<nsopt::Config> cfgs;
            for (const std::string& p : compare_paths)
                cfgs.push_back(nsopt::Config::parse_file(p));
            return nsopt::compare_experiments(cfgs, std::cout).exit_code;
        }
        if (*cat) {
            nsopt::print_catalog(std::cout);
            return 0;
        }
        if (*val) {
            nsopt::Config cfg = nsopt::Config::parse_file(validate_path);
            return nsopt::validate_config(cfg, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
