#include <string>

#include <CLI11.hpp>

#include "magkit/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"mag-kit: permutation-orbit transport fields, particle systems and functionals"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    CLI::App* run = app.add_subcommand("run", "run an experiment from a JSON config");
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--out", out_dir, "output directory (overrides output.dir)");

    std::string suite = "all";
    CLI::App* check = app.add_subcommand("check", "run an identity-check suite");
    check->add_option("--suite", suite, "geometry|fields|dynamics|entropic|branching|all");

    std::string run_dir, what;
    CLI::App* plot = app.add_subcommand("plot", "render SVG plots from a run directory");
    plot->add_option("--run", run_dir, "run directory")->required();
    plot->add_option("--what", what, "trajectory|cloud-film|error-curves")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return magkit::run_config(config_path, out_dir);
    if (check->parsed()) return magkit::run_check(suite);
    return magkit::run_plot(run_dir, what);
}
