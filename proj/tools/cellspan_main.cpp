#include "cellspan/cli.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv) {
    CLI::App app{"cellspan: layered-cell electrochemical simulation and lifespan bounds"};
    app.require_subcommand(1);

    cellspan::RunOptions run_options;
    auto* run = app.add_subcommand("run", "advance the coupled system and write field CSVs");
    run->add_option("--config", run_options.config_path, "config file")->required();
    run->add_option("--out", run_options.out_dir, "output directory (overrides [output] dir)");
    run->add_flag("--tau-continuation", run_options.tau_continuation,
                  "repeat the run over the [regularization] tau_schedule");
    run->add_flag("--verification-mode", run_options.verification_mode,
                  "use the unregularized kinetics");

    std::string lifespan_config, lifespan_out;
    auto* lifespan = app.add_subcommand("lifespan", "evaluate the a-priori lifespan bound");
    lifespan->add_option("--config", lifespan_config, "config file")->required();
    lifespan->add_option("--out", lifespan_out, "output directory");

    cellspan::SweepOptions sweep_options;
    auto* sweep = app.add_subcommand("sweep", "lifespan bound over a parameter axis");
    sweep->add_option("--config", sweep_options.config_path, "config file")->required();
    sweep->add_option("--out", sweep_options.out_dir, "output directory");
    sweep->add_option("--axis", sweep_options.axis, "c | m | alpha0 | q | N | d");
    sweep->add_option("--values", sweep_options.values, "axis values")
        ->required()
        ->delimiter(',');
    sweep->add_option("--jobs", sweep_options.jobs, "concurrent members");

    cellspan::VerifyOptions verify_options;
    auto* verify = app.add_subcommand("verify", "manufactured-solution and invariant checks");
    verify->add_option("--case", verify_options.case_name,
                       "all | mms-spatial | mms-temporal | mms-constant | equilibrium | "
                       "uniqueness | invariants");
    verify->add_option("--out", verify_options.out_dir, "output directory");
    verify->add_option("--config", verify_options.config_path,
                       "config for the invariants case (optional)");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cellspan::cmd_run(run_options);
    if (lifespan->parsed()) return cellspan::cmd_lifespan(lifespan_config, lifespan_out);
    if (sweep->parsed()) return cellspan::cmd_sweep(sweep_options);
    if (verify->parsed()) return cellspan::cmd_verify(verify_options);
    return cellspan::exit_solver_failure;
}
