#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "panelcp/error.hpp"

using namespace panelcp;
using namespace panelcp::cli;

namespace {

void add_common(CLI::App* cmd, RunConfig& cfg, std::string& penalty, std::string& vcov, std::optional<int>& fixed_m) {
    cmd->add_option("--penalty", penalty, "information criterion")
        ->check(CLI::IsMember({"hqic", "bic", "aic"}, CLI::ignore_case));
    cmd->add_option("--m-max", cfg.m_max, "largest number of breaks considered (default T-1)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--m", fixed_m, "use this number of breaks instead of the IC choice")->check(CLI::NonNegativeNumber);
    cmd->add_option("--vcov", vcov, "covariance estimator")->check(CLI::IsMember({"plugin", "cluster"}, CLI::ignore_case));
    cmd->add_option("--alpha", cfg.alpha, "family-wise test level")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--seed", cfg.seed, "random seed (simulate)");
    cmd->add_option("--out-dir", cfg.out_dir, "directory for reports and run.log");
    cmd->add_flag("--intercept", cfg.roles.intercept, "prepend a constant regressor");
}

void add_input(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--input", cfg.input, "long-format panel CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--id-col", cfg.roles.id, "individual id column");
    cmd->add_option("--time-col", cfg.roles.time, "time column");
    cmd->add_option("--y-col", cfg.roles.outcome, "outcome column");
    cmd->add_option("--x-cols", cfg.roles.regressors, "regressor columns (default: all others)")->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Common change points in short panel regressions"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string penalty = "hqic";
    std::string vcov = "cluster";
    std::optional<int> fixed_m;

    auto* detect = app.add_subcommand("detect", "estimate the number and dates of breaks");
    auto* estimate = app.add_subcommand("estimate", "FE and FFE slopes per regime");
    auto* test = app.add_subcommand("test", "Wald tests for slope and second-moment changes");
    for (auto* cmd : {detect, estimate, test}) {
        add_input(cmd, cfg);
        add_common(cmd, cfg, penalty, vcov, fixed_m);
    }

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo experiments");
    add_common(simulate, cfg, penalty, vcov, fixed_m);
    SimulateOptions& so = cfg.simulate;
    std::string experiment = "slopes";
    std::optional<int> n, t;
    std::vector<int> breaks;
    bool no_breaks = false;
    std::string export_path;
    simulate->add_option("--experiment", experiment, "locations | slopes | selection | mixing | breaksize")
        ->check(CLI::IsMember({"locations", "slopes", "selection", "mixing", "breaksize"}, CLI::ignore_case));
    simulate->add_option("--n", n, "individuals")->check(CLI::PositiveNumber);
    simulate->add_option("--t", t, "periods")->check(CLI::PositiveNumber);
    auto* breaks_opt = simulate->add_option("--breaks", breaks, "true break dates, comma separated")->delimiter(',');
    simulate->add_flag("--no-breaks", no_breaks, "simulate without breaks")->excludes(breaks_opt);
    simulate->add_option("--p", so.regressors, "regressors")->check(CLI::PositiveNumber);
    simulate->add_option("--reps", so.replications, "replications")->check(CLI::PositiveNumber);
    simulate->add_option("--sweep", so.sweep_values, "sweep values (mixing weights or break sizes)")->delimiter(',');
    simulate->add_option("--mixing", so.mixing_w, "cross-sectional mixing weight")->check(CLI::Range(0.0, 1.0));
    simulate->add_option("--threads", so.threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    simulate->add_option("--export-panel", export_path, "write replication 0 as CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        cfg.penalty = parse_penalty(penalty);
        cfg.vcov = parse_vcov(vcov);
        cfg.fixed_m = fixed_m;
        so.experiment = parse_experiment(experiment);
        so.n = n;
        so.t = t;
        if (no_breaks)
            so.breaks = std::vector<int>{};
        else if (!breaks.empty())
            so.breaks = breaks;
        // --m doubles as the forced break count of location runs.
        so.forced_m = fixed_m;
        if (!export_path.empty()) so.export_panel = export_path;

        if (*detect) cmd_detect(cfg, std::cout);
        if (*estimate) cmd_estimate(cfg, std::cout);
        if (*test) cmd_test(cfg, std::cout);
        if (*simulate) cmd_simulate(cfg, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
