#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "panelcp/estimate.hpp"
#include "panelcp/select.hpp"
#include "panelcp/simlab.hpp"

namespace panelcp::cli {

struct SimulateOptions {
    Experiment experiment = Experiment::Slopes;
    std::optional<int> n;  // preset default when unset
    std::optional<int> t;
    std::optional<std::vector<int>> breaks;  // default: floor(T/3), floor(2T/3)
    int regressors = 1;
    int replications = 1000;
    std::vector<double> sweep_values;
    std::optional<int> forced_m;
    double mixing_w = 0.0;
    int threads = 0;
    std::optional<std::filesystem::path> export_panel;  // write replication 0 as CSV
};

struct RunConfig {
    std::filesystem::path input;
    ColumnRoles roles;
    Penalty penalty = Penalty::HQIC;
    int m_max = -1;
    std::optional<int> fixed_m;
    VcovKind vcov = VcovKind::Cluster;
    double alpha = 0.05;
    std::filesystem::path out_dir = ".";
    std::uint64_t seed = 20180810;
    SimulateOptions simulate;

    void validate(bool needs_input) const;  // throws InvalidArgument
};

// Each command writes its CSV reports and run.log into cfg.out_dir and a short
// summary to `log`. Errors propagate as panelcp::Error.
void cmd_detect(const RunConfig& cfg, std::ostream& log);
void cmd_estimate(const RunConfig& cfg, std::ostream& log);
void cmd_test(const RunConfig& cfg, std::ostream& log);
void cmd_simulate(const RunConfig& cfg, std::ostream& log);

// DGP used by cmd_simulate for the given options.
DGPConfig simulation_config(const RunConfig& cfg);

}  // namespace panelcp::cli
