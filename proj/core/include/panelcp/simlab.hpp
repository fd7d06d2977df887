#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "panelcp/estimate.hpp"
#include "panelcp/panel.hpp"
#include "panelcp/select.hpp"

namespace panelcp {

// y_it = x_it' beta_j + c_i + eps_it, x_itk = loading * c_i + e_itk,
// e_itk = w * g_ik + (1 - w) * u_itk with g, u ~ N(0, z_variance),
// c ~ N(0, sigma_c2), eps ~ N(0, sigma_eps2) (optionally AR(1) over t).
struct DGPConfig {
    int n_individuals = 500;
    int n_periods = 20;
    std::vector<int> breaks;
    std::vector<Vector> beta;  // one vector per regime, length n_regressors (+1 with intercept)
    int n_regressors = 1;
    bool intercept = false;
    double sigma_c2 = 0.25;
    double sigma_eps2 = 0.25;
    double z_variance = 0.5;
    double loading = 1.4142135623730951;  // sqrt(2)
    double mixing_w = 0.0;
    double error_ar = 0.0;  // AR(1) coefficient of eps over t, stationary variance sigma_eps2
    int replications = 1000;
    std::uint64_t seed = 20180810;

    int n_columns() const noexcept { return n_regressors + (intercept ? 1 : 0); }
    Partition partition() const { return Partition(breaks, n_periods); }
    void validate() const;  // throws InvalidArgument

    // Slopes alternating -magnitude, +magnitude, ... across regimes.
    static std::vector<Vector> alternating_beta(int regimes, int columns, double magnitude = 0.1);
    // floor(T/3) or ceil(T/3); the simulation presets use floor.
    static int third(int n_periods, bool ceiling = false);

    static DGPConfig no_break(int n, int t);
    static DGPConfig single_break(int n, int t, int at);
    static DGPConfig two_breaks(int n, int t, bool ceiling = false);
    // p = 15 endogenous regressors sharing c_i, N = 216, T = 18, one break at 14;
    // every slope moves by `size` at the break.
    static DGPConfig break_size(double size);
};

struct SimulatedPanel {
    PanelData panel;
    Vector effects;  // c_i
    std::vector<Vector> beta;
};

// Deterministic in (cfg.seed, rep_index); replications use independent streams.
SimulatedPanel generate_panel(const DGPConfig& cfg, int rep_index);

enum class Experiment {
    Locations,      // known-m break location histograms
    Slopes,         // OLS / FE / FFE at the true partition
    Selection,      // distribution of m_hat per penalty
    MixingSweep,    // m_hat distribution over cross-sectional mixing weights
    BreakSizeSweep  // m_hat and conditional locations over break sizes
};

Experiment parse_experiment(std::string_view name);
std::string_view to_string(Experiment kind) noexcept;

struct ExperimentOptions {
    Experiment kind = Experiment::Slopes;
    std::vector<Penalty> penalties{Penalty::HQIC, Penalty::BIC};
    int m_max = -1;               // selection runs; -1 means T - 1
    std::optional<int> forced_m;  // location runs; default is the true m
    std::vector<double> sweep_values;
    VcovKind vcov = VcovKind::Plugin;
    double alpha = 0.05;
    int threads = 0;  // 0: hardware concurrency
};

struct EstimatorSummary {
    int count = 0;
    double truth = 0.0;
    double mean = 0.0;
    double bias = 0.0;
    double se = 0.0;  // mean of estimated SEs; NaN when none were supplied
    double sd = 0.0;  // empirical SD of the estimates
    double mse = 0.0;
};

// bias = mean - truth, se = mean(ses), mse = bias^2 + mean((est - mean)^2).
EstimatorSummary summarize(std::span<const double> estimates, std::span<const double> ses, double truth);

struct SlopeRow {
    std::string estimator;  // "OLS", "FE", "FFE"
    int regime = 0;
    int column = 0;
    EstimatorSummary summary;
};

struct SelectionCounts {
    Penalty penalty = Penalty::HQIC;
    std::vector<int> counts;  // counts[m]
};

struct SweepPoint {
    double value = 0.0;
    std::vector<SelectionCounts> selection;
    // Break locations (first penalty) for replications with m_hat equal to the true m.
    std::vector<std::vector<int>> location_counts;  // [break][t - 1]
    int conditioned = 0;
};

struct MCSummary {
    Experiment kind = Experiment::Slopes;
    int replications = 0;
    int true_m = 0;

    // Locations
    int m_used = 0;
    std::vector<std::vector<int>> location_counts;  // [break index][t - 1], t = 1..T
    int exact_hits = 0;                             // estimated partition equals the truth (m_used == true m)
    int contains_truth = 0;                         // every true break is among the estimates

    // Slopes
    std::vector<SlopeRow> slopes;
    // Rejections of H0: beta_j = beta_{j+1} (FE Wald at alpha), per adjacent pair.
    std::vector<int> wald_rejections;

    // Selection
    std::vector<SelectionCounts> selection;

    // Sweeps
    std::vector<SweepPoint> sweep;
};

MCSummary run_monte_carlo(const DGPConfig& cfg, const ExperimentOptions& opt);

}  // namespace panelcp
