#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "panelcp/panel.hpp"

namespace panelcp {

enum class VcovKind { Plugin, Cluster };

VcovKind parse_vcov(std::string_view name);  // "plugin" | "cluster"
std::string_view to_string(VcovKind kind) noexcept;

// Pooled OLS per regime. Under individual effects correlated with x these
// converge to the pseudo-true coefficients, not to beta, so no SEs are attached.
struct RegimeOLS {
    std::vector<Vector> gamma;
    std::vector<bool> full_rank;
};

RegimeOLS regime_ols(const GramTable& gram, const Partition& part);

// Sub-sample (within-regime) fixed effects.
//
// Coefficients are stacked over the estimable regimes (two or more periods)
// and, inside each regime, over the columns that vary within (i, regime).
// cov is the asymptotic covariance of sqrt(N) (beta_hat - beta), so
// se = sqrt(diag(cov) / N). With VcovKind::Cluster the cross-regime blocks
// are estimated; the plug-in covariance is block diagonal.
struct FEEstimate {
    Partition partition = Partition::none(2);
    int n_individuals = 0;
    int n_regressors = 0;
    VcovKind vcov_kind = VcovKind::Plugin;

    std::vector<int> regimes;     // estimable regimes, ascending
    std::vector<int> singletons;  // omitted one-period regimes
    // identified[j][c] for every regime j (all false for singletons)
    std::vector<std::vector<bool>> identified;
    std::vector<std::vector<int>> columns;  // aligned with regimes
    std::vector<Vector> beta;               // aligned with regimes
    std::vector<Eigen::Index> offset;       // start of each regime in the stack

    Vector coef;  // stacked
    Matrix cov;
    double sigma2 = 0.0;
    Vector residuals;  // panel layout, zero on singleton regimes
    std::vector<std::string> warnings;

    Vector se() const;
    // Position of regime j inside `regimes`, if estimable.
    std::optional<std::size_t> slot(int regime) const;
    std::optional<Eigen::Index> coef_index(int regime, int column) const;
};

FEEstimate fe_estimate(const PanelData& panel, const Partition& part, VcovKind kind = VcovKind::Plugin);

// Full-sample fixed effects on the block-expanded regressor.
//
// Basis: one coefficient per (regime, column), except that for a column
// constant over the full sample the regime-0 block is dropped; the remaining
// blocks of that column then estimate beta_j - beta_0 (a contrast).
struct FFECoef {
    int regime = 0;
    int column = 0;
    bool contrast = false;
};

struct FFEContrast {
    int column = 0;
    int regime = 0;  // estimates beta_regime - beta_0
    double value = 0.0;
    double se = 0.0;
};

struct FFEEstimate {
    Partition partition = Partition::none(2);
    int n_individuals = 0;
    int n_regressors = 0;
    VcovKind vcov_kind = VcovKind::Plugin;

    std::vector<FFECoef> basis;
    Vector coef;
    Matrix cov;  // same scaling as FEEstimate::cov
    int rank_deficiency = 0;
    std::vector<int> time_invariant_columns;
    std::vector<FFEContrast> contrast_table;
    double sigma2 = 0.0;
    Vector residuals;  // y* - x_tilde' beta, panel layout
    // "closed-form" when the plug-in uses the homoskedastic, serially
    // uncorrelated closed form; "ols" for the exact homoskedastic OLS fallback.
    std::string plugin_form;
    std::vector<std::string> warnings;

    Vector se() const;
    std::optional<Eigen::Index> coef_index(int regime, int column) const;
};

FFEEstimate ffe_estimate(const PanelData& panel, const Partition& part, VcovKind kind = VcovKind::Plugin);

// SSR / (sum_{j in S} N (dT_j - 1) - n_coefficients). Residuals in panel layout.
double sigma2_hat(const Vector& residuals, const Partition& part, int n_individuals, int n_coefficients);

// Covariances for the stacked coefficients of fe_estimate / ffe_estimate.
Matrix fe_vcov_plugin(const PanelData& panel, const Partition& part, double sigma2);
Matrix fe_vcov_cluster(const PanelData& panel, const Partition& part, const Vector& residuals);
Matrix ffe_vcov_plugin(const PanelData& panel, const Partition& part, double sigma2);
Matrix ffe_vcov_cluster(const PanelData& panel, const Partition& part, const Vector& residuals);

// Variance multipliers of sigma^2 Q_j^-1 for i.i.d. errors and serially
// uncorrelated regressors: FE 1/(dT - 1), FFE (T^2 - 3T + 1) T^2 / ((T - 1)^4 dT).
struct VarianceFactors {
    double fe = 0.0;
    double ffe = 0.0;
};

VarianceFactors closed_form_variance_factors(int n_periods, int regime_length);

}  // namespace panelcp
