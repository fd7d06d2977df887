#pragma once

#include <vector>

#include "panelcp/estimate.hpp"

namespace panelcp {

struct WaldResult {
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
    int regime = 0;          // tests regime `regime` against `regime + 1` (0-based)
    std::vector<int> basis;  // regressor columns entering the test
};

// Upper tail P(chi2_df > x).
double chi_square_upper_tail(double x, int df);

// H0: R coef = 0, with cov scaled as in FEEstimate (Var(coef) = cov / N).
// W = N (R b)' (R cov R')^-1 (R b).
WaldResult wald_linear(const Vector& coef, const Matrix& cov, const Matrix& restriction, int n_individuals);

// H0: beta_j = beta_{j+1} on the columns identified in both regimes.
WaldResult wald_slope_change(const FEEstimate& fe, int regime);

// Same hypothesis on the full-sample estimator; for columns constant over the
// sample the contrast coefficients carry the change.
WaldResult wald_slope_change(const FFEEstimate& ffe, int regime);

// H0: Q_j = Q_{j+1}, using per-individual time-averaged x x' (lower triangle)
// and their cross-sectional covariance. Entries whose per-individual
// difference is identically zero (e.g. intercept squared) are dropped.
WaldResult wald_gram_change(const PanelData& panel, const Partition& part, int regime);

struct BonferroniReport {
    double family_level = 0.05;
    double per_test_level = 0.05;
    int n_hypotheses = 1;
    std::vector<WaldResult> tests;
    std::vector<bool> reject;
};

// Each test runs at alpha / n_hypotheses; n_hypotheses < 0 means tests.size().
BonferroniReport bonferroni_adjust(std::vector<WaldResult> tests, double alpha, int n_hypotheses = -1);

}  // namespace panelcp
