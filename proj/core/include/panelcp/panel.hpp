#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace panelcp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Periods are 1-based everywhere in the public API (t in [1, T]);
// individuals are 0-based (i in [0, N)). Observations are stored
// period-major: row (t - 1) * N + i.
class PanelData {
public:
    // Validates shape, finiteness, N >= p + 1 and T >= 2; throws InvalidPanel.
    static PanelData create(int n_individuals, int n_periods, Vector y, Matrix x,
                            std::vector<std::string> regressor_names = {},
                            bool has_intercept = false);

    int n_individuals() const noexcept { return n_; }
    int n_periods() const noexcept { return t_; }
    int n_regressors() const noexcept { return static_cast<int>(x_.cols()); }
    Eigen::Index n_obs() const noexcept { return y_.size(); }

    Eigen::Index row(int i, int t) const noexcept {
        return static_cast<Eigen::Index>(t - 1) * n_ + i;
    }
    double y(int i, int t) const { return y_[row(i, t)]; }
    double x(int i, int t, int c) const { return x_(row(i, t), c); }

    const Vector& y_values() const noexcept { return y_; }
    const Matrix& x_values() const noexcept { return x_; }
    const std::vector<std::string>& regressor_names() const noexcept { return names_; }
    bool has_intercept() const noexcept { return has_intercept_; }

    // Same regressors, new outcome. Used for invariance checks and resampling.
    PanelData with_outcome(Vector y) const;

private:
    PanelData() = default;

    int n_ = 0;
    int t_ = 0;
    Vector y_;
    Matrix x_;
    std::vector<std::string> names_;
    bool has_intercept_ = false;
};

struct Regime {
    int first = 1;  // inclusive
    int last = 1;   // inclusive
    int length() const noexcept { return last - first + 1; }
    bool operator==(const Regime&) const = default;
};

class Partition {
public:
    // breaks must be strictly increasing within [1, T - 1].
    Partition(std::vector<int> breaks, int n_periods);
    static Partition none(int n_periods) { return Partition({}, n_periods); }

    const std::vector<int>& breaks() const noexcept { return breaks_; }
    int n_breaks() const noexcept { return static_cast<int>(breaks_.size()); }
    int n_regimes() const noexcept { return n_breaks() + 1; }
    int n_periods() const noexcept { return t_; }

    Regime regime(int j) const;  // j in [0, n_regimes)
    std::vector<Regime> regimes() const;
    int regime_of(int t) const;
    // lambda_j = T_j / T for j = 0..m+1.
    std::vector<double> fractions() const;

    bool operator==(const Partition&) const = default;

private:
    std::vector<int> breaks_;
    int t_ = 0;
};

struct RegimeIndex {
    std::vector<int> estimable;  // regimes with at least two periods
    std::vector<int> singleton;

    static RegimeIndex of(const Partition& part);
    bool is_estimable(int j) const;
};

struct SegmentGram {
    Matrix xx;
    Vector xy;
    double yy = 0.0;
    Eigen::Index n_obs = 0;
};

// Per-period cross products and their prefix sums. Any segment's pooled
// Gram is two lookups and a subtraction.
class GramTable {
public:
    int n_individuals() const noexcept { return n_; }
    int n_periods() const noexcept { return static_cast<int>(yy_.size()); }
    int n_regressors() const noexcept { return p_; }

    const Matrix& period_xx(int t) const { return xx_[static_cast<std::size_t>(t - 1)]; }
    const Vector& period_xy(int t) const { return xy_[static_cast<std::size_t>(t - 1)]; }
    double period_yy(int t) const { return yy_[static_cast<std::size_t>(t - 1)]; }

    SegmentGram segment(int s, int e) const;

private:
    friend GramTable build_gram_table(const PanelData& panel);

    int n_ = 0;
    int p_ = 0;
    std::vector<Matrix> xx_;
    std::vector<Vector> xy_;
    std::vector<double> yy_;
    std::vector<Matrix> cxx_;  // cxx_[t] = sum over periods 1..t
    std::vector<Vector> cxy_;
    std::vector<double> cyy_;
};

GramTable build_gram_table(const PanelData& panel);

// Column treated as constant when every demeaned value is below
// tol * (1 + max |original value|) in absolute value.
inline constexpr double kTimeInvariantTol = 1e-10;

struct WithinDemeaned {
    Matrix x;  // panel layout; rows of singleton regimes are zero
    Vector y;
    // time_invariant[j][c]: column c carries no within-(i, regime j) variation.
    std::vector<std::vector<bool>> time_invariant;
    RegimeIndex regimes;
};

WithinDemeaned demean_within_regime(const PanelData& panel, const Partition& part);

// Full-sample demeaning with the block-expanded regressor. Column j * p + c of
// x_tilde is x_itc * 1{t in regime j} - w_ijc with w_ijc = T^-1 sum_{t in I_j} x_itc.
struct FullSampleDemeaned {
    Matrix x_tilde;
    Vector y_star;
    std::vector<bool> time_invariant;  // per original column, over the full sample
    int n_regimes = 1;
    int n_regressors = 1;

    Eigen::Index block_column(int regime, int column) const noexcept {
        return static_cast<Eigen::Index>(regime) * n_regressors + column;
    }
};

FullSampleDemeaned demean_full_sample(const PanelData& panel, const Partition& part);

}  // namespace panelcp
