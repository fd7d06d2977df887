#include "panelcp/panel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "panelcp/error.hpp"

namespace panelcp {

PanelData PanelData::create(int n_individuals, int n_periods, Vector y, Matrix x,
                            std::vector<std::string> regressor_names, bool has_intercept) {
    if (n_individuals <= 0 || n_periods <= 0)
        throw InvalidPanel("panel: N and T must be positive");
    if (n_periods < 2) throw InvalidPanel("panel: need at least two periods (T >= 2)");
    const Eigen::Index n_obs = static_cast<Eigen::Index>(n_individuals) * n_periods;
    if (y.size() != n_obs || x.rows() != n_obs) {
        std::ostringstream os;
        os << "panel: expected " << n_obs << " observations (N*T), got y=" << y.size()
           << " x=" << x.rows();
        throw InvalidPanel(os.str());
    }
    if (x.cols() < 1) throw InvalidPanel("panel: need at least one regressor");
    if (n_individuals < x.cols() + 1) {
        std::ostringstream os;
        os << "panel: N=" << n_individuals << " must be at least p+1=" << x.cols() + 1;
        throw InvalidPanel(os.str());
    }
    if (!y.allFinite() || !x.allFinite()) throw InvalidPanel("panel: non-finite values");
    if (regressor_names.empty()) {
        for (Eigen::Index c = 0; c < x.cols(); ++c)
            regressor_names.push_back("x" + std::to_string(c + 1));
    } else if (static_cast<Eigen::Index>(regressor_names.size()) != x.cols()) {
        throw InvalidPanel("panel: regressor_names size does not match p");
    }
    if (has_intercept && !(x.col(0).array() == 1.0).all())
        throw InvalidPanel("panel: has_intercept set but column 1 is not constant 1");

    PanelData out;
    out.n_ = n_individuals;
    out.t_ = n_periods;
    out.y_ = std::move(y);
    out.x_ = std::move(x);
    out.names_ = std::move(regressor_names);
    out.has_intercept_ = has_intercept;
    return out;
}

PanelData PanelData::with_outcome(Vector y) const {
    return create(n_, t_, std::move(y), x_, names_, has_intercept_);
}

Partition::Partition(std::vector<int> breaks, int n_periods)
    : breaks_(std::move(breaks)), t_(n_periods) {
    if (t_ < 1) throw InvalidArgument("partition: T must be positive");
    int prev = 0;
    for (int b : breaks_) {
        if (b <= prev || b > t_ - 1) {
            std::ostringstream os;
            os << "partition: breaks must be strictly increasing in [1, " << t_ - 1
               << "], got " << b;
            throw InvalidArgument(os.str());
        }
        prev = b;
    }
}

Regime Partition::regime(int j) const {
    if (j < 0 || j >= n_regimes()) throw InvalidArgument("partition: regime index out of range");
    const auto uj = static_cast<std::size_t>(j);
    const int first = j == 0 ? 1 : breaks_[uj - 1] + 1;
    const int last = j == n_breaks() ? t_ : breaks_[uj];
    return {first, last};
}

std::vector<Regime> Partition::regimes() const {
    std::vector<Regime> out;
    out.reserve(static_cast<std::size_t>(n_regimes()));
    for (int j = 0; j < n_regimes(); ++j) out.push_back(regime(j));
    return out;
}

int Partition::regime_of(int t) const {
    if (t < 1 || t > t_) throw InvalidArgument("partition: period out of range");
    return static_cast<int>(std::lower_bound(breaks_.begin(), breaks_.end(), t) - breaks_.begin());
}

std::vector<double> Partition::fractions() const {
    std::vector<double> out{0.0};
    for (int b : breaks_) out.push_back(static_cast<double>(b) / t_);
    out.push_back(1.0);
    return out;
}

RegimeIndex RegimeIndex::of(const Partition& part) {
    RegimeIndex idx;
    for (int j = 0; j < part.n_regimes(); ++j) {
        if (part.regime(j).length() >= 2)
            idx.estimable.push_back(j);
        else
            idx.singleton.push_back(j);
    }
    return idx;
}

bool RegimeIndex::is_estimable(int j) const {
    return std::find(estimable.begin(), estimable.end(), j) != estimable.end();
}

GramTable build_gram_table(const PanelData& panel) {
    const int n = panel.n_individuals();
    const int t_count = panel.n_periods();
    const int p = panel.n_regressors();
    GramTable g;
    g.n_ = n;
    g.p_ = p;
    g.xx_.reserve(static_cast<std::size_t>(t_count));
    g.cxx_.assign(1, Matrix::Zero(p, p));
    g.cxy_.assign(1, Vector::Zero(p));
    g.cyy_.assign(1, 0.0);
    for (int t = 1; t <= t_count; ++t) {
        const auto rows = Eigen::seqN(panel.row(0, t), n);
        const auto xt = panel.x_values()(rows, Eigen::all);
        const auto yt = panel.y_values()(rows);
        Matrix xx = xt.transpose() * xt;
        xx = 0.5 * (xx + xx.transpose()).eval();
        Vector xy = xt.transpose() * yt;
        const double yy = yt.squaredNorm();
        g.cxx_.push_back(g.cxx_.back() + xx);
        g.cxy_.push_back(g.cxy_.back() + xy);
        g.cyy_.push_back(g.cyy_.back() + yy);
        g.xx_.push_back(std::move(xx));
        g.xy_.push_back(std::move(xy));
        g.yy_.push_back(yy);
    }
    return g;
}

SegmentGram GramTable::segment(int s, int e) const {
    if (s < 1 || e < s || e > n_periods())
        throw InvalidArgument("gram: segment bounds must satisfy 1 <= s <= e <= T");
    const auto us = static_cast<std::size_t>(s - 1);
    const auto ue = static_cast<std::size_t>(e);
    SegmentGram out;
    if (s == e) {
        out.xx = xx_[us];
        out.xy = xy_[us];
        out.yy = yy_[us];
    } else {
        out.xx = cxx_[ue] - cxx_[us];
        out.xy = cxy_[ue] - cxy_[us];
        out.yy = cyy_[ue] - cyy_[us];
    }
    out.n_obs = static_cast<Eigen::Index>(e - s + 1) * n_;
    return out;
}

WithinDemeaned demean_within_regime(const PanelData& panel, const Partition& part) {
    if (part.n_periods() != panel.n_periods())
        throw InvalidArgument("demean: partition T does not match panel T");
    const int n = panel.n_individuals();
    const int p = panel.n_regressors();
    WithinDemeaned out;
    out.x = panel.x_values();
    out.y = panel.y_values();
    out.regimes = RegimeIndex::of(part);

    for (const Regime& r : part.regimes()) {
        const double len = r.length();
        for (int i = 0; i < n; ++i) {
            Eigen::RowVectorXd xbar = Eigen::RowVectorXd::Zero(p);
            double ybar = 0.0;
            for (int t = r.first; t <= r.last; ++t) {
                xbar += panel.x_values().row(panel.row(i, t));
                ybar += panel.y(i, t);
            }
            xbar /= len;
            ybar /= len;
            for (int t = r.first; t <= r.last; ++t) {
                out.x.row(panel.row(i, t)) -= xbar;
                out.y[panel.row(i, t)] -= ybar;
            }
        }
        std::vector<bool> flags(static_cast<std::size_t>(p));
        const auto rows = Eigen::seqN(panel.row(0, r.first), static_cast<Eigen::Index>(r.length()) * n);
        for (int c = 0; c < p; ++c) {
            const double scale = panel.x_values()(rows, c).cwiseAbs().maxCoeff();
            const double dev = out.x(rows, c).cwiseAbs().maxCoeff();
            flags[static_cast<std::size_t>(c)] = dev < kTimeInvariantTol * (1.0 + scale);
        }
        out.time_invariant.push_back(std::move(flags));
    }
    return out;
}

FullSampleDemeaned demean_full_sample(const PanelData& panel, const Partition& part) {
    if (part.n_periods() != panel.n_periods())
        throw InvalidArgument("demean: partition T does not match panel T");
    const int n = panel.n_individuals();
    const int t_count = panel.n_periods();
    const int p = panel.n_regressors();
    const int regimes = part.n_regimes();
    const Matrix& x = panel.x_values();

    FullSampleDemeaned out;
    out.n_regimes = regimes;
    out.n_regressors = p;
    out.x_tilde = Matrix::Zero(panel.n_obs(), static_cast<Eigen::Index>(regimes) * p);
    out.y_star = panel.y_values();
    out.time_invariant.assign(static_cast<std::size_t>(p), false);

    const auto parts = part.regimes();
    Matrix w(regimes, p);
    Eigen::RowVectorXd max_dev = Eigen::RowVectorXd::Zero(p);
    for (int i = 0; i < n; ++i) {
        w.setZero();
        double ybar = 0.0;
        for (int j = 0; j < regimes; ++j) {
            for (int t = parts[static_cast<std::size_t>(j)].first;
                 t <= parts[static_cast<std::size_t>(j)].last; ++t) {
                w.row(j) += x.row(panel.row(i, t));
                ybar += panel.y(i, t);
            }
        }
        w /= t_count;
        ybar /= t_count;
        const Eigen::RowVectorXd xbar = w.colwise().sum();
        for (int t = 1; t <= t_count; ++t) {
            const auto r = panel.row(i, t);
            const int own = part.regime_of(t);
            for (int j = 0; j < regimes; ++j)
                out.x_tilde.row(r).segment(static_cast<Eigen::Index>(j) * p, p) = -w.row(j);
            out.x_tilde.row(r).segment(static_cast<Eigen::Index>(own) * p, p) += x.row(r);
            out.y_star[r] -= ybar;
            max_dev = max_dev.cwiseMax((x.row(r) - xbar).cwiseAbs());
        }
    }
    const Eigen::RowVectorXd scale = x.cwiseAbs().colwise().maxCoeff();
    for (int c = 0; c < p; ++c)
        out.time_invariant[static_cast<std::size_t>(c)] = max_dev[c] < kTimeInvariantTol * (1.0 + scale[c]);
    return out;
}

}  // namespace panelcp
