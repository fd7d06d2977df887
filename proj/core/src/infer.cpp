#include "panelcp/infer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "panelcp/error.hpp"

namespace panelcp {
namespace {

constexpr double kSingularTol = 1e-12;

WaldResult quadratic_form(const Vector& diff, const Matrix& var, int n_individuals, int regime) {
    Matrix v = 0.5 * (var + var.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(v);
    const Vector& ev = eig.eigenvalues();
    const double top = ev.size() ? ev[ev.size() - 1] : 0.0;
    if (ev.size() == 0 || !(top > 0.0) || ev[0] <= kSingularTol * top) {
        std::ostringstream os;
        os << "infer: covariance of the tested difference is singular (regimes " << regime + 1 << " and "
           << regime + 2 << ")";
        throw RankError(os.str());
    }
    WaldResult out;
    out.regime = regime;
    out.df = static_cast<int>(diff.size());
    out.statistic = std::max(0.0, n_individuals * diff.dot(v.ldlt().solve(diff)));
    out.p_value = chi_square_upper_tail(out.statistic, out.df);
    return out;
}

}  // namespace

double chi_square_upper_tail(double x, int df) {
    if (df < 1) throw InvalidArgument("infer: chi-square df must be positive");
    if (!(x > 0.0)) return 1.0;
    const boost::math::chi_squared dist(df);
    return std::clamp(boost::math::cdf(boost::math::complement(dist, x)), 0.0, 1.0);
}

WaldResult wald_linear(const Vector& coef, const Matrix& cov, const Matrix& restriction, int n_individuals) {
    if (restriction.cols() != coef.size() || cov.rows() != coef.size() || cov.cols() != coef.size())
        throw InvalidArgument("infer: restriction/covariance dimensions do not match the coefficients");
    if (restriction.rows() == 0) throw NotTestable("infer: empty restriction");
    return quadratic_form(restriction * coef, restriction * cov * restriction.transpose(), n_individuals, 0);
}

WaldResult wald_slope_change(const FEEstimate& fe, int regime) {
    const int next = regime + 1;
    if (regime < 0 || next >= fe.partition.n_regimes())
        throw InvalidArgument("infer: regime pair out of range");
    const auto a = fe.slot(regime);
    const auto b = fe.slot(next);
    if (!a || !b) {
        std::ostringstream os;
        os << "infer: regimes " << regime + 1 << " and " << next + 1
           << " are not both estimable (one-period regimes carry no FE estimate)";
        throw NotTestable(os.str());
    }
    std::vector<int> common;
    for (int c = 0; c < fe.n_regressors; ++c)
        if (fe.identified[static_cast<std::size_t>(regime)][static_cast<std::size_t>(c)] &&
            fe.identified[static_cast<std::size_t>(next)][static_cast<std::size_t>(c)])
            common.push_back(c);
    if (common.empty()) throw NotTestable("infer: no column is identified in both regimes");

    Matrix r = Matrix::Zero(static_cast<Eigen::Index>(common.size()), fe.coef.size());
    for (std::size_t k = 0; k < common.size(); ++k) {
        r(static_cast<Eigen::Index>(k), *fe.coef_index(regime, common[k])) = 1.0;
        r(static_cast<Eigen::Index>(k), *fe.coef_index(next, common[k])) = -1.0;
    }
    WaldResult out = quadratic_form(r * fe.coef, r * fe.cov * r.transpose(), fe.n_individuals, regime);
    out.basis = std::move(common);
    return out;
}

WaldResult wald_slope_change(const FFEEstimate& ffe, int regime) {
    const int next = regime + 1;
    if (regime < 0 || next >= ffe.partition.n_regimes())
        throw InvalidArgument("infer: regime pair out of range");
    Matrix r = Matrix::Zero(ffe.n_regressors, ffe.coef.size());
    std::vector<int> basis;
    for (int c = 0; c < ffe.n_regressors; ++c) {
        // beta_next - beta_regime; a missing index is the regime-0 baseline of a contrast.
        if (const auto k = ffe.coef_index(regime, c)) r(c, *k) -= 1.0;
        if (const auto k = ffe.coef_index(next, c)) r(c, *k) += 1.0;
        basis.push_back(c);
    }
    WaldResult out = quadratic_form(r * ffe.coef, r * ffe.cov * r.transpose(), ffe.n_individuals, regime);
    out.basis = std::move(basis);
    return out;
}

WaldResult wald_gram_change(const PanelData& panel, const Partition& part, int regime) {
    const int next = regime + 1;
    if (regime < 0 || next >= part.n_regimes()) throw InvalidArgument("infer: regime pair out of range");
    const int n = panel.n_individuals();
    const int p = panel.n_regressors();
    const int q = p * (p + 1) / 2;

    const auto averages = [&](const Regime& r) {
        Matrix out = Matrix::Zero(n, q);
        for (int i = 0; i < n; ++i) {
            for (int t = r.first; t <= r.last; ++t) {
                int k = 0;
                for (int a = 0; a < p; ++a)
                    for (int b = 0; b <= a; ++b) out(i, k++) += panel.x(i, t, a) * panel.x(i, t, b);
            }
        }
        return Matrix(out / r.length());
    };
    const Matrix first = averages(part.regime(regime));
    const Matrix d = first - averages(part.regime(next));

    std::vector<Eigen::Index> keep;
    std::vector<int> basis;
    for (Eigen::Index k = 0; k < q; ++k) {
        const double scale = 1.0 + first.col(k).cwiseAbs().maxCoeff();
        if (d.col(k).cwiseAbs().maxCoeff() > kSingularTol * scale) keep.push_back(k);
    }
    if (keep.empty()) throw NotTestable("infer: regressor second moments are identical per individual");
    const Matrix dk = d(Eigen::all, keep);
    const Vector mean = dk.colwise().mean().transpose();
    const Matrix centered = dk.rowwise() - mean.transpose();
    const Matrix var = centered.transpose() * centered / n;
    WaldResult out = quadratic_form(mean, var, n, regime);
    for (auto k : keep) basis.push_back(static_cast<int>(k));
    out.basis = std::move(basis);
    return out;
}

BonferroniReport bonferroni_adjust(std::vector<WaldResult> tests, double alpha, int n_hypotheses) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("infer: alpha must lie in (0, 1)");
    BonferroniReport rep;
    rep.family_level = alpha;
    rep.n_hypotheses = n_hypotheses < 0 ? static_cast<int>(tests.size()) : n_hypotheses;
    if (rep.n_hypotheses < 1) throw InvalidArgument("infer: Bonferroni needs at least one hypothesis");
    rep.per_test_level = alpha / rep.n_hypotheses;
    for (const WaldResult& w : tests) rep.reject.push_back(w.p_value < rep.per_test_level);
    rep.tests = std::move(tests);
    return rep;
}

}  // namespace panelcp
