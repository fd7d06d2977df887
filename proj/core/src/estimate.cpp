#include "panelcp/estimate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "panelcp/error.hpp"

namespace panelcp {
namespace {

constexpr double kSingularTol = 1e-12;   // smallest / largest Gram eigenvalue
constexpr double kConditionWarn = 1e10;

struct GramCheck {
    bool singular = false;
    double condition = 1.0;
    std::vector<Eigen::Index> weak;  // columns loading on near-null directions
};

GramCheck check_gram(const Matrix& g) {
    GramCheck out;
    if (g.rows() == 0) return out;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
    const Vector& ev = eig.eigenvalues();  // ascending
    const double top = ev[ev.size() - 1];
    if (!(top > 0.0)) {
        out.singular = true;
        out.condition = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < g.cols(); ++c) out.weak.push_back(c);
        return out;
    }
    out.condition = ev[0] > 0.0 ? top / ev[0] : std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        if (ev[k] > kSingularTol * top) break;
        out.singular = true;
        for (Eigen::Index c = 0; c < g.cols(); ++c)
            if (std::abs(eig.eigenvectors()(c, k)) > 0.1 &&
                std::find(out.weak.begin(), out.weak.end(), c) == out.weak.end())
                out.weak.push_back(c);
    }
    std::sort(out.weak.begin(), out.weak.end());
    return out;
}

Matrix spd_inverse(const Matrix& g) {
    return g.ldlt().solve(Matrix::Identity(g.rows(), g.cols()));
}

Eigen::ArithmeticSequence<Eigen::Index, Eigen::Index> regime_rows(const PanelData& panel, const Regime& r) {
    return Eigen::seqN(panel.row(0, r.first),
                       static_cast<Eigen::Index>(r.length()) * panel.n_individuals());
}

std::string regime_label(const Regime& r) {
    std::ostringstream os;
    os << "periods " << r.first << "-" << r.last;
    return os.str();
}

void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

// ---------------------------------------------------------------- FE design

struct FEDesign {
    WithinDemeaned dm;
    std::vector<int> regimes;
    std::vector<std::vector<int>> columns;
    std::vector<Eigen::Index> offset;
    std::vector<Matrix> gram;  // X_j' X_j on identified columns
    Eigen::Index n_coef = 0;
    std::vector<std::string> warnings;
};

FEDesign fe_design(const PanelData& panel, const Partition& part) {
    FEDesign d;
    d.dm = demean_within_regime(panel, part);
    if (d.dm.regimes.estimable.empty())
        throw NoEstimableRegime("estimate: no regime has two or more periods; FE is not estimable");
    for (int j : d.dm.regimes.estimable) {
        std::vector<int> cols;
        for (int c = 0; c < panel.n_regressors(); ++c)
            if (!d.dm.time_invariant[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)]) cols.push_back(c);
        const Regime r = part.regime(j);
        const Matrix xj = d.dm.x(regime_rows(panel, r), cols);
        Matrix g = xj.transpose() * xj;
        symmetrize(g);
        const GramCheck chk = check_gram(g);
        if (chk.singular) {
            std::ostringstream os;
            os << "estimate: FE demeaned Gram is singular in regime " << j + 1 << " ("
               << regime_label(r) << "); collinear columns:";
            for (auto c : chk.weak) os << ' ' << panel.regressor_names()[static_cast<std::size_t>(cols[static_cast<std::size_t>(c)])];
            throw RankError(os.str());
        }
        if (chk.condition > kConditionWarn) {
            std::ostringstream os;
            os << "FE regime " << j + 1 << ": demeaned Gram condition number " << chk.condition;
            d.warnings.push_back(os.str());
        }
        d.regimes.push_back(j);
        d.offset.push_back(d.n_coef);
        d.n_coef += static_cast<Eigen::Index>(cols.size());
        d.columns.push_back(std::move(cols));
        d.gram.push_back(std::move(g));
    }
    return d;
}

Matrix fe_plugin(const FEDesign& d, int n, double sigma2) {
    Matrix cov = Matrix::Zero(d.n_coef, d.n_coef);
    for (std::size_t k = 0; k < d.regimes.size(); ++k) {
        const auto kj = static_cast<Eigen::Index>(d.columns[k].size());
        if (kj == 0) continue;
        cov.block(d.offset[k], d.offset[k], kj, kj) = sigma2 * spd_inverse(d.gram[k] / n);
    }
    symmetrize(cov);
    return cov;
}

Matrix fe_cluster(const FEDesign& d, const PanelData& panel, const Partition& part, const Vector& residuals) {
    const int n = panel.n_individuals();
    if (n <= d.n_coef)
        throw InvalidArgument("estimate: cluster covariance needs N greater than the coefficient count");
    Matrix scores = Matrix::Zero(n, d.n_coef);
    Matrix bread = Matrix::Zero(d.n_coef, d.n_coef);
    for (std::size_t k = 0; k < d.regimes.size(); ++k) {
        const auto kj = static_cast<Eigen::Index>(d.columns[k].size());
        if (kj == 0) continue;
        const Regime r = part.regime(d.regimes[k]);
        for (int t = r.first; t <= r.last; ++t) {
            const auto rows = Eigen::seqN(panel.row(0, t), n);
            scores.middleCols(d.offset[k], kj) +=
                (d.dm.x(rows, d.columns[k]).array().colwise() * residuals(rows).array()).matrix();
        }
        bread.block(d.offset[k], d.offset[k], kj, kj) = spd_inverse(d.gram[k] / n);
    }
    const Matrix meat = scores.transpose() * scores / n;
    Matrix cov = bread * meat * bread;
    symmetrize(cov);
    return cov;
}

struct FEFit {
    std::vector<Vector> beta;
    Vector coef;
    Vector residuals;
};

FEFit fe_fit(const FEDesign& d, const PanelData& panel, const Partition& part) {
    FEFit fit;
    fit.coef = Vector::Zero(d.n_coef);
    fit.residuals = Vector::Zero(panel.n_obs());
    for (std::size_t k = 0; k < d.regimes.size(); ++k) {
        const auto rows = regime_rows(panel, part.regime(d.regimes[k]));
        const Matrix xj = d.dm.x(rows, d.columns[k]);
        const Vector yj = d.dm.y(rows);
        Vector b = d.gram[k].ldlt().solve(xj.transpose() * yj);
        fit.residuals(rows) = yj - xj * b;
        fit.coef.segment(d.offset[k], b.size()) = b;
        fit.beta.push_back(std::move(b));
    }
    return fit;
}

// --------------------------------------------------------------- FFE design

struct FFEDesign {
    FullSampleDemeaned dm;
    std::vector<FFECoef> basis;
    std::vector<Eigen::Index> cols;  // into dm.x_tilde
    Matrix x;
    Matrix gram;
    std::vector<int> time_invariant;
    std::vector<std::string> warnings;
};

FFEDesign ffe_design(const PanelData& panel, const Partition& part) {
    FFEDesign d;
    d.dm = demean_full_sample(panel, part);
    const int p = panel.n_regressors();
    for (int c = 0; c < p; ++c)
        if (d.dm.time_invariant[static_cast<std::size_t>(c)]) d.time_invariant.push_back(c);
    for (int j = 0; j < part.n_regimes(); ++j) {
        for (int c = 0; c < p; ++c) {
            const bool ti = d.dm.time_invariant[static_cast<std::size_t>(c)];
            if (ti && j == 0) continue;
            d.basis.push_back({j, c, ti});
            d.cols.push_back(d.dm.block_column(j, c));
        }
    }
    d.x = d.dm.x_tilde(Eigen::all, d.cols);
    d.gram = d.x.transpose() * d.x;
    symmetrize(d.gram);
    const GramCheck chk = check_gram(d.gram);
    if (chk.singular) {
        std::ostringstream os;
        os << "estimate: FFE design is rank deficient after dropping time-invariant blocks; offending columns:";
        for (auto k : chk.weak) {
            const FFECoef& b = d.basis[static_cast<std::size_t>(k)];
            os << " (regime " << b.regime + 1 << ", " << panel.regressor_names()[static_cast<std::size_t>(b.column)] << ")";
        }
        throw RankError(os.str());
    }
    if (chk.condition > kConditionWarn) {
        std::ostringstream os;
        os << "FFE: design Gram condition number " << chk.condition;
        d.warnings.push_back(os.str());
    }
    return d;
}

struct PluginResult {
    Matrix cov;
    std::string form;
};

PluginResult ffe_plugin(const FFEDesign& d, const PanelData& panel, const Partition& part, double sigma2) {
    const int n = panel.n_individuals();
    const int t_count = panel.n_periods();
    const int p = panel.n_regressors();

    // Closed form needs every (regime, column) block to have within variation.
    bool closed_form = d.time_invariant.empty();
    std::vector<Matrix> q_hat;
    if (closed_form) {
        const WithinDemeaned within = demean_within_regime(panel, part);
        for (int j = 0; j < part.n_regimes() && closed_form; ++j) {
            const Regime r = part.regime(j);
            const auto& ti = within.time_invariant[static_cast<std::size_t>(j)];
            if (r.length() < 2 || std::find(ti.begin(), ti.end(), true) != ti.end()) {
                closed_form = false;
                break;
            }
            const auto xj = within.x(regime_rows(panel, r), Eigen::all);
            Matrix g = xj.transpose() * xj;
            symmetrize(g);
            if (check_gram(g).singular) {
                closed_form = false;
                break;
            }
            q_hat.push_back(g / (static_cast<double>(n) * (r.length() - 1)));
        }
    }

    PluginResult out;
    const auto k = static_cast<Eigen::Index>(d.basis.size());
    if (closed_form) {
        // D = diag_j(dT_j Q_j), Omega = (1 - 1/T)^2 D, W = Omega - D / T.
        Matrix dmat = Matrix::Zero(k, k);
        for (int j = 0; j < part.n_regimes(); ++j)
            dmat.block(static_cast<Eigen::Index>(j) * p, static_cast<Eigen::Index>(j) * p, p, p) =
                part.regime(j).length() * q_hat[static_cast<std::size_t>(j)];
        const double shrink = std::pow(1.0 - 1.0 / t_count, 2);
        const Matrix omega = shrink * dmat;
        const Matrix meat = omega - dmat / t_count;
        const Matrix inv = spd_inverse(omega);
        out.cov = sigma2 * inv * meat * inv;
        out.form = "closed-form";
    } else {
        out.cov = sigma2 * spd_inverse(d.gram / n);
        out.form = "ols";
    }
    symmetrize(out.cov);
    return out;
}

Matrix ffe_cluster(const FFEDesign& d, const PanelData& panel, const Vector& residuals) {
    const int n = panel.n_individuals();
    const auto k = static_cast<Eigen::Index>(d.basis.size());
    if (n <= k) throw InvalidArgument("estimate: cluster covariance needs N greater than the coefficient count");
    Matrix scores = Matrix::Zero(n, k);
    for (int t = 1; t <= panel.n_periods(); ++t) {
        const auto rows = Eigen::seqN(panel.row(0, t), n);
        scores += (d.x(rows, Eigen::all).array().colwise() * residuals(rows).array()).matrix();
    }
    const Matrix bread = spd_inverse(d.gram / n);
    Matrix cov = bread * (scores.transpose() * scores / n) * bread;
    symmetrize(cov);
    return cov;
}

double ffe_sigma2(const Vector& residuals, int n, int t_count, Eigen::Index k) {
    const double dof = static_cast<double>(n) * (t_count - 1) - static_cast<double>(k);
    if (!(dof > 0.0)) throw InvalidArgument("estimate: nonpositive degrees of freedom for the FFE variance");
    return residuals.squaredNorm() / dof;
}

}  // namespace

VcovKind parse_vcov(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (lower == "plugin") return VcovKind::Plugin;
    if (lower == "cluster") return VcovKind::Cluster;
    throw InvalidArgument("estimate: unknown vcov kind '" + std::string(name) + "' (expected plugin or cluster)");
}

std::string_view to_string(VcovKind kind) noexcept {
    return kind == VcovKind::Plugin ? "plugin" : "cluster";
}

RegimeOLS regime_ols(const GramTable& gram, const Partition& part) {
    if (part.n_periods() != gram.n_periods())
        throw InvalidArgument("estimate: partition T does not match the Gram table");
    RegimeOLS out;
    for (const Regime& r : part.regimes()) {
        const SegmentGram seg = gram.segment(r.first, r.last);
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(seg.xx.rows(), seg.xx.cols());
        cod.setThreshold(kSingularTol);
        cod.compute(seg.xx);
        out.gamma.push_back(cod.solve(seg.xy));
        out.full_rank.push_back(cod.rank() == seg.xx.cols());
    }
    return out;
}

double sigma2_hat(const Vector& residuals, const Partition& part, int n_individuals, int n_coefficients) {
    double dof = -static_cast<double>(n_coefficients);
    for (const Regime& r : part.regimes())
        if (r.length() >= 2) dof += static_cast<double>(n_individuals) * (r.length() - 1);
    if (!(dof > 0.0)) {
        std::ostringstream os;
        os << "estimate: nonpositive degrees of freedom (" << dof << ") for sigma^2";
        throw InvalidArgument(os.str());
    }
    return residuals.squaredNorm() / dof;
}

Vector FEEstimate::se() const {
    return (cov.diagonal().array().max(0.0) / n_individuals).sqrt().matrix();
}

std::optional<std::size_t> FEEstimate::slot(int regime) const {
    const auto it = std::find(regimes.begin(), regimes.end(), regime);
    if (it == regimes.end()) return std::nullopt;
    return static_cast<std::size_t>(it - regimes.begin());
}

std::optional<Eigen::Index> FEEstimate::coef_index(int regime, int column) const {
    const auto s = slot(regime);
    if (!s) return std::nullopt;
    const auto& cols = columns[*s];
    const auto it = std::find(cols.begin(), cols.end(), column);
    if (it == cols.end()) return std::nullopt;
    return offset[*s] + (it - cols.begin());
}

FEEstimate fe_estimate(const PanelData& panel, const Partition& part, VcovKind kind) {
    FEDesign d = fe_design(panel, part);
    FEFit fit = fe_fit(d, panel, part);

    FEEstimate est;
    est.partition = part;
    est.n_individuals = panel.n_individuals();
    est.n_regressors = panel.n_regressors();
    est.vcov_kind = kind;
    est.regimes = d.regimes;
    est.singletons = d.dm.regimes.singleton;
    est.identified.assign(static_cast<std::size_t>(part.n_regimes()),
                          std::vector<bool>(static_cast<std::size_t>(panel.n_regressors()), false));
    for (std::size_t k = 0; k < d.regimes.size(); ++k)
        for (int c : d.columns[k]) est.identified[static_cast<std::size_t>(d.regimes[k])][static_cast<std::size_t>(c)] = true;
    est.columns = d.columns;
    est.offset = d.offset;
    est.beta = std::move(fit.beta);
    est.coef = std::move(fit.coef);
    est.sigma2 = sigma2_hat(fit.residuals, part, panel.n_individuals(), static_cast<int>(d.n_coef));
    est.cov = kind == VcovKind::Plugin ? fe_plugin(d, panel.n_individuals(), est.sigma2)
                                       : fe_cluster(d, panel, part, fit.residuals);
    est.residuals = std::move(fit.residuals);
    est.warnings = std::move(d.warnings);
    return est;
}

Vector FFEEstimate::se() const {
    return (cov.diagonal().array().max(0.0) / n_individuals).sqrt().matrix();
}

std::optional<Eigen::Index> FFEEstimate::coef_index(int regime, int column) const {
    for (std::size_t k = 0; k < basis.size(); ++k)
        if (basis[k].regime == regime && basis[k].column == column) return static_cast<Eigen::Index>(k);
    return std::nullopt;
}

FFEEstimate ffe_estimate(const PanelData& panel, const Partition& part, VcovKind kind) {
    FFEDesign d = ffe_design(panel, part);
    const int n = panel.n_individuals();

    FFEEstimate est;
    est.partition = part;
    est.n_individuals = n;
    est.n_regressors = panel.n_regressors();
    est.vcov_kind = kind;
    est.basis = d.basis;
    est.time_invariant_columns = d.time_invariant;
    est.rank_deficiency = static_cast<int>(d.time_invariant.size());
    est.coef = d.gram.ldlt().solve(d.x.transpose() * d.dm.y_star);
    est.residuals = d.dm.y_star - d.x * est.coef;
    est.sigma2 = ffe_sigma2(est.residuals, n, panel.n_periods(), d.x.cols());
    if (kind == VcovKind::Plugin) {
        PluginResult pr = ffe_plugin(d, panel, part, est.sigma2);
        est.cov = std::move(pr.cov);
        est.plugin_form = std::move(pr.form);
    } else {
        est.cov = ffe_cluster(d, panel, est.residuals);
    }
    const Vector se = est.se();
    for (std::size_t k = 0; k < est.basis.size(); ++k)
        if (est.basis[k].contrast)
            est.contrast_table.push_back({est.basis[k].column, est.basis[k].regime,
                                          est.coef[static_cast<Eigen::Index>(k)], se[static_cast<Eigen::Index>(k)]});
    est.warnings = std::move(d.warnings);
    return est;
}

Matrix fe_vcov_plugin(const PanelData& panel, const Partition& part, double sigma2) {
    if (sigma2 < 0.0) throw InvalidArgument("estimate: sigma^2 must be nonnegative");
    return fe_plugin(fe_design(panel, part), panel.n_individuals(), sigma2);
}

Matrix fe_vcov_cluster(const PanelData& panel, const Partition& part, const Vector& residuals) {
    if (residuals.size() != panel.n_obs()) throw InvalidArgument("estimate: residuals must have N*T entries");
    return fe_cluster(fe_design(panel, part), panel, part, residuals);
}

Matrix ffe_vcov_plugin(const PanelData& panel, const Partition& part, double sigma2) {
    if (sigma2 < 0.0) throw InvalidArgument("estimate: sigma^2 must be nonnegative");
    return ffe_plugin(ffe_design(panel, part), panel, part, sigma2).cov;
}

Matrix ffe_vcov_cluster(const PanelData& panel, const Partition& part, const Vector& residuals) {
    if (residuals.size() != panel.n_obs()) throw InvalidArgument("estimate: residuals must have N*T entries");
    return ffe_cluster(ffe_design(panel, part), panel, residuals);
}

VarianceFactors closed_form_variance_factors(int n_periods, int regime_length) {
    if (n_periods < 2 || regime_length < 1 || regime_length > n_periods)
        throw InvalidArgument("estimate: need T >= 2 and 1 <= dT <= T");
    const double t = n_periods;
    const double dt = regime_length;
    VarianceFactors f;
    f.fe = regime_length >= 2 ? 1.0 / (dt - 1.0) : std::numeric_limits<double>::infinity();
    f.ffe = (t * t - 3.0 * t + 1.0) * t * t / (std::pow(t - 1.0, 4) * dt);
    return f;
}

}  // namespace panelcp
