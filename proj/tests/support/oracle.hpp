#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library's solvers; only PanelData is used for storage.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "panelcp/panel.hpp"

namespace oracle {

using panelcp::Matrix;
using panelcp::PanelData;
using panelcp::Vector;

struct StackedFit {
    double sse = 0.0;
    Vector gamma;
};

// Stack all observations of periods s..e and solve by column-pivoted QR.
inline StackedFit stacked_ols(const PanelData& panel, int s, int e) {
    const int n = panel.n_individuals();
    const int p = panel.n_regressors();
    const int rows = n * (e - s + 1);
    Matrix x(rows, p);
    Vector y(rows);
    int r = 0;
    for (int t = s; t <= e; ++t)
        for (int i = 0; i < n; ++i, ++r) {
            y[r] = panel.y(i, t);
            for (int c = 0; c < p; ++c) x(r, c) = panel.x(i, t, c);
        }
    StackedFit f;
    f.gamma = x.colPivHouseholderQr().solve(y);
    f.sse = (y - x * f.gamma).squaredNorm();
    return f;
}

struct DirectGram {
    Matrix xx;
    Vector xy;
    double yy = 0.0;
};

inline DirectGram direct_gram(const PanelData& panel, int s, int e) {
    const int p = panel.n_regressors();
    DirectGram g{Matrix::Zero(p, p), Vector::Zero(p), 0.0};
    for (int t = s; t <= e; ++t)
        for (int i = 0; i < panel.n_individuals(); ++i) {
            for (int a = 0; a < p; ++a) {
                g.xy[a] += panel.x(i, t, a) * panel.y(i, t);
                for (int b = 0; b < p; ++b) g.xx(a, b) += panel.x(i, t, a) * panel.x(i, t, b);
            }
            g.yy += panel.y(i, t) * panel.y(i, t);
        }
    return g;
}

inline int numerical_rank(const Matrix& m, double rel_tol = 1e-9) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
    const Vector& ev = eig.eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    int rank = 0;
    for (Eigen::Index k = 0; k < ev.size(); ++k) rank += ev[k] > rel_tol * top;
    return rank;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

inline double max_rel_err(const Matrix& a, const Matrix& b) {
    const double scale = std::max(1.0, std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()));
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

// Random panel with i.i.d. standard normal entries (first column constant if intercept).
inline PanelData random_panel(std::mt19937_64& rng, int n, int t, int p, bool intercept = false) {
    std::normal_distribution<double> z(0.0, 1.0);
    Matrix x(n * t, p);
    Vector y(n * t);
    for (int r = 0; r < n * t; ++r) {
        for (int c = 0; c < p; ++c) x(r, c) = (intercept && c == 0) ? 1.0 : z(rng);
        y[r] = z(rng);
    }
    return PanelData::create(n, t, y, x, {}, intercept);
}

// Panel layout y from an (i, t) function.
template <typename Fn>
Vector outcome(const PanelData& panel, Fn&& fn) {
    Vector y(panel.n_obs());
    for (int t = 1; t <= panel.n_periods(); ++t)
        for (int i = 0; i < panel.n_individuals(); ++i) y[panel.row(i, t)] = fn(i, t);
    return y;
}

// Every strictly increasing break vector of length m in [1, T-1], lexicographic order.
inline std::vector<std::vector<int>> all_break_vectors(int t, int m) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int start) -> void {
        if (static_cast<int>(cur.size()) == m) {
            out.push_back(cur);
            return;
        }
        for (int b = start; b <= t - 1; ++b) {
            cur.push_back(b);
            self(self, b + 1);
            cur.pop_back();
        }
    };
    rec(rec, 1);
    return out;
}

// Exhaustive minimum total SSE over all partitions with m breaks, each segment
// fitted by stacked QR.
inline double exhaustive_min_sse(const PanelData& panel, int m) {
    const int t = panel.n_periods();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : all_break_vectors(t, m)) {
        double total = 0.0;
        int first = 1;
        for (std::size_t j = 0; j <= b.size(); ++j) {
            const int last = j < b.size() ? b[j] : t;
            total += stacked_ols(panel, first, last).sse;
            first = last + 1;
        }
        best = std::min(best, total);
    }
    return best;
}

// OLS on an arbitrary design by QR.
inline Vector ols(const Matrix& x, const Vector& y) { return x.colPivHouseholderQr().solve(y); }

}  // namespace oracle
