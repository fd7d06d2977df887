#include "panelcp/detect.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "panelcp/error.hpp"

namespace panelcp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative pivot threshold for the pooled Gram. The Gram squares the design's
// condition number, so 1e-12 here is roughly 1e-6 on the stacked regressors.
constexpr double kGramRankTol = 1e-12;

// Residual sums below this fraction of the segment's total sum of squares are
// indistinguishable from a perfect fit after the normal-equation cancellation.
constexpr double kPerfectFitTol = 1e-12;

std::string m_range_message(int m, int t) {
    std::ostringstream os;
    os << "detect: m=" << m << " must lie in [0, T-1=" << t - 1 << "]";
    return os.str();
}

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t out = 1;
    for (int i = 1; i <= k; ++i) {
        // out * (n - k + i) / i stays integral at every step
        const auto num = static_cast<std::uint64_t>(n - k + i);
        if (out > std::numeric_limits<std::uint64_t>::max() / num)
            return std::numeric_limits<std::uint64_t>::max();
        out = out * num / static_cast<std::uint64_t>(i);
    }
    return out;
}

}  // namespace

SegmentFit segment_sse(const GramTable& gram, int s, int e) {
    const SegmentGram seg = gram.segment(s, e);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(seg.xx.rows(), seg.xx.cols());
    cod.setThreshold(kGramRankTol);
    cod.compute(seg.xx);

    SegmentFit fit;
    fit.gamma = cod.solve(seg.xy);
    fit.full_rank = cod.rank() == seg.xx.cols();
    const double sse = seg.yy - fit.gamma.dot(seg.xy);
    fit.sse = sse <= kPerfectFitTol * seg.yy ? 0.0 : sse;
    return fit;
}

SegmentSSETable::SegmentSSETable(const GramTable& gram)
    : t_(gram.n_periods()), n_(gram.n_individuals()) {
    fits_.resize(static_cast<std::size_t>(t_) * static_cast<std::size_t>(t_));
    for (int s = 1; s <= t_; ++s)
        for (int e = s; e <= t_; ++e)
            fits_[static_cast<std::size_t>((s - 1) * t_ + (e - 1))] = segment_sse(gram, s, e);
}

const SegmentFit& SegmentSSETable::at(int s, int e) const {
    if (s < 1 || e < s || e > t_)
        throw InvalidArgument("detect: segment bounds must satisfy 1 <= s <= e <= T");
    return fits_[static_cast<std::size_t>((s - 1) * t_ + (e - 1))];
}

PartitionSolver::PartitionSolver(const SegmentSSETable& table, int m_max)
    : table_(&table), m_max_(m_max), stride_(static_cast<std::size_t>(table.n_periods()) + 2) {
    const int t = table.n_periods();
    if (m_max < 0 || m_max > t - 1) throw InvalidArgument(m_range_message(m_max, t));
    cost_.assign(static_cast<std::size_t>(m_max + 1) * stride_, kInf);
    for (int s = 1; s <= t; ++s) cost_[static_cast<std::size_t>(s)] = table.sse(s, t);
    for (int k = 1; k <= m_max; ++k) {
        for (int s = 1; s + k <= t; ++s) {
            double best = kInf;
            for (int e = s; e <= t - k; ++e) {
                const double v = table.sse(s, e) + cost(k - 1, e + 1);
                if (v < best) best = v;
            }
            cost_[static_cast<std::size_t>(k) * stride_ + static_cast<std::size_t>(s)] = best;
        }
    }
}

PartitionFit PartitionSolver::solve(int m) const {
    const int t = table_->n_periods();
    if (m < 0 || m > m_max_) throw InvalidArgument(m_range_message(m, t));
    std::vector<int> breaks;
    int s = 1;
    for (int k = m; k >= 1; --k) {
        const double target = cost(k, s);
        // Smallest break attaining the optimum; the same expression as the
        // forward pass, so equality is exact.
        int chosen = -1;
        for (int e = s; e <= t - k; ++e) {
            if (table_->sse(s, e) + cost(k - 1, e + 1) == target) {
                chosen = e;
                break;
            }
        }
        breaks.push_back(chosen);
        s = chosen + 1;
    }
    return {Partition(std::move(breaks), t), cost(m, 1)};
}

PartitionFit dp_optimal_partition(const SegmentSSETable& table, int m) {
    const int t = table.n_periods();
    if (m < 0 || m > t - 1) throw InvalidArgument(m_range_message(m, t));
    return PartitionSolver(table, m).solve(m);
}

PartitionFit brute_force_partition(const SegmentSSETable& table, int m, std::uint64_t max_candidates) {
    const int t = table.n_periods();
    if (m < 0 || m > t - 1) throw InvalidArgument(m_range_message(m, t));
    const std::uint64_t count = binomial(t - 1, m);
    if (count > max_candidates) {
        std::ostringstream os;
        os << "detect: C(" << t - 1 << "," << m << ")=" << count
           << " partitions exceeds the enumeration guard " << max_candidates;
        throw GuardExceeded(os.str());
    }

    // Lexicographic enumeration; totals summed right to left to match the DP.
    std::vector<int> combo(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) combo[static_cast<std::size_t>(k)] = k + 1;
    std::vector<int> best_combo;
    double best = kInf;
    while (true) {
        double total = 0.0;
        int end = t;
        for (int k = m - 1; k >= -1; --k) {
            const int start = k >= 0 ? combo[static_cast<std::size_t>(k)] + 1 : 1;
            total = k == m - 1 ? table.sse(start, end) : table.sse(start, end) + total;
            if (k >= 0) end = combo[static_cast<std::size_t>(k)];
        }
        if (total < best) {
            best = total;
            best_combo = combo;
        }
        int k = m - 1;
        while (k >= 0 && combo[static_cast<std::size_t>(k)] == t - 1 - (m - 1 - k)) --k;
        if (k < 0) break;
        ++combo[static_cast<std::size_t>(k)];
        for (int r = k + 1; r < m; ++r)
            combo[static_cast<std::size_t>(r)] = combo[static_cast<std::size_t>(r - 1)] + 1;
    }
    return {Partition(std::move(best_combo), t), best};
}

const BreakFit& DetectionResult::at(int m) const {
    if (m < 0 || m > m_max()) throw InvalidArgument("detect: no fit stored for m=" + std::to_string(m));
    return fits[static_cast<std::size_t>(m)];
}

DetectionResult detect_breaks(const SegmentSSETable& table, int m_max) {
    const int t = table.n_periods();
    if (m_max < 0) m_max = t - 1;
    const PartitionSolver solver(table, m_max);
    DetectionResult out;
    out.n_individuals = table.n_individuals();
    out.n_periods = t;
    const double nt = static_cast<double>(table.n_individuals()) * t;
    for (int m = 0; m <= m_max; ++m) {
        PartitionFit pf = solver.solve(m);
        BreakFit fit{pf.partition, pf.sse, pf.sse / nt, {}, {}};
        for (const Regime& r : pf.partition.regimes()) {
            const SegmentFit& seg = table.at(r.first, r.last);
            fit.gamma.push_back(seg.gamma);
            fit.full_rank.push_back(seg.full_rank);
        }
        out.fits.push_back(std::move(fit));
    }
    return out;
}

DetectionResult detect_breaks(const PanelData& panel, int m_max) {
    return detect_breaks(SegmentSSETable(build_gram_table(panel)), m_max);
}

}  // namespace panelcp
