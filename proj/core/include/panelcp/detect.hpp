#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "panelcp/panel.hpp"

namespace panelcp {

// Pooled OLS fit of one segment [s, e].
struct SegmentFit {
    double sse = 0.0;
    Vector gamma;
    bool full_rank = true;
};

// Solves the pooled normal equations of [s, e]. A rank-deficient Gram gets the
// minimum-norm solution and full_rank = false; sse is still the least-squares minimum.
SegmentFit segment_sse(const GramTable& gram, int s, int e);

// sse/gamma for every segment 1 <= s <= e <= T.
class SegmentSSETable {
public:
    explicit SegmentSSETable(const GramTable& gram);

    int n_periods() const noexcept { return t_; }
    int n_individuals() const noexcept { return n_; }
    const SegmentFit& at(int s, int e) const;
    double sse(int s, int e) const { return at(s, e).sse; }

private:
    int t_ = 0;
    int n_ = 0;
    std::vector<SegmentFit> fits_;  // (s - 1) * T + (e - 1)
};

struct PartitionFit {
    Partition partition;
    double sse = 0.0;  // total, not normalized
};

// Exact least-squares partition search for every break count up to m_max.
// Ties go to the lexicographically smallest break vector.
class PartitionSolver {
public:
    PartitionSolver(const SegmentSSETable& table, int m_max);

    int m_max() const noexcept { return m_max_; }
    PartitionFit solve(int m) const;

private:
    double cost(int k, int s) const { return cost_[static_cast<std::size_t>(k) * stride_ + static_cast<std::size_t>(s)]; }

    const SegmentSSETable* table_;
    int m_max_;
    std::size_t stride_;
    // cost_[k][s]: least SSE over [s, T] using exactly k breaks (+inf if infeasible).
    std::vector<double> cost_;
};

PartitionFit dp_optimal_partition(const SegmentSSETable& table, int m);

// Exhaustive enumeration; refuses when C(T-1, m) exceeds max_candidates.
PartitionFit brute_force_partition(const SegmentSSETable& table, int m,
                                   std::uint64_t max_candidates = 1'000'000);

struct BreakFit {
    Partition partition;
    double sse = 0.0;
    double s_nt = 0.0;  // sse / (N T)
    std::vector<Vector> gamma;  // per regime
    std::vector<bool> full_rank;

    int m() const noexcept { return partition.n_breaks(); }
};

struct DetectionResult {
    int n_individuals = 0;
    int n_periods = 0;
    std::vector<BreakFit> fits;  // fits[m] for m = 0..m_max
    std::optional<int> m_hat;    // filled in by select

    int m_max() const noexcept { return static_cast<int>(fits.size()) - 1; }
    const BreakFit& at(int m) const;
};

// m_max < 0 means T - 1.
DetectionResult detect_breaks(const SegmentSSETable& table, int m_max = -1);
DetectionResult detect_breaks(const PanelData& panel, int m_max = -1);

}  // namespace panelcp
