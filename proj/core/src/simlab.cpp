#include "panelcp/simlab.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "panelcp/detect.hpp"
#include "panelcp/error.hpp"
#include "panelcp/infer.hpp"

namespace panelcp {
namespace {

std::mt19937_64 replication_engine(std::uint64_t seed, int rep_index) {
    const auto rep = static_cast<std::uint64_t>(rep_index);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32), 0x5eedu};
    return std::mt19937_64(seq);
}

// Work is split by index, results land in per-index slots; the aggregation
// order never depends on the thread count.
template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, std::max(1, count));
    if (workers == 1) {
        for (int k = 0; k < count; ++k) fn(k);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int k = w; k < count; k += workers) fn(k);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<std::vector<int>> empty_histogram(int breaks, int t) {
    return std::vector<std::vector<int>>(static_cast<std::size_t>(breaks), std::vector<int>(static_cast<std::size_t>(t), 0));
}

void add_locations(std::vector<std::vector<int>>& hist, const Partition& part) {
    for (std::size_t j = 0; j < part.breaks().size() && j < hist.size(); ++j)
        ++hist[j][static_cast<std::size_t>(part.breaks()[j] - 1)];
}

bool contains_all(const Partition& estimated, const std::vector<int>& truth) {
    return std::all_of(truth.begin(), truth.end(), [&](int b) {
        return std::find(estimated.breaks().begin(), estimated.breaks().end(), b) != estimated.breaks().end();
    });
}

std::vector<SelectionCounts> empty_selection(const std::vector<Penalty>& penalties, int m_max) {
    std::vector<SelectionCounts> out;
    for (Penalty p : penalties) out.push_back({p, std::vector<int>(static_cast<std::size_t>(m_max + 1), 0)});
    return out;
}

struct SelectionRep {
    std::vector<int> m_hat;  // per penalty
    Partition first_penalty_partition = Partition::none(2);
};

SelectionRep selection_rep(const PanelData& panel, const std::vector<Penalty>& penalties, int m_max) {
    const DetectionResult det = detect_breaks(panel, m_max);
    SelectionRep rep;
    for (Penalty p : penalties) rep.m_hat.push_back(select_m(det, panel.n_regressors(), {p, m_max}).m_hat);
    rep.first_penalty_partition = det.at(rep.m_hat.empty() ? 0 : rep.m_hat.front()).partition;
    return rep;
}

SweepPoint run_sweep_point(const DGPConfig& cfg, const ExperimentOptions& opt, double value) {
    const int m_max = opt.m_max < 0 ? cfg.n_periods - 1 : opt.m_max;
    std::vector<SelectionRep> reps(static_cast<std::size_t>(cfg.replications));
    parallel_for(cfg.replications, opt.threads, [&](int r) {
        reps[static_cast<std::size_t>(r)] = selection_rep(generate_panel(cfg, r).panel, opt.penalties, m_max);
    });
    SweepPoint pt;
    pt.value = value;
    pt.selection = empty_selection(opt.penalties, m_max);
    const int true_m = static_cast<int>(cfg.breaks.size());
    pt.location_counts = empty_histogram(true_m, cfg.n_periods);
    for (const SelectionRep& rep : reps) {
        for (std::size_t k = 0; k < rep.m_hat.size(); ++k)
            ++pt.selection[k].counts[static_cast<std::size_t>(rep.m_hat[k])];
        if (!rep.m_hat.empty() && rep.m_hat.front() == true_m) {
            ++pt.conditioned;
            add_locations(pt.location_counts, rep.first_penalty_partition);
        }
    }
    return pt;
}

struct SlopeRep {
    std::vector<double> ols, fe, fe_se, ffe, ffe_se;  // [regime * columns + column], NaN when absent
    std::vector<double> wald_p;                       // per adjacent pair, NaN if not testable
};

}  // namespace

void DGPConfig::validate() const {
    std::ostringstream os;
    if (n_individuals < 2 || n_periods < 2) os << "simlab: need N >= 2 and T >= 2. ";
    if (n_regressors < 1) os << "simlab: need at least one regressor. ";
    if (!(sigma_c2 >= 0.0) || !(sigma_eps2 > 0.0) || !(z_variance > 0.0)) os << "simlab: variances must be positive. ";
    if (!(mixing_w >= 0.0 && mixing_w <= 1.0)) os << "simlab: mixing weight must lie in [0, 1]. ";
    if (!(std::abs(error_ar) < 1.0)) os << "simlab: AR coefficient must satisfy |rho| < 1. ";
    if (replications < 1) os << "simlab: replications must be positive. ";
    try {
        (void)partition();
    } catch (const Error& e) {
        os << e.what() << ". ";
    }
    if (beta.size() != breaks.size() + 1) os << "simlab: need one beta vector per regime. ";
    for (const Vector& b : beta)
        if (b.size() != n_columns()) os << "simlab: beta vectors must have " << n_columns() << " entries. ";
    if (n_individuals < n_columns() + 1) os << "simlab: N must exceed the column count. ";
    const std::string msg = os.str();
    if (!msg.empty()) throw InvalidArgument(msg.substr(0, msg.size() - 1));
}

std::vector<Vector> DGPConfig::alternating_beta(int regimes, int columns, double magnitude) {
    std::vector<Vector> out;
    for (int j = 0; j < regimes; ++j) out.push_back(Vector::Constant(columns, j % 2 == 0 ? -magnitude : magnitude));
    return out;
}

int DGPConfig::third(int n_periods, bool ceiling) {
    return ceiling ? (n_periods + 2) / 3 : n_periods / 3;
}

DGPConfig DGPConfig::no_break(int n, int t) {
    DGPConfig cfg;
    cfg.n_individuals = n;
    cfg.n_periods = t;
    cfg.beta = alternating_beta(1, 1);
    return cfg;
}

DGPConfig DGPConfig::single_break(int n, int t, int at) {
    DGPConfig cfg = no_break(n, t);
    cfg.breaks = {at};
    cfg.beta = alternating_beta(2, 1);
    return cfg;
}

DGPConfig DGPConfig::two_breaks(int n, int t, bool ceiling) {
    DGPConfig cfg = no_break(n, t);
    const int first = third(t, ceiling);
    const int second = ceiling ? (2 * t + 2) / 3 : (2 * t) / 3;
    cfg.breaks = {first, second};
    cfg.beta = alternating_beta(3, 1);
    return cfg;
}

DGPConfig DGPConfig::break_size(double size) {
    DGPConfig cfg;
    cfg.n_individuals = 216;
    cfg.n_periods = 18;
    cfg.n_regressors = 15;
    cfg.breaks = {14};
    Vector base(15);
    for (int k = 0; k < 15; ++k) base[k] = k % 2 == 0 ? -0.1 : 0.1;
    cfg.beta = {base, (base.array() + size).matrix()};
    return cfg;
}

SimulatedPanel generate_panel(const DGPConfig& cfg, int rep_index) {
    cfg.validate();
    const int n = cfg.n_individuals;
    const int t_count = cfg.n_periods;
    const int k_x = cfg.n_regressors;
    const int p = cfg.n_columns();
    const int lead = cfg.intercept ? 1 : 0;
    const Partition part = cfg.partition();

    auto eng = replication_engine(cfg.seed, rep_index);
    std::normal_distribution<double> std_normal(0.0, 1.0);
    const double sd_c = std::sqrt(cfg.sigma_c2);
    const double sd_z = std::sqrt(cfg.z_variance);
    const double sd_eps = std::sqrt(cfg.sigma_eps2);
    const double innov = std::sqrt(1.0 - cfg.error_ar * cfg.error_ar);

    Vector y(static_cast<Eigen::Index>(n) * t_count);
    Matrix x(static_cast<Eigen::Index>(n) * t_count, p);
    Vector effects(n);
    Vector g(k_x);
    std::vector<int> regime_of(static_cast<std::size_t>(t_count) + 1);
    for (int t = 1; t <= t_count; ++t) regime_of[static_cast<std::size_t>(t)] = part.regime_of(t);

    for (int i = 0; i < n; ++i) {
        const double c = sd_c * std_normal(eng);
        effects[i] = c;
        for (int k = 0; k < k_x; ++k) g[k] = sd_z * std_normal(eng);
        double eps = 0.0;
        for (int t = 1; t <= t_count; ++t) {
            const Eigen::Index r = static_cast<Eigen::Index>(t - 1) * n + i;
            if (lead) x(r, 0) = 1.0;
            for (int k = 0; k < k_x; ++k) {
                const double u = sd_z * std_normal(eng);
                x(r, lead + k) = cfg.loading * c + cfg.mixing_w * g[k] + (1.0 - cfg.mixing_w) * u;
            }
            const double shock = std_normal(eng);
            eps = t == 1 ? sd_eps * shock : cfg.error_ar * eps + innov * sd_eps * shock;
            const Vector& b = cfg.beta[static_cast<std::size_t>(regime_of[static_cast<std::size_t>(t)])];
            y[r] = x.row(r).dot(b) + c + eps;
        }
    }
    std::vector<std::string> names;
    if (lead) names.emplace_back("const");
    for (int k = 0; k < k_x; ++k) names.push_back("x" + std::to_string(k + 1));
    return {PanelData::create(n, t_count, std::move(y), std::move(x), std::move(names), cfg.intercept),
            std::move(effects), cfg.beta};
}

Experiment parse_experiment(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (lower == "locations") return Experiment::Locations;
    if (lower == "slopes") return Experiment::Slopes;
    if (lower == "selection") return Experiment::Selection;
    if (lower == "mixing") return Experiment::MixingSweep;
    if (lower == "breaksize") return Experiment::BreakSizeSweep;
    throw InvalidArgument("simlab: unknown experiment '" + std::string(name) +
                          "' (expected locations, slopes, selection, mixing or breaksize)");
}

std::string_view to_string(Experiment kind) noexcept {
    switch (kind) {
        case Experiment::Locations: return "locations";
        case Experiment::Slopes: return "slopes";
        case Experiment::Selection: return "selection";
        case Experiment::MixingSweep: return "mixing";
        case Experiment::BreakSizeSweep: return "breaksize";
    }
    return "?";
}

EstimatorSummary summarize(std::span<const double> estimates, std::span<const double> ses, double truth) {
    if (estimates.empty()) throw InvalidArgument("simlab: summarize needs at least one estimate");
    EstimatorSummary s;
    s.count = static_cast<int>(estimates.size());
    s.truth = truth;
    double sum = 0.0;
    for (double e : estimates) sum += e;
    s.mean = sum / s.count;
    s.bias = s.mean - truth;
    double ss = 0.0;
    for (double e : estimates) ss += (e - s.mean) * (e - s.mean);
    s.mse = s.bias * s.bias + ss / s.count;
    s.sd = s.count > 1 ? std::sqrt(ss / (s.count - 1)) : 0.0;
    if (ses.empty()) {
        s.se = std::numeric_limits<double>::quiet_NaN();
    } else {
        double se_sum = 0.0;
        for (double v : ses) se_sum += v;
        s.se = se_sum / static_cast<double>(ses.size());
    }
    return s;
}

MCSummary run_monte_carlo(const DGPConfig& cfg, const ExperimentOptions& opt) {
    cfg.validate();
    const int reps = cfg.replications;
    const int t_count = cfg.n_periods;
    const int true_m = static_cast<int>(cfg.breaks.size());
    MCSummary out;
    out.kind = opt.kind;
    out.replications = reps;
    out.true_m = true_m;

    switch (opt.kind) {
        case Experiment::Locations: {
            const int m = opt.forced_m.value_or(true_m);
            if (m < 0 || m > t_count - 1) throw InvalidArgument("simlab: forced m out of range");
            std::vector<Partition> found(static_cast<std::size_t>(reps), Partition::none(t_count));
            parallel_for(reps, opt.threads, [&](int r) {
                const GramTable gram = build_gram_table(generate_panel(cfg, r).panel);
                found[static_cast<std::size_t>(r)] = dp_optimal_partition(SegmentSSETable(gram), m).partition;
            });
            out.m_used = m;
            out.location_counts = empty_histogram(m, t_count);
            for (const Partition& part : found) {
                add_locations(out.location_counts, part);
                if (part.breaks() == cfg.breaks) ++out.exact_hits;
                if (contains_all(part, cfg.breaks)) ++out.contains_truth;
            }
            break;
        }
        case Experiment::Slopes: {
            const Partition truth = cfg.partition();
            const int regimes = truth.n_regimes();
            const int p = cfg.n_columns();
            const auto cells = static_cast<std::size_t>(regimes * p);
            const double nan = std::numeric_limits<double>::quiet_NaN();
            std::vector<SlopeRep> recs(static_cast<std::size_t>(reps));
            parallel_for(reps, opt.threads, [&](int r) {
                const SimulatedPanel sim = generate_panel(cfg, r);
                SlopeRep rec;
                rec.ols.assign(cells, nan);
                rec.fe.assign(cells, nan);
                rec.fe_se.assign(cells, nan);
                rec.ffe.assign(cells, nan);
                rec.ffe_se.assign(cells, nan);
                const RegimeOLS ols = regime_ols(build_gram_table(sim.panel), truth);
                for (int j = 0; j < regimes; ++j)
                    for (int c = 0; c < p; ++c)
                        rec.ols[static_cast<std::size_t>(j * p + c)] = ols.gamma[static_cast<std::size_t>(j)][c];
                const FEEstimate fe = fe_estimate(sim.panel, truth, opt.vcov);
                const Vector fe_se = fe.se();
                const FFEEstimate ffe = ffe_estimate(sim.panel, truth, opt.vcov);
                const Vector ffe_se = ffe.se();
                for (int j = 0; j < regimes; ++j) {
                    for (int c = 0; c < p; ++c) {
                        const auto cell = static_cast<std::size_t>(j * p + c);
                        if (const auto k = fe.coef_index(j, c)) {
                            rec.fe[cell] = fe.coef[*k];
                            rec.fe_se[cell] = fe_se[*k];
                        }
                        if (const auto k = ffe.coef_index(j, c)) {
                            rec.ffe[cell] = ffe.coef[*k];
                            rec.ffe_se[cell] = ffe_se[*k];
                        }
                    }
                }
                for (int j = 0; j + 1 < regimes; ++j) {
                    try {
                        rec.wald_p.push_back(wald_slope_change(fe, j).p_value);
                    } catch (const NotTestable&) {
                        rec.wald_p.push_back(nan);
                    }
                }
                recs[static_cast<std::size_t>(r)] = std::move(rec);
            });

            std::vector<int> ti_columns;
            if (cfg.intercept) ti_columns.push_back(0);
            const auto collect = [&](auto member, auto se_member, std::size_t cell, std::vector<double>& est,
                                     std::vector<double>& se) {
                est.clear();
                se.clear();
                for (const SlopeRep& rec : recs) {
                    const double v = (rec.*member)[cell];
                    if (std::isnan(v)) continue;
                    est.push_back(v);
                    if (se_member) se.push_back((rec.*se_member)[cell]);
                }
            };
            std::vector<double> est, se;
            for (int j = 0; j < regimes; ++j) {
                for (int c = 0; c < p; ++c) {
                    const auto cell = static_cast<std::size_t>(j * p + c);
                    const double b = cfg.beta[static_cast<std::size_t>(j)][c];
                    const bool contrast = std::find(ti_columns.begin(), ti_columns.end(), c) != ti_columns.end();
                    collect(&SlopeRep::ols, static_cast<std::vector<double> SlopeRep::*>(nullptr), cell, est, se);
                    out.slopes.push_back({"OLS", j, c, summarize(est, {}, b)});
                    collect(&SlopeRep::fe, &SlopeRep::fe_se, cell, est, se);
                    if (!est.empty()) out.slopes.push_back({"FE", j, c, summarize(est, se, b)});
                    collect(&SlopeRep::ffe, &SlopeRep::ffe_se, cell, est, se);
                    if (!est.empty())
                        out.slopes.push_back({contrast ? "FFE-contrast" : "FFE", j, c,
                                              summarize(est, se, contrast ? b - cfg.beta[0][c] : b)});
                }
            }
            out.wald_rejections.assign(static_cast<std::size_t>(std::max(0, regimes - 1)), 0);
            for (const SlopeRep& rec : recs)
                for (std::size_t j = 0; j < rec.wald_p.size(); ++j)
                    if (!std::isnan(rec.wald_p[j]) && rec.wald_p[j] < opt.alpha) ++out.wald_rejections[j];
            break;
        }
        case Experiment::Selection: {
            const int m_max = opt.m_max < 0 ? t_count - 1 : opt.m_max;
            std::vector<SelectionRep> recs(static_cast<std::size_t>(reps));
            parallel_for(reps, opt.threads, [&](int r) {
                recs[static_cast<std::size_t>(r)] = selection_rep(generate_panel(cfg, r).panel, opt.penalties, m_max);
            });
            out.selection = empty_selection(opt.penalties, m_max);
            for (const SelectionRep& rec : recs)
                for (std::size_t k = 0; k < rec.m_hat.size(); ++k)
                    ++out.selection[k].counts[static_cast<std::size_t>(rec.m_hat[k])];
            break;
        }
        case Experiment::MixingSweep: {
            for (double w : opt.sweep_values) {
                DGPConfig point = cfg;
                point.mixing_w = w;
                out.sweep.push_back(run_sweep_point(point, opt, w));
            }
            break;
        }
        case Experiment::BreakSizeSweep: {
            if (true_m < 1) throw InvalidArgument("simlab: break-size sweep needs at least one true break");
            for (double size : opt.sweep_values) {
                DGPConfig point = cfg;
                for (std::size_t j = 1; j < point.beta.size(); ++j)
                    point.beta[j] = (point.beta[0].array() + size * static_cast<double>(j)).matrix();
                out.sweep.push_back(run_sweep_point(point, opt, size));
            }
            break;
        }
    }
    return out;
}

}  // namespace panelcp
