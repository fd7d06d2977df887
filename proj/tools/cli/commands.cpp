#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "panelcp/detect.hpp"
#include "panelcp/error.hpp"
#include "panelcp/infer.hpp"

namespace panelcp::cli {
namespace {

std::string num(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// Writes to the caller's stream and to <out_dir>/run.log.
class RunLog {
public:
    RunLog(const std::filesystem::path& dir, std::ostream& echo) : echo_(echo) {
        std::filesystem::create_directories(dir);
        file_.open(dir / "run.log");
        if (!file_) throw InvalidArgument("cli: cannot write run.log in '" + dir.string() + "'");
    }
    template <typename... Args>
    void line(const Args&... args) {
        std::ostringstream os;
        (os << ... << args);
        echo_ << os.str() << '\n';
        file_ << os.str() << '\n';
    }

private:
    std::ostream& echo_;
    std::ofstream file_;
};

std::ofstream open_report(const std::filesystem::path& dir, const std::string& name) {
    std::ofstream out(dir / name);
    if (!out) throw InvalidArgument("cli: cannot write '" + (dir / name).string() + "'");
    return out;
}

std::string join(const std::vector<int>& v, const char* sep = " ") {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? sep : "") + std::to_string(v[k]);
    return s;
}

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

struct Loaded {
    LoadedPanel data;
    const std::string& label(int t) const { return data.periods[static_cast<std::size_t>(t - 1)]; }
    const std::string& name(int c) const { return data.panel.regressor_names()[static_cast<std::size_t>(c)]; }
};

Loaded load(const RunConfig& cfg, RunLog& log) {
    Loaded l{load_csv(cfg.input, cfg.roles)};
    const PanelData& p = l.data.panel;
    log.line("input: ", cfg.input.string(), " (N=", p.n_individuals(), ", T=", p.n_periods(), ", p=", p.n_regressors(),
             p.has_intercept() ? ", intercept" : "", ")");
    return l;
}

struct Selected {
    DetectionResult detection;
    std::optional<ICCurve> curve;
    Partition partition = Partition::none(2);
    int m = 0;
};

// Detection plus IC selection, or the fixed-m fit when --m is given.
Selected choose_partition(const RunConfig& cfg, const PanelData& panel, RunLog& log) {
    const int t_count = panel.n_periods();
    int m_max = cfg.m_max < 0 ? t_count - 1 : std::min(cfg.m_max, t_count - 1);
    if (cfg.fixed_m) {
        if (*cfg.fixed_m < 0 || *cfg.fixed_m > t_count - 1) {
            std::ostringstream os;
            os << "cli: --m=" << *cfg.fixed_m << " outside 0.." << t_count - 1;
            throw InvalidArgument(os.str());
        }
        m_max = std::max(m_max, *cfg.fixed_m);
    }
    Selected s{detect_breaks(panel, m_max), std::nullopt, Partition::none(t_count), 0};
    try {
        s.curve = select_m(s.detection, panel.n_regressors(), {cfg.penalty, m_max});
    } catch (const DegenerateFit& e) {
        if (!cfg.fixed_m) throw;
        log.line("warning: ", e.what(), "; IC curve omitted");
    }
    s.m = cfg.fixed_m ? *cfg.fixed_m : s.curve->m_hat;
    s.partition = s.detection.at(s.m).partition;
    if (cfg.fixed_m)
        log.line("m fixed at ", s.m, cfg.fixed_m && s.curve ? " (IC would select " + std::to_string(s.curve->m_hat) + ")" : "");
    else
        log.line("selected m = ", s.m, " by ", to_string(cfg.penalty), " over 0..", m_max);
    return s;
}

std::string regime_label(const Loaded& l, const Regime& r) { return l.label(r.first) + "-" + l.label(r.last); }

void log_breaks(RunLog& log, const Loaded& l, const Partition& part) {
    if (part.n_breaks() == 0) {
        log.line("breaks: none");
        return;
    }
    std::string s;
    for (int b : part.breaks()) s += " " + std::to_string(b) + " (" + l.label(b) + ")";
    log.line("breaks:", s);
}

}  // namespace

void RunConfig::validate(bool needs_input) const {
    if (needs_input && input.empty()) throw InvalidArgument("cli: --input is required");
    if (roles.id == roles.time || roles.id == roles.outcome || roles.time == roles.outcome)
        throw InvalidArgument("cli: id, time and outcome columns must be distinct");
    for (const auto& r : roles.regressors)
        if (r == roles.id || r == roles.time || r == roles.outcome)
            throw InvalidArgument("cli: regressor '" + r + "' duplicates a role column");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("cli: --alpha must lie in (0, 1)");
    if (m_max < -1) throw InvalidArgument("cli: --m-max must be non-negative");
    if (simulate.replications < 1) throw InvalidArgument("cli: --reps must be at least 1");
    if (simulate.regressors < 1) throw InvalidArgument("cli: --p must be at least 1");
}

void cmd_detect(const RunConfig& cfg, std::ostream& echo) {
    cfg.validate(true);
    RunLog log(cfg.out_dir, echo);
    log.line("command: detect");
    const Loaded l = load(cfg, log);
    const PanelData& panel = l.data.panel;
    const Selected s = choose_partition(cfg, panel, log);
    log_breaks(log, l, s.partition);

    auto breaks = open_report(cfg.out_dir, "breaks.csv");
    breaks << "break,period_index,period_label\n";
    for (int j = 0; j < s.partition.n_breaks(); ++j) {
        const int b = s.partition.breaks()[static_cast<std::size_t>(j)];
        breaks << j + 1 << ',' << b << ',' << quote(l.label(b)) << '\n';
    }

    auto ic = open_report(cfg.out_dir, "ic_curve.csv");
    ic << "m,p_star,sse,s_nt,ic,selected,breaks\n";
    for (int m = 0; m <= s.detection.m_max(); ++m) {
        const BreakFit& fit = s.detection.at(m);
        const bool have = s.curve && m < static_cast<int>(s.curve->ic.size());
        ic << m << ',' << param_count(m, panel.n_regressors()) << ',' << num(fit.sse) << ',' << num(fit.s_nt) << ','
           << (have ? num(s.curve->ic[static_cast<std::size_t>(m)]) : "") << ',' << (m == s.m ? 1 : 0) << ','
           << join(fit.partition.breaks()) << '\n';
    }

    auto ols = open_report(cfg.out_dir, "regime_ols.csv");
    ols << "regime,first,last,first_label,last_label,column,name,gamma,full_rank\n";
    const BreakFit& fit = s.detection.at(s.m);
    for (int j = 0; j < s.partition.n_regimes(); ++j) {
        const Regime r = s.partition.regime(j);
        for (int c = 0; c < panel.n_regressors(); ++c)
            ols << j + 1 << ',' << r.first << ',' << r.last << ',' << quote(l.label(r.first)) << ','
                << quote(l.label(r.last)) << ',' << c << ',' << quote(l.name(c)) << ','
                << num(fit.gamma[static_cast<std::size_t>(j)][c]) << ','
                << (fit.full_rank[static_cast<std::size_t>(j)] ? 1 : 0) << '\n';
        if (!fit.full_rank[static_cast<std::size_t>(j)])
            log.line("warning: regime ", j + 1, " pooled Gram is rank deficient (minimum-norm gamma reported)");
    }
    log.line("wrote breaks.csv, ic_curve.csv, regime_ols.csv to ", cfg.out_dir.string());
}

void cmd_estimate(const RunConfig& cfg, std::ostream& echo) {
    cfg.validate(true);
    RunLog log(cfg.out_dir, echo);
    log.line("command: estimate (vcov ", to_string(cfg.vcov), ")");
    const Loaded l = load(cfg, log);
    const PanelData& panel = l.data.panel;
    const Selected s = choose_partition(cfg, panel, log);
    log_breaks(log, l, s.partition);
    const int p = panel.n_regressors();

    const FEEstimate fe = fe_estimate(panel, s.partition, cfg.vcov);
    const Vector fe_se = fe.se();
    for (const auto& w : fe.warnings) log.line("warning: FE: ", w);
    for (int j : fe.singletons) log.line("note: regime ", j + 1, " has one period and no FE estimate");
    auto fe_out = open_report(cfg.out_dir, "fe.csv");
    fe_out << "regime,period_range,column,name,identified,coef,se,t_stat\n";
    for (int j = 0; j < s.partition.n_regimes(); ++j) {
        const std::string range = quote(regime_label(l, s.partition.regime(j)));
        for (int c = 0; c < p; ++c) {
            fe_out << j + 1 << ',' << range << ',' << c << ',' << quote(l.name(c)) << ',';
            if (const auto k = fe.coef_index(j, c))
                fe_out << "1," << num(fe.coef[*k]) << ',' << num(fe_se[*k]) << ',' << num(fe.coef[*k] / fe_se[*k]) << '\n';
            else
                fe_out << "0,,,\n";
        }
    }
    log.line("FE: sigma2 = ", num(fe.sigma2), ", ", fe.coef.size(), " coefficients");

    const FFEEstimate ffe = ffe_estimate(panel, s.partition, cfg.vcov);
    const Vector ffe_se = ffe.se();
    for (const auto& w : ffe.warnings) log.line("warning: FFE: ", w);
    auto ffe_out = open_report(cfg.out_dir, "ffe.csv");
    ffe_out << "regime,period_range,column,name,contrast,coef,se,t_stat\n";
    for (std::size_t k = 0; k < ffe.basis.size(); ++k) {
        const FFECoef& b = ffe.basis[k];
        const auto e = static_cast<Eigen::Index>(k);
        ffe_out << b.regime + 1 << ',' << quote(regime_label(l, s.partition.regime(b.regime))) << ',' << b.column << ','
                << quote(l.name(b.column)) << ',' << (b.contrast ? 1 : 0) << ',' << num(ffe.coef[e]) << ','
                << num(ffe_se[e]) << ',' << num(ffe.coef[e] / ffe_se[e]) << '\n';
    }
    auto con = open_report(cfg.out_dir, "ffe_contrasts.csv");
    con << "column,name,regime,value,se\n";
    for (const FFEContrast& c : ffe.contrast_table)
        con << c.column << ',' << quote(l.name(c.column)) << ',' << c.regime + 1 << ',' << num(c.value) << ','
            << num(c.se) << '\n';
    log.line("FFE: sigma2 = ", num(ffe.sigma2), ", plug-in form ",
             cfg.vcov == VcovKind::Plugin ? ffe.plugin_form : std::string("n/a (cluster)"));
    log.line("wrote fe.csv, ffe.csv, ffe_contrasts.csv to ", cfg.out_dir.string());
}

void cmd_test(const RunConfig& cfg, std::ostream& echo) {
    cfg.validate(true);
    RunLog log(cfg.out_dir, echo);
    log.line("command: test (vcov ", to_string(cfg.vcov), ", alpha ", cfg.alpha, ")");
    const Loaded l = load(cfg, log);
    const PanelData& panel = l.data.panel;
    const Selected s = choose_partition(cfg, panel, log);
    log_breaks(log, l, s.partition);

    auto out = open_report(cfg.out_dir, "wald.csv");
    out << "test,break,break_label,statistic,df,p_value,per_test_level,reject,note\n";
    if (s.m == 0) {
        log.line("no breaks: nothing to test");
        return;
    }
    const FEEstimate fe = fe_estimate(panel, s.partition, cfg.vcov);
    const FFEEstimate ffe = ffe_estimate(panel, s.partition, cfg.vcov);

    const auto family = [&](const std::string& name, auto&& run) {
        std::vector<WaldResult> ok;
        std::vector<std::string> skipped(static_cast<std::size_t>(s.m));
        for (int j = 0; j < s.m; ++j) {
            try {
                ok.push_back(run(j));
            } catch (const NotTestable& e) {
                skipped[static_cast<std::size_t>(j)] = e.what();
            } catch (const RankError& e) {
                skipped[static_cast<std::size_t>(j)] = e.what();
            }
        }
        const BonferroniReport rep = bonferroni_adjust(ok, cfg.alpha, s.m);
        std::size_t k = 0;
        int rejections = 0;
        for (int j = 0; j < s.m; ++j) {
            const int b = s.partition.breaks()[static_cast<std::size_t>(j)];
            out << name << ',' << j + 1 << ',' << quote(l.label(b)) << ',';
            if (!skipped[static_cast<std::size_t>(j)].empty()) {
                out << ",,,," << ",\"" << skipped[static_cast<std::size_t>(j)] << "\"\n";
                log.line(name, " break ", j + 1, ": not testable (", skipped[static_cast<std::size_t>(j)], ")");
                continue;
            }
            const WaldResult& w = rep.tests[k];
            const bool reject = rep.reject[k++];
            rejections += reject;
            out << num(w.statistic) << ',' << w.df << ',' << num(w.p_value) << ',' << num(rep.per_test_level) << ','
                << (reject ? 1 : 0) << ",\n";
            log.line(name, " break ", j + 1, " (", l.label(b), "): W = ", num(w.statistic), ", df = ", w.df,
                     ", p = ", num(w.p_value), reject ? "  reject" : "");
        }
        log.line(name, ": ", rejections, " of ", s.m, " rejected at alpha/m = ", num(rep.per_test_level));
    };
    family("fe_slope", [&](int j) { return wald_slope_change(fe, j); });
    family("ffe_slope", [&](int j) { return wald_slope_change(ffe, j); });
    family("gram", [&](int j) { return wald_gram_change(panel, s.partition, j); });
    log.line("wrote wald.csv to ", cfg.out_dir.string());
}

DGPConfig simulation_config(const RunConfig& cfg) {
    const SimulateOptions& o = cfg.simulate;
    DGPConfig dgp;
    if (o.experiment == Experiment::BreakSizeSweep) {
        dgp = DGPConfig::break_size(0.0);
        if (o.regressors != 1) dgp.n_regressors = o.regressors;
    } else {
        dgp.n_individuals = 500;
        dgp.n_periods = 20;
        dgp.n_regressors = o.regressors;
        dgp.breaks.clear();
    }
    if (o.n) dgp.n_individuals = *o.n;
    if (o.t) dgp.n_periods = *o.t;
    if (o.breaks)
        dgp.breaks = *o.breaks;
    else if (o.experiment != Experiment::BreakSizeSweep || o.t)
        dgp.breaks = o.experiment == Experiment::BreakSizeSweep
                         ? std::vector<int>{dgp.n_periods - 4}
                         : std::vector<int>{DGPConfig::third(dgp.n_periods), 2 * dgp.n_periods / 3};
    dgp.intercept = cfg.roles.intercept;
    dgp.beta = DGPConfig::alternating_beta(static_cast<int>(dgp.breaks.size()) + 1, dgp.n_columns());
    if (o.experiment == Experiment::BreakSizeSweep) {
        // Every regime starts at the preset base; the sweep adds the break size.
        Vector base(dgp.n_columns());
        for (int k = 0; k < base.size(); ++k) base[k] = k % 2 == 0 ? -0.1 : 0.1;
        for (Vector& b : dgp.beta) b = base;
    }
    dgp.mixing_w = o.mixing_w;
    dgp.replications = o.replications;
    dgp.seed = cfg.seed;
    dgp.validate();
    return dgp;
}

void cmd_simulate(const RunConfig& cfg, std::ostream& echo) {
    cfg.validate(false);
    RunLog log(cfg.out_dir, echo);
    const SimulateOptions& o = cfg.simulate;
    const DGPConfig dgp = simulation_config(cfg);
    log.line("command: simulate ", to_string(o.experiment), " (N=", dgp.n_individuals, ", T=", dgp.n_periods,
             ", p=", dgp.n_columns(), ", breaks=[", join(dgp.breaks, ","), "], reps=", dgp.replications,
             ", seed=", dgp.seed, ")");

    if (o.export_panel) {
        const SimulatedPanel sim = generate_panel(dgp, 0);
        write_panel_csv(*o.export_panel, sim.panel);
        log.line("exported replication 0 to ", o.export_panel->string());
    }

    ExperimentOptions opt;
    opt.kind = o.experiment;
    opt.penalties = {cfg.penalty};
    for (Penalty p : {Penalty::HQIC, Penalty::BIC, Penalty::AIC})
        if (p != cfg.penalty) opt.penalties.push_back(p);
    opt.m_max = cfg.m_max;
    opt.forced_m = o.forced_m;
    opt.vcov = cfg.vcov;
    opt.alpha = cfg.alpha;
    opt.threads = o.threads;
    opt.sweep_values = o.sweep_values;
    if (opt.sweep_values.empty()) {
        if (o.experiment == Experiment::MixingSweep) opt.sweep_values = {0.0, 0.25, 0.5, 0.75, 1.0};
        if (o.experiment == Experiment::BreakSizeSweep) opt.sweep_values = {0.01, 0.0125, 0.015, 0.0175, 0.02};
    }
    const MCSummary mc = run_monte_carlo(dgp, opt);
    const double reps = mc.replications;

    switch (mc.kind) {
        case Experiment::Locations: {
            auto out = open_report(cfg.out_dir, "locations.csv");
            out << "break,t,count\n";
            for (std::size_t j = 0; j < mc.location_counts.size(); ++j)
                for (std::size_t t = 0; t < mc.location_counts[j].size(); ++t)
                    out << j + 1 << ',' << t + 1 << ',' << mc.location_counts[j][t] << '\n';
            auto sum = open_report(cfg.out_dir, "location_summary.csv");
            sum << "m_used,true_m,replications,exact_hits,contains_truth\n"
                << mc.m_used << ',' << mc.true_m << ',' << mc.replications << ',' << mc.exact_hits << ','
                << mc.contains_truth << '\n';
            log.line("m used ", mc.m_used, ": exact ", num(mc.exact_hits / reps), ", contains truth ",
                     num(mc.contains_truth / reps));
            log.line("wrote locations.csv, location_summary.csv");
            break;
        }
        case Experiment::Slopes: {
            auto out = open_report(cfg.out_dir, "slopes.csv");
            out << "estimator,regime,column,truth,count,mean,bias,se,sd,mse\n";
            for (const SlopeRow& r : mc.slopes) {
                const EstimatorSummary& s = r.summary;
                out << r.estimator << ',' << r.regime + 1 << ',' << r.column << ',' << num(s.truth) << ',' << s.count
                    << ',' << num(s.mean) << ',' << num(s.bias) << ',' << num(s.se) << ',' << num(s.sd) << ','
                    << num(s.mse) << '\n';
                log.line(r.estimator, " regime ", r.regime + 1, " col ", r.column, ": bias ", num(s.bias), ", se ",
                         num(s.se), ", sd ", num(s.sd), ", mse ", num(s.mse));
            }
            auto w = open_report(cfg.out_dir, "wald_rejections.csv");
            w << "break,rejections,replications,rate,alpha\n";
            for (std::size_t j = 0; j < mc.wald_rejections.size(); ++j)
                w << j + 1 << ',' << mc.wald_rejections[j] << ',' << mc.replications << ','
                  << num(mc.wald_rejections[j] / reps) << ',' << num(cfg.alpha) << '\n';
            log.line("wrote slopes.csv, wald_rejections.csv");
            break;
        }
        case Experiment::Selection: {
            auto out = open_report(cfg.out_dir, "selection.csv");
            out << "penalty,m,count,share\n";
            for (const SelectionCounts& s : mc.selection) {
                for (std::size_t m = 0; m < s.counts.size(); ++m)
                    out << to_string(s.penalty) << ',' << m << ',' << s.counts[m] << ',' << num(s.counts[m] / reps)
                        << '\n';
                const auto hit = static_cast<std::size_t>(mc.true_m) < s.counts.size()
                                     ? s.counts[static_cast<std::size_t>(mc.true_m)]
                                     : 0;
                log.line(to_string(s.penalty), ": P(m_hat = ", mc.true_m, ") = ", num(hit / reps));
            }
            log.line("wrote selection.csv");
            break;
        }
        case Experiment::MixingSweep:
        case Experiment::BreakSizeSweep: {
            auto out = open_report(cfg.out_dir, "sweep.csv");
            out << "value,penalty,m,count,share\n";
            auto loc = open_report(cfg.out_dir, "sweep_locations.csv");
            loc << "value,break,t,count,conditioned\n";
            for (const SweepPoint& pt : mc.sweep) {
                for (const SelectionCounts& s : pt.selection)
                    for (std::size_t m = 0; m < s.counts.size(); ++m)
                        out << num(pt.value) << ',' << to_string(s.penalty) << ',' << m << ',' << s.counts[m] << ','
                            << num(s.counts[m] / reps) << '\n';
                for (std::size_t j = 0; j < pt.location_counts.size(); ++j)
                    for (std::size_t t = 0; t < pt.location_counts[j].size(); ++t)
                        loc << num(pt.value) << ',' << j + 1 << ',' << t + 1 << ',' << pt.location_counts[j][t] << ','
                            << pt.conditioned << '\n';
                const auto& first = pt.selection.front().counts;
                const auto hit = static_cast<std::size_t>(mc.true_m) < first.size()
                                     ? first[static_cast<std::size_t>(mc.true_m)]
                                     : 0;
                log.line("value ", num(pt.value), ": P(m_hat = ", mc.true_m, ") = ", num(hit / reps), " under ",
                         to_string(pt.selection.front().penalty));
            }
            log.line("wrote sweep.csv, sweep_locations.csv");
            break;
        }
    }
}

}  // namespace panelcp::cli
