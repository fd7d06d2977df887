#include "doctest.h"

#include <cmath>
#include <numeric>

#include "panelcp/error.hpp"
#include "panelcp/simlab.hpp"

using namespace panelcp;

namespace {

bool same_summary(const MCSummary& a, const MCSummary& b) {
    if (a.location_counts != b.location_counts || a.exact_hits != b.exact_hits ||
        a.contains_truth != b.contains_truth || a.wald_rejections != b.wald_rejections)
        return false;
    if (a.slopes.size() != b.slopes.size() || a.selection.size() != b.selection.size()) return false;
    for (std::size_t k = 0; k < a.slopes.size(); ++k) {
        const EstimatorSummary& x = a.slopes[k].summary;
        const EstimatorSummary& y = b.slopes[k].summary;
        if (x.mean != y.mean || x.sd != y.sd || x.mse != y.mse || !(x.se == y.se || (std::isnan(x.se) && std::isnan(y.se))))
            return false;
    }
    for (std::size_t k = 0; k < a.selection.size(); ++k)
        if (a.selection[k].counts != b.selection[k].counts) return false;
    return true;
}

}  // namespace

TEST_CASE("presets and the floor(T/3) rule") {
    CHECK(DGPConfig::third(20) == 6);
    CHECK(DGPConfig::third(30) == 10);
    CHECK(DGPConfig::third(50) == 16);
    CHECK(DGPConfig::third(20, true) == 7);
    const DGPConfig two = DGPConfig::two_breaks(500, 20);
    CHECK(two.breaks == std::vector<int>{6, 13});
    CHECK(two.beta.size() == 3);
    CHECK(two.beta[0][0] == -0.1);
    CHECK(two.beta[1][0] == 0.1);
    CHECK(two.beta[2][0] == -0.1);
    CHECK(DGPConfig::two_breaks(30, 30).breaks == std::vector<int>{10, 20});
    const DGPConfig bs = DGPConfig::break_size(0.02);
    CHECK(bs.n_individuals == 216);
    CHECK(bs.n_periods == 18);
    CHECK(bs.n_regressors == 15);
    CHECK(bs.breaks == std::vector<int>{14});
    CHECK((bs.beta[1] - bs.beta[0]).cwiseAbs().minCoeff() == doctest::Approx(0.02));
    CHECK((bs.beta[1] - bs.beta[0]).cwiseAbs().maxCoeff() == doctest::Approx(0.02));
}

TEST_CASE("config validation") {
    DGPConfig cfg = DGPConfig::single_break(50, 10, 3);
    CHECK_NOTHROW(cfg.validate());
    DGPConfig bad = cfg;
    bad.sigma_eps2 = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = cfg;
    bad.mixing_w = 1.5;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = cfg;
    bad.beta.pop_back();
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = cfg;
    bad.breaks = {10};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = cfg;
    bad.replications = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("experiment names") {
    CHECK(parse_experiment("Locations") == Experiment::Locations);
    CHECK(parse_experiment("breaksize") == Experiment::BreakSizeSweep);
    CHECK(to_string(Experiment::MixingSweep) == "mixing");
    CHECK_THROWS_AS(parse_experiment("table9"), InvalidArgument);
}

TEST_CASE("generated panel: model identity and moments") {
    DGPConfig cfg = DGPConfig::single_break(4000, 20, 6);
    const SimulatedPanel sim = generate_panel(cfg, 0);
    const PanelData& p = sim.panel;
    double sx = 0, sxx = 0, sxc = 0, sc = 0;
    const double nt = 4000.0 * 20.0;
    for (int t = 1; t <= 20; ++t)
        for (int i = 0; i < 4000; ++i) {
            const double x = p.x(i, t, 0);
            sx += x;
            sxx += x * x;
            sxc += x * sim.effects[i];
            sc += sim.effects[i];
        }
    const double var_x = sxx / nt - (sx / nt) * (sx / nt);
    const double cov_xc = sxc / nt - (sx / nt) * (sc / nt);
    CHECK(var_x == doctest::Approx(1.0).epsilon(0.03));
    CHECK(cov_xc / var_x == doctest::Approx(std::sqrt(2.0) / 4.0).epsilon(0.05));
    CHECK(sim.effects.array().square().mean() == doctest::Approx(0.25).epsilon(0.05));
    // residual of the model equation has variance sigma_eps2
    double se = 0;
    for (int t = 1; t <= 20; ++t)
        for (int i = 0; i < 4000; ++i) {
            const double e = p.y(i, t) - p.x(i, t, 0) * sim.beta[t <= 6 ? 0 : 1][0] - sim.effects[i];
            se += e * e;
        }
    CHECK(se / nt == doctest::Approx(0.25).epsilon(0.03));
}

TEST_CASE("cross-sectional share of the regressor noise is about 1/T at w = 0") {
    const DGPConfig cfg = DGPConfig::no_break(2000, 20);
    const SimulatedPanel sim = generate_panel(cfg, 3);
    double between = 0.0, total = 0.0, grand = 0.0;
    for (int t = 1; t <= 20; ++t)
        for (int i = 0; i < 2000; ++i) grand += (sim.panel.x(i, t, 0) - cfg.loading * sim.effects[i]) / 40000.0;
    for (int i = 0; i < 2000; ++i) {
        double m = 0.0;
        for (int t = 1; t <= 20; ++t) m += (sim.panel.x(i, t, 0) - cfg.loading * sim.effects[i]) / 20.0;
        for (int t = 1; t <= 20; ++t) {
            const double e = sim.panel.x(i, t, 0) - cfg.loading * sim.effects[i];
            total += (e - grand) * (e - grand);
            between += (m - grand) * (m - grand);
        }
    }
    CHECK(between / total == doctest::Approx(0.05).epsilon(0.1));
}

TEST_CASE("intercept and multi-regressor panels") {
    DGPConfig cfg = DGPConfig::single_break(30, 6, 2);
    cfg.intercept = true;
    cfg.n_regressors = 3;
    cfg.beta = DGPConfig::alternating_beta(2, cfg.n_columns());
    const SimulatedPanel sim = generate_panel(cfg, 1);
    CHECK(sim.panel.n_regressors() == 4);
    CHECK(sim.panel.has_intercept());
    CHECK(sim.panel.regressor_names() == std::vector<std::string>{"const", "x1", "x2", "x3"});
    CHECK(sim.panel.x_values().col(0).isOnes(0.0));
}

TEST_CASE("determinism and per-replication streams") {
    const DGPConfig cfg = DGPConfig::two_breaks(50, 10);
    const SimulatedPanel a = generate_panel(cfg, 4);
    const SimulatedPanel b = generate_panel(cfg, 4);
    CHECK(a.panel.y_values() == b.panel.y_values());
    CHECK(a.panel.x_values() == b.panel.x_values());
    CHECK(a.panel.y_values() != generate_panel(cfg, 5).panel.y_values());
    DGPConfig other = cfg;
    other.seed += 1;
    CHECK(a.panel.y_values() != generate_panel(other, 4).panel.y_values());
}

TEST_CASE("summaries are identical across thread counts and repeated runs") {
    DGPConfig cfg = DGPConfig::two_breaks(100, 10);
    cfg.replications = 24;
    for (Experiment kind : {Experiment::Locations, Experiment::Slopes, Experiment::Selection}) {
        ExperimentOptions one;
        one.kind = kind;
        one.threads = 1;
        ExperimentOptions many = one;
        many.threads = 4;
        const MCSummary a = run_monte_carlo(cfg, one);
        CHECK(same_summary(a, run_monte_carlo(cfg, many)));
        CHECK(same_summary(a, run_monte_carlo(cfg, one)));
    }
}

TEST_CASE("summarize") {
    const std::vector<double> one{0.7};
    const EstimatorSummary s1 = summarize(one, {}, 0.5);
    CHECK(s1.bias == doctest::Approx(0.2));
    CHECK(s1.mse == doctest::Approx(0.04));
    CHECK(std::isnan(s1.se));

    const std::vector<double> exact(5, 1.25);
    const EstimatorSummary s2 = summarize(exact, {}, 1.25);
    CHECK(s2.bias == 0.0);
    CHECK(s2.mse == 0.0);

    std::vector<double> stream(1000), ses(1000);
    for (int k = 0; k < 1000; ++k) {
        stream[static_cast<std::size_t>(k)] = 0.3 + 0.01 * std::sin(0.37 * k) + 1e-4 * (k % 7);
        ses[static_cast<std::size_t>(k)] = 0.02 + 1e-3 * std::cos(k);
    }
    const double truth = 0.29;
    long double mean = 0, mse = 0, se = 0;
    for (int k = 0; k < 1000; ++k) {
        mean += stream[static_cast<std::size_t>(k)] / 1000.0L;
        mse += (stream[static_cast<std::size_t>(k)] - truth) * (stream[static_cast<std::size_t>(k)] - truth) / 1000.0L;
        se += ses[static_cast<std::size_t>(k)] / 1000.0L;
    }
    long double ss = 0;
    for (double v : stream) ss += (v - mean) * (v - mean);
    const EstimatorSummary s3 = summarize(stream, ses, truth);
    CHECK(std::abs(s3.mean - static_cast<double>(mean)) <= 1e-12);
    CHECK(std::abs(s3.bias - static_cast<double>(mean - truth)) <= 1e-12);
    CHECK(std::abs(s3.mse - static_cast<double>(mse)) <= 1e-12);
    CHECK(std::abs(s3.se - static_cast<double>(se)) <= 1e-12);
    CHECK(std::abs(s3.sd - std::sqrt(static_cast<double>(ss / 999))) <= 1e-12);
    CHECK(s3.mse >= s3.bias * s3.bias);
}

TEST_CASE("location experiment: histograms sum to the replication count") {
    DGPConfig cfg = DGPConfig::two_breaks(200, 12);
    cfg.replications = 30;
    ExperimentOptions opt;
    opt.kind = Experiment::Locations;
    const MCSummary mc = run_monte_carlo(cfg, opt);
    CHECK(mc.m_used == 2);
    REQUIRE(mc.location_counts.size() == 2);
    for (const auto& h : mc.location_counts) CHECK(std::accumulate(h.begin(), h.end(), 0) == 30);
    CHECK(mc.exact_hits <= mc.contains_truth);
    opt.forced_m = 3;
    const MCSummary sup = run_monte_carlo(cfg, opt);
    CHECK(sup.m_used == 3);
    CHECK(sup.exact_hits == 0);
    CHECK(sup.location_counts.size() == 3);
}

TEST_CASE("slope experiment: rows, MSE bound and Wald counts") {
    DGPConfig cfg = DGPConfig::single_break(200, 10, 3);
    cfg.replications = 20;
    cfg.intercept = true;
    cfg.beta = DGPConfig::alternating_beta(2, 2);
    ExperimentOptions opt;
    opt.kind = Experiment::Slopes;
    const MCSummary mc = run_monte_carlo(cfg, opt);
    int ols = 0, fe = 0, ffe = 0, contrast = 0;
    for (const SlopeRow& r : mc.slopes) {
        CHECK(r.summary.mse >= r.summary.bias * r.summary.bias);
        CHECK(r.summary.count == 20);
        ols += r.estimator == "OLS";
        fe += r.estimator == "FE";
        ffe += r.estimator == "FFE";
        contrast += r.estimator == "FFE-contrast";
        if (r.estimator == "FFE-contrast") CHECK(r.summary.truth == doctest::Approx(cfg.beta[1][0] - cfg.beta[0][0]));
    }
    CHECK(ols == 4);
    CHECK(fe == 2);   // intercept not identified by FE
    CHECK(ffe == 2);
    CHECK(contrast == 1);
    CHECK(mc.wald_rejections.size() == 1);
    CHECK(mc.wald_rejections[0] <= 20);
}

TEST_CASE("selection and sweep experiments") {
    DGPConfig cfg = DGPConfig::single_break(100, 8, 4);
    cfg.replications = 12;
    ExperimentOptions opt;
    opt.kind = Experiment::Selection;
    opt.m_max = 3;
    const MCSummary sel = run_monte_carlo(cfg, opt);
    REQUIRE(sel.selection.size() == 2);
    for (const SelectionCounts& s : sel.selection) {
        CHECK(s.counts.size() == 4);
        CHECK(std::accumulate(s.counts.begin(), s.counts.end(), 0) == 12);
    }

    opt.kind = Experiment::MixingSweep;
    opt.sweep_values = {0.0, 0.5};
    const MCSummary mix = run_monte_carlo(cfg, opt);
    REQUIRE(mix.sweep.size() == 2);
    CHECK(mix.sweep[1].value == 0.5);
    for (const SweepPoint& pt : mix.sweep) {
        const auto& c = pt.selection.front().counts;
        CHECK(pt.conditioned == c[1]);
        CHECK(std::accumulate(pt.location_counts[0].begin(), pt.location_counts[0].end(), 0) == pt.conditioned);
    }

    opt.kind = Experiment::BreakSizeSweep;
    opt.sweep_values = {0.0, 0.3};
    const MCSummary size = run_monte_carlo(cfg, opt);
    REQUIRE(size.sweep.size() == 2);
    // a large break is found far more often than no break at all
    CHECK(size.sweep[1].conditioned > size.sweep[0].conditioned);
    DGPConfig flat = DGPConfig::no_break(100, 8);
    flat.replications = 2;
    CHECK_THROWS_AS(run_monte_carlo(flat, opt), InvalidArgument);
}
