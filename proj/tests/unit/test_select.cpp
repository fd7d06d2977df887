#include "doctest.h"

#include <cmath>
#include <map>

#include "oracle.hpp"
#include "panelcp/detect.hpp"
#include "panelcp/error.hpp"
#include "panelcp/select.hpp"
#include "panelcp/simlab.hpp"

using namespace panelcp;

TEST_CASE("penalty weights") {
    CHECK(penalty_weight(Penalty::HQIC, 500, 20) == doctest::Approx(2.2204e-4).epsilon(1e-4));
    CHECK(penalty_weight(Penalty::HQIC, 500, 20) == doctest::Approx(std::log(std::log(10000.0)) / 10000.0));
    CHECK(penalty_weight(Penalty::BIC, 500, 20) == doctest::Approx(9.2103e-4).epsilon(1e-4));
    CHECK(penalty_weight(Penalty::AIC, 500, 20) == doctest::Approx(2e-4));
    CHECK(penalty_weight(Penalty::HQIC, 3, 1) > 0.0);
    CHECK_THROWS_AS(penalty_weight(Penalty::HQIC, 1, 2), InvalidArgument);
}

TEST_CASE("penalty parsing") {
    CHECK(parse_penalty("HQIC") == Penalty::HQIC);
    CHECK(parse_penalty("bic") == Penalty::BIC);
    CHECK(parse_penalty("Aic") == Penalty::AIC);
    CHECK(to_string(Penalty::BIC) == "bic");
    CHECK_THROWS_AS(parse_penalty("cv"), InvalidArgument);
}

TEST_CASE("parameter count") {
    CHECK(param_count(0, 1) == 1);
    CHECK(param_count(1, 1) == 5);
    CHECK(param_count(2, 3) == 15);
    for (int p = 1; p <= 4; ++p)
        for (int m = 0; m < 10; ++m) CHECK(param_count(m + 1, p) > param_count(m, p));
}

TEST_CASE("ic curve: direct recomputation and smallest argmin") {
    std::mt19937_64 rng(1);
    const PanelData p = oracle::random_panel(rng, 20, 8, 2);
    DetectionResult det = detect_breaks(p);
    const ICCurve curve = select_m(det, 2, {Penalty::BIC, -1});
    REQUIRE(curve.ic.size() == 8);
    const double w = std::log(160.0) / 160.0;
    CHECK(curve.penalty_weight == doctest::Approx(w));
    int best = 0;
    for (int m = 0; m < 8; ++m) {
        const double ic = std::log(det.at(m).sse / 160.0) + (3 * m + (m + 1) * 2) * w;
        CHECK(curve.ic[static_cast<std::size_t>(m)] == doctest::Approx(ic).epsilon(1e-13));
        if (ic < curve.ic[static_cast<std::size_t>(best)]) best = m;
    }
    CHECK(curve.m_hat == best);
    CHECK(det.m_hat == best);
    CHECK(select_m(det, 2, {Penalty::BIC, 3}).ic.size() == 4);
    CHECK_THROWS_AS(select_m(det, 2, {Penalty::BIC, 9}), InvalidArgument);
}

TEST_CASE("ties in the ic curve go to the smaller m") {
    const double w = penalty_weight(Penalty::AIC, 10, 4);
    // Search neighbouring doubles for S_NT(0), S_NT(1) whose IC values agree bit for bit.
    std::map<double, double> ic0;
    double s0 = 1.5;
    for (int k = 0; k < 4000; ++k, s0 = std::nextafter(s0, 2.0)) ic0.emplace(std::log(s0) + 1 * w, s0);
    double s1 = 1.5 * std::exp(-4.0 * w);
    for (int k = 0; k < 2000; ++k) s1 = std::nextafter(s1, 0.0);
    bool tied = false;
    for (int k = 0; k < 8000 && !tied; ++k) {
        const auto it = ic0.find(std::log(s1) + 5 * w);
        if (it != ic0.end()) {
            s0 = it->second;
            tied = true;
        } else {
            s1 = std::nextafter(s1, 2.0);
        }
    }
    REQUIRE(tied);
    DetectionResult det;
    det.n_individuals = 10;
    det.n_periods = 4;
    const double s_nt[] = {s0, s1, s1 * 0.999, s1 * 0.998};
    for (int m = 0; m <= 3; ++m) {
        std::vector<int> b;
        for (int k = 1; k <= m; ++k) b.push_back(k);
        det.fits.push_back({Partition(b, 4), s_nt[m] * 40.0, s_nt[m], {}, {}});
    }
    const ICCurve curve = select_m(det, 1, {Penalty::AIC, -1});
    CHECK(curve.ic[0] == curve.ic[1]);
    CHECK(curve.ic[2] > curve.ic[0]);
    CHECK(curve.m_hat == 0);
}

TEST_CASE("degenerate fit is reported with its m") {
    std::mt19937_64 rng(2);
    const PanelData p0 = oracle::random_panel(rng, 6, 4, 1);
    const PanelData p = p0.with_outcome(3.0 * p0.x_values().col(0));
    const DetectionResult det = detect_breaks(p);
    try {
        select_m(det, 1, {});
        FAIL("expected DegenerateFit");
    } catch (const DegenerateFit& e) {
        CHECK(e.m() == 0);
    }
}

TEST_CASE("m_hat is invariant to scaling y") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        const DGPConfig cfg = DGPConfig::single_break(40, 8, 3);
        const PanelData p = generate_panel(cfg, rep).panel;
        const DetectionResult a = detect_breaks(p);
        for (double k : {0.001, 0.5, 3.0, 1e4}) {
            const DetectionResult b = detect_breaks(p.with_outcome(k * p.y_values()));
            for (Penalty pen : {Penalty::HQIC, Penalty::BIC, Penalty::AIC}) {
                const ICCurve ca = select_m(a, 1, {pen, -1});
                const ICCurve cb = select_m(b, 1, {pen, -1});
                CHECK(ca.m_hat == cb.m_hat);
                for (std::size_t m = 0; m < ca.ic.size(); ++m)
                    CHECK(cb.ic[m] - ca.ic[m] == doctest::Approx(2.0 * std::log(k)).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("heavier penalty never selects more breaks") {
    for (int rep = 0; rep < 20; ++rep) {
        const PanelData p = generate_panel(DGPConfig::two_breaks(60, 9), rep).panel;
        const DetectionResult det = detect_breaks(p);
        const int aic = select_m(det, 1, {Penalty::AIC, -1}).m_hat;
        const int hq = select_m(det, 1, {Penalty::HQIC, -1}).m_hat;
        const int bic = select_m(det, 1, {Penalty::BIC, -1}).m_hat;
        // NT = 540: log log NT < 2 < log NT, so HQIC < AIC < BIC
        CHECK(penalty_weight(Penalty::HQIC, 60, 9) < penalty_weight(Penalty::AIC, 60, 9));
        CHECK(hq >= aic);
        CHECK(aic >= bic);
    }
}

TEST_CASE("hqic recovers the true m on moderate samples") {
    for (int true_m = 0; true_m <= 2; ++true_m) {
        DGPConfig cfg = true_m == 0 ? DGPConfig::no_break(500, 20)
                        : true_m == 1 ? DGPConfig::single_break(500, 20, 6)
                                      : DGPConfig::two_breaks(500, 20);
        int hits = 0;
        const int reps = 30;
        for (int r = 0; r < reps; ++r) {
            const DetectionResult det = detect_breaks(generate_panel(cfg, r).panel);
            hits += select_m(det, 1, {Penalty::HQIC, -1}).m_hat == true_m;
        }
        CHECK(hits >= 0.8 * reps);
    }
}
