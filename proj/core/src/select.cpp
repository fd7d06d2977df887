#include "panelcp/select.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <string>

#include "panelcp/error.hpp"

namespace panelcp {

Penalty parse_penalty(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (lower == "hqic") return Penalty::HQIC;
    if (lower == "bic") return Penalty::BIC;
    if (lower == "aic") return Penalty::AIC;
    throw InvalidArgument("select: unknown penalty '" + std::string(name) + "' (expected hqic, bic or aic)");
}

std::string_view to_string(Penalty kind) noexcept {
    switch (kind) {
        case Penalty::HQIC: return "hqic";
        case Penalty::BIC: return "bic";
        case Penalty::AIC: return "aic";
    }
    return "?";
}

double penalty_weight(Penalty kind, long long n_individuals, long long n_periods) {
    const long long nt = n_individuals * n_periods;
    if (n_individuals <= 0 || n_periods <= 0 || nt < 3)
        throw InvalidArgument("select: penalty needs NT >= 3, got NT=" + std::to_string(nt));
    const double x = static_cast<double>(nt);
    switch (kind) {
        case Penalty::HQIC: return std::log(std::log(x)) / x;
        case Penalty::BIC: return std::log(x) / x;
        case Penalty::AIC: return 2.0 / x;
    }
    return 0.0;
}

int param_count(int m, int p) {
    if (m < 0 || p < 1) throw InvalidArgument("select: param_count needs m >= 0 and p >= 1");
    return 3 * m + (m + 1) * p;
}

ICCurve select_m(const DetectionResult& detection, int n_regressors, const ICConfig& cfg) {
    int m_max = cfg.m_max < 0 ? detection.m_max() : cfg.m_max;
    if (m_max > detection.m_max() || m_max > detection.n_periods - 1) {
        std::ostringstream os;
        os << "select: m_max=" << m_max << " exceeds the detected range 0.." << detection.m_max();
        throw InvalidArgument(os.str());
    }
    ICCurve curve;
    curve.penalty = cfg.penalty;
    curve.penalty_weight = penalty_weight(cfg.penalty, detection.n_individuals, detection.n_periods);
    for (int m = 0; m <= m_max; ++m) {
        const double s_nt = detection.at(m).s_nt;
        if (!(s_nt > 0.0)) {
            std::ostringstream os;
            os << "select: degenerate fit, S_NT is zero at m=" << m;
            throw DegenerateFit(os.str(), m);
        }
        const int p_star = param_count(m, n_regressors);
        curve.p_star.push_back(p_star);
        curve.ic.push_back(std::log(s_nt) + p_star * curve.penalty_weight);
    }
    curve.m_hat = static_cast<int>(std::min_element(curve.ic.begin(), curve.ic.end()) - curve.ic.begin());
    return curve;
}

ICCurve select_m(DetectionResult& detection, int n_regressors, const ICConfig& cfg) {
    ICCurve curve = select_m(static_cast<const DetectionResult&>(detection), n_regressors, cfg);
    detection.m_hat = curve.m_hat;
    return curve;
}

}  // namespace panelcp
