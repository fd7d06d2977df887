#pragma once

#include <string_view>
#include <vector>

#include "panelcp/detect.hpp"

namespace panelcp {

enum class Penalty { HQIC, BIC, AIC };

Penalty parse_penalty(std::string_view name);  // "hqic" | "bic" | "aic", case-insensitive
std::string_view to_string(Penalty kind) noexcept;

struct ICConfig {
    Penalty penalty = Penalty::HQIC;
    int m_max = -1;  // -1: everything the detection result holds
};

struct ICCurve {
    Penalty penalty = Penalty::HQIC;
    double penalty_weight = 0.0;
    std::vector<double> ic;
    std::vector<int> p_star;
    int m_hat = 0;
};

// HQIC: log(log(NT))/NT, BIC: log(NT)/NT, AIC: 2/(NT). Requires NT >= 3.
double penalty_weight(Penalty kind, long long n_individuals, long long n_periods);

// Effective parameter count 3m + (m + 1)p.
int param_count(int m, int p);

// IC(m) = log S_NT(m) + p*_m * penalty. m_hat is the smallest minimizer.
// Throws DegenerateFit if some S_NT(m) is zero.
ICCurve select_m(const DetectionResult& detection, int n_regressors, const ICConfig& cfg = {});

// select_m, then records m_hat on the detection result.
ICCurve select_m(DetectionResult& detection, int n_regressors, const ICConfig& cfg = {});

}  // namespace panelcp
