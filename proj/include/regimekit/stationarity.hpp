#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace regimekit::stationarity {

/// Deterministic terms in the test regression.
enum class Deterministic { None, Constant, ConstantTrend };

std::string to_string(Deterministic d);
Deterministic deterministic_from_string(std::string_view s);

enum class Decision { RejectNull, FailToReject };

enum class LagRule { Fixed, Aic };

/// Bandwidth for Newey-West (Bartlett) long-run variance estimates.
struct Bandwidth {
    enum class Rule { NeweyWestAuto, Fixed } rule = Rule::NeweyWestAuto;
    int lags = 0;  ///< used when rule == Fixed

    static Bandwidth automatic() { return {}; }
    static Bandwidth fixed(int l) { return {Rule::Fixed, l}; }
};

struct TestResult {
    std::string test;  ///< "adf", "pp" or "kpss"
    double statistic = 0.0;
    std::optional<double> p_value;          ///< absent for KPSS
    std::map<double, double> critical_values;  ///< keys 0.01, 0.05, 0.10
    int lags_used = 0;                       ///< ADF lag order or bandwidth
    Deterministic deterministic = Deterministic::Constant;
    Decision decision_hint = Decision::FailToReject;  ///< at 5%
    long nobs = 0;
    std::vector<std::string> warnings;

    /// True if the null is rejected at `level` (0.01, 0.05 or 0.10) by critical value.
    bool rejects_at(double level) const;

    bool operator==(const TestResult&) const = default;
};

/// Augmented Dickey-Fuller t-ratio on the lagged level in
/// dy_t = d_t + gamma y_{t-1} + sum_j delta_j dy_{t-j} + e_t.
/// With LagRule::Aic the order is chosen on a common sample over 0..max_lags, then refit.
TestResult adf_test(const Eigen::Ref<const Eigen::VectorXd>& y, int max_lags,
                    Deterministic spec = Deterministic::Constant, LagRule rule = LagRule::Fixed);

/// Phillips-Perron Z_t statistic.
TestResult pp_test(const Eigen::Ref<const Eigen::VectorXd>& y, Deterministic spec = Deterministic::Constant,
                   Bandwidth bandwidth = Bandwidth::automatic());

/// KPSS LM statistic; `spec` must be Constant or ConstantTrend.
TestResult kpss_test(const Eigen::Ref<const Eigen::VectorXd>& y, Deterministic spec = Deterministic::Constant,
                     Bandwidth bandwidth = Bandwidth::automatic());

/// MacKinnon (1994) response-surface p-value for a Dickey-Fuller tau statistic (one series).
double mackinnon_pvalue(double statistic, Deterministic spec);
/// MacKinnon (2010) finite-sample critical value at level 0.01, 0.05 or 0.10.
double mackinnon_critical_value(double level, Deterministic spec, long nobs);

}  // namespace regimekit::stationarity
