#pragma once

#include "regimekit/timeseries.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace regimekit::var {

/// x_t = intercept + sum_i lag_coefficients[i] x_{t-1-i} + e_t, e_t ~ N(0, residual_covariance).
struct VarModel {
    int k = 0;
    int p = 0;
    std::vector<std::string> names;
    Eigen::VectorXd intercept;
    std::vector<Eigen::MatrixXd> lag_coefficients;
    /// Maximum-likelihood divisor (effective sample size).
    Eigen::MatrixXd residual_covariance;
    /// Standard errors, k x (1 + k p), columns ordered [const, lag-1 block, lag-2 block, ...],
    /// computed with the small-sample residual covariance (divisor n - 1 - k p).
    Eigen::MatrixXd coefficient_std_errors;
    long sample_size = 0;
    double log_likelihood = 0.0;

    /// Companion-form matrix (k p x k p).
    Eigen::MatrixXd companion() const;
    bool operator==(const VarModel&) const = default;
};

/// Equation-by-equation least squares on the observations p..T-1.
VarModel fit_var(const TimeSeries& data, int p);
/// Same, restricted to dependent rows first_row..T-1 (earlier rows only feed lags).
VarModel fit_var(const Eigen::MatrixXd& data, int p, Eigen::Index first_row, std::vector<std::string> names = {});

/// Regressor matrix [1, x_{t-1}', ..., x_{t-p}'] for dependent rows first_row..T-1.
Eigen::MatrixXd var_regressors(const Eigen::MatrixXd& data, int p, Eigen::Index first_row);
/// Residuals of `model` on dependent rows first_row..T-1 (first_row defaults to p).
Eigen::MatrixXd var_residuals(const VarModel& model, const Eigen::MatrixXd& data, Eigen::Index first_row = -1);

struct LagSelectionRow {
    int lag = 0;
    double log_likelihood = 0.0;
    double fpe = 0.0;
    double aic = 0.0;
    double sc = 0.0;
    double hq = 0.0;
    bool operator==(const LagSelectionRow&) const = default;
};

struct LagSelectionTable {
    std::vector<LagSelectionRow> rows;
    long sample_size = 0;  ///< common estimation sample
    /// Lag with the minimum of each criterion; keys "fpe", "aic", "sc", "hq".
    std::map<std::string, int> selected;
    bool operator==(const LagSelectionTable&) const = default;
};

/// Criteria for a fit with log-likelihood `ll`, n observations, k series, p lags
/// (m = k(kp + 1) parameters): AIC = -2ll/n + 2m/n, SC uses ln n, HQ 2 ln ln n,
/// FPE = det(Sigma_ml) ((n + kp + 1)/(n - kp - 1))^k with det recovered from ll.
LagSelectionRow information_criteria(double ll, long n, int k, int p);

LagSelectionTable lag_selection(const TimeSeries& data, int max_lag);

enum class JohansenDeterministic {
    None,                ///< no deterministic terms
    ConstantInRelation,  ///< constant restricted to the cointegrating space
    Constant,            ///< unrestricted constant (constant in the data)
};

std::string to_string(JohansenDeterministic d);
JohansenDeterministic johansen_deterministic_from_string(std::string_view s);

struct JohansenCriticalValues {
    double p10 = 0.0;
    double p05 = 0.0;
    double p01 = 0.0;
    bool operator==(const JohansenCriticalValues&) const = default;
};

struct JohansenRankRow {
    int rank = 0;  ///< null hypothesis: rank <= r
    double trace_statistic = 0.0;
    double max_eigen_statistic = 0.0;
    JohansenCriticalValues trace_critical;
    JohansenCriticalValues max_eigen_critical;
    bool operator==(const JohansenRankRow&) const = default;
};

struct JohansenResult {
    JohansenDeterministic deterministic = JohansenDeterministic::Constant;
    int lags = 0;  ///< VAR order in levels
    long sample_size = 0;
    Eigen::VectorXd eigenvalues;  ///< descending, each in [0, 1)
    std::vector<JohansenRankRow> ranks;
    int selected_rank = 0;  ///< smallest r whose trace null survives at 5%
    bool operator==(const JohansenResult&) const = default;
};

/// Critical values for `dim` = k - r (1..11; 1..5 when deterministic == None).
JohansenCriticalValues johansen_trace_critical(JohansenDeterministic d, int dim);
JohansenCriticalValues johansen_max_eigen_critical(JohansenDeterministic d, int dim);

JohansenResult johansen_test(const TimeSeries& data, int p,
                             JohansenDeterministic det = JohansenDeterministic::Constant);
JohansenResult johansen_test(const Eigen::MatrixXd& data, int p,
                             JohansenDeterministic det = JohansenDeterministic::Constant);

enum class ShockType { OneUnit, Orthogonalized };

std::string to_string(ShockType s);
ShockType shock_type_from_string(std::string_view s);

struct IrfResult {
    int horizon = 0;
    std::vector<std::string> names;
    /// responses[h](i, j): response of variable i at horizon h to a shock in variable j.
    std::vector<Eigen::MatrixXd> responses;
    ShockType shock_type = ShockType::OneUnit;
    /// Recursive ordering used for orthogonalized shocks (column order of the data).
    std::vector<std::string> cholesky_ordering;
    std::vector<std::string> warnings;
    bool operator==(const IrfResult&) const = default;
};

/// Responses via companion-matrix powers; orthogonalized shocks post-multiply by the
/// lower Cholesky factor of `covariance`.
IrfResult irf(const std::vector<Eigen::MatrixXd>& lag_coefficients, const Eigen::MatrixXd& covariance, int horizon,
              ShockType shock, std::vector<std::string> names = {});
IrfResult irf(const VarModel& model, int horizon, ShockType shock = ShockType::OneUnit);

/// CSV with columns horizon, response_<i>_to_<j>.
std::string irf_to_csv(const IrfResult& r);
/// Minimal SVG: one polyline per response pair with axis annotations.
std::string irf_to_svg(const IrfResult& r);

}  // namespace regimekit::var
