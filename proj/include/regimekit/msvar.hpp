#pragma once

#include "regimekit/random.hpp"
#include "regimekit/timeseries.hpp"
#include "regimekit/var.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace regimekit::msvar {

/// MSM: the process mean switches, so a regime change moves the level at once.
/// MSI: the intercept switches and the level adjusts through the AR dynamics.
enum class SwitchTarget { Mean, Intercept };

std::string to_string(SwitchTarget t);
SwitchTarget switch_target_from_string(std::string_view s);

struct MsVarSpec {
    int k = 1;  ///< series
    int q = 0;  ///< lags
    int r = 2;  ///< regimes
    SwitchTarget switch_target = SwitchTarget::Mean;
    bool switch_variance = true;
    bool switch_ar = false;

    void validate() const;
    /// e.g. "MSMH(2)-VAR(1)", "MSIAH(3)-VAR(2)".
    std::string label() const;
    /// Hidden-state count used by the filter: r^(q+1) for MSM, r for MSI.
    int state_count() const;
    bool operator==(const MsVarSpec&) const = default;
};

/// Row-stochastic matrix, P(i, j) = Pr(s_{t+1} = j | s_t = i).
class TransitionMatrix {
public:
    TransitionMatrix() = default;
    explicit TransitionMatrix(Eigen::MatrixXd p);

    const Eigen::MatrixXd& matrix() const noexcept { return p_; }
    int size() const noexcept { return static_cast<int>(p_.rows()); }
    double operator()(int i, int j) const { return p_(i, j); }
    bool operator==(const TransitionMatrix& o) const { return p_ == o.p_; }

private:
    Eigen::MatrixXd p_;
};

/// Long-run occupancy; throws for reducible or periodic chains.
Eigen::VectorXd ergodic_distribution(const TransitionMatrix& p);
/// 1 / (1 - p_ii); throws if some state is absorbing.
Eigen::VectorXd expected_duration(const TransitionMatrix& p);

struct MsVarModel {
    MsVarSpec spec;
    std::vector<std::string> names;
    /// Regime means (MSM) or intercepts (MSI), one k-vector per regime.
    std::vector<Eigen::VectorXd> means;
    /// ar[regime][lag]; identical across regimes unless spec.switch_ar.
    std::vector<std::vector<Eigen::MatrixXd>> ar;
    /// Residual covariance per regime; identical unless spec.switch_variance.
    std::vector<Eigen::MatrixXd> covariances;
    TransitionMatrix transitions;
    double log_likelihood = 0.0;

    void validate() const;
    /// Lower Cholesky factor of a regime covariance.
    Eigen::MatrixXd covariance_factor(int regime) const;
    /// Free parameter count (means, AR, covariances, transitions).
    int parameter_count() const;
    /// Same model with regimes reordered: new regime i is old regime perm[i].
    MsVarModel permuted(const std::vector<int>& perm) const;
    bool operator==(const MsVarModel&) const = default;
};

/// Reorder by ascending covariance trace, ties broken by the means.
MsVarModel canonical_order(const MsVarModel& model);

/// log N(x_t; conditional mean, Sigma_regime). `history` rows are x_{t-1}, ..., x_{t-q};
/// `lag_regimes` are s_{t-1}, ..., s_{t-q} (used by MSM only, may be empty for MSI).
double conditional_density(const MsVarModel& model, int regime, const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::MatrixXd& history, const std::vector<int>& lag_regimes = {});

struct FilterOutput {
    /// Stamps of the rows, i.e. observations q..T-1 of the input.
    std::vector<Instant> timestamps;
    int regimes = 0;
    /// Lagged regimes carried in the hidden state (q for MSM, 0 for MSI).
    int state_lags = 0;

    /// Full hidden-state probabilities, n x states. State index sum_j s_{t-j} r^j.
    Eigen::MatrixXd predicted_states;
    Eigen::MatrixXd filtered_states;
    Eigen::MatrixXd smoothed_states;

    /// Marginals for the current regime, n x r.
    Eigen::MatrixXd predicted;
    Eigen::MatrixXd filtered;
    Eigen::MatrixXd smoothed;

    double log_likelihood = 0.0;
    std::vector<int> regime_path;

    /// Expected transition counts and initial-regime weights (filled by the smoother).
    Eigen::MatrixXd transition_counts;
    Eigen::VectorXd initial_weights;

    bool has_smoothed() const { return smoothed.rows() > 0; }
};

/// Forward recursion in log space, started from the ergodic distribution (for reducible or
/// periodic chains, the long-run average of the chain started uniformly).
/// Throws NumericalError naming the row if every state has zero density.
FilterOutput hamilton_filter(const MsVarModel& model, const TimeSeries& data);
FilterOutput hamilton_filter(const MsVarModel& model, const Eigen::MatrixXd& data);

/// Kim backward recursion; also fills transition_counts and initial_weights.
FilterOutput kim_smoother(const FilterOutput& filter, const TransitionMatrix& transitions);

/// Probabilities CSV: date, prob_regime_1..r (smoothed if present and requested).
std::string probabilities_to_csv(const FilterOutput& f, bool smoothed = false);

struct EmOptions {
    double tol = 1e-8;
    int max_iter = 1000;
    int restarts = 10;
    std::uint64_t seed = 0;
    bool standard_errors = true;
    /// Worker threads for restarts; 0 = hardware concurrency.
    int threads = 0;
};

struct RestartRecord {
    int index = 0;
    bool abandoned = false;
    std::string reason;
    bool converged = false;
    int iterations = 0;
    double log_likelihood = 0.0;
    bool operator==(const RestartRecord&) const = default;
};

struct ParameterEstimate {
    std::string name;  ///< e.g. "mean[2].BTC", "ar[1][1].BTC.MPU", "sd[2].BTC", "p[1][1]"
    double estimate = 0.0;
    double std_error = 0.0;  ///< NaN when the Hessian is unusable
    double z = 0.0;
    double p_value = 0.0;
    bool operator==(const ParameterEstimate&) const;
};

struct FitDiagnostics {
    bool converged = false;
    int iterations = 0;
    int best_restart = 0;
    /// Log-likelihood at every E-step of the winning restart.
    std::vector<double> log_likelihood_trace;
    std::vector<RestartRecord> restarts;
    Eigen::VectorXd occupancy;  ///< expected periods per regime (smoothed)
    double aic = 0.0;
    double linear_var_aic = 0.0;
    std::vector<std::string> flags;
    bool operator==(const FitDiagnostics&) const = default;
};

struct FitResult {
    MsVarModel model;
    FitDiagnostics diagnostics;
    std::vector<ParameterEstimate> parameters;
    FilterOutput probabilities;
};

/// EM (expectation / conditional maximization) with seeded restarts; best restart wins.
FitResult em_fit(const TimeSeries& data, const MsVarSpec& spec, const EmOptions& options = {});

/// One EM run from a given starting model (exposed for diagnostics and tests).
struct EmRun {
    MsVarModel model;
    std::vector<double> trace;
    bool converged = false;
    int iterations = 0;
};
EmRun em_iterate(const MsVarModel& start, const Eigen::MatrixXd& data, double tol, int max_iter);

/// Deterministic starting model for restart `index` (0 is unperturbed).
MsVarModel initial_model(const Eigen::MatrixXd& data, const MsVarSpec& spec, std::vector<std::string> names,
                         std::uint64_t seed, int index);

/// Numerical-Hessian standard errors and Wald p-values at `model`.
std::vector<ParameterEstimate> standard_errors(const MsVarModel& model, const Eigen::MatrixXd& data);

/// Impulse responses with the chain frozen in `regime` (0-based).
var::IrfResult regime_irf(const MsVarModel& model, int regime, int horizon,
                          var::ShockType shock = var::ShockType::OneUnit);

}  // namespace regimekit::msvar
