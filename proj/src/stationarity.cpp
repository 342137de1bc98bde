#include "regimekit/stationarity.hpp"

#include "regimekit/error.hpp"
#include "regimekit/linalg.hpp"
#include "regimekit/random.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace regimekit::stationarity {

namespace {

// MacKinnon (1994), one series. Index: 0 = none, 1 = constant, 2 = constant + trend.
constexpr std::array<double, 3> kTauMax = {std::numeric_limits<double>::infinity(), 2.74, 0.7};
constexpr std::array<double, 3> kTauMin = {-19.04, -18.83, -16.18};
constexpr std::array<double, 3> kTauStar = {-1.04, -1.61, -2.89};
constexpr std::array<std::array<double, 3>, 3> kTauSmallP = {{
    {0.6344, 1.2378, 3.2496e-2},
    {2.1659, 1.4412, 3.8269e-2},
    {3.2512, 1.6047, 4.9588e-2},
}};
constexpr std::array<std::array<double, 4>, 3> kTauLargeP = {{
    {0.4797, 9.3557e-1, -0.6999e-1, 3.3066e-2},
    {1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2},
    {2.5261, 6.1654e-1, -3.7956e-1, -6.0285e-2},
}};

// MacKinnon (2010) response surfaces cv = b0 + b1/T + b2/T^2 + b3/T^3; rows 1%, 5%, 10%.
constexpr std::array<std::array<std::array<double, 4>, 3>, 3> kTau2010 = {{
    {{{-2.56574, -2.2358, -3.627, 0.0}, {-1.94100, -0.2686, -3.365, 31.223}, {-1.61682, 0.2656, -2.714, 25.364}}},
    {{{-3.43035, -6.5393, -16.786, -79.433}, {-2.86154, -2.8903, -4.234, -40.040}, {-2.56677, -1.5384, -2.809, 0.0}}},
    {{{-3.95877, -9.0531, -28.428, -134.155},
      {-3.41049, -4.3904, -9.036, -45.374},
      {-3.12705, -2.5856, -3.925, -22.380}}},
}};

// Kwiatkowski et al. (1992) asymptotic critical values at 10%, 5%, 1%.
constexpr std::array<double, 3> kKpssLevel = {0.347, 0.463, 0.739};
constexpr std::array<double, 3> kKpssTrend = {0.119, 0.146, 0.216};

std::size_t spec_index(Deterministic d) { return static_cast<std::size_t>(d); }

int level_index(double level) {
    if (std::fabs(level - 0.01) < 1e-12) return 0;
    if (std::fabs(level - 0.05) < 1e-12) return 1;
    if (std::fabs(level - 0.10) < 1e-12) return 2;
    throw Error("significance level must be 0.01, 0.05 or 0.10");
}

Eigen::MatrixXd deterministic_columns(Deterministic spec, Eigen::Index n, Eigen::Index first_t) {
    const Eigen::Index cols = spec == Deterministic::None ? 0 : (spec == Deterministic::Constant ? 1 : 2);
    Eigen::MatrixXd d(n, cols);
    if (cols >= 1) d.col(0).setOnes();
    if (cols == 2) {
        for (Eigen::Index i = 0; i < n; ++i) d(i, 1) = static_cast<double>(first_t + i + 1);
    }
    return d;
}

std::vector<std::string> deterministic_names(Deterministic spec) {
    if (spec == Deterministic::None) return {};
    if (spec == Deterministic::Constant) return {"const"};
    return {"const", "trend"};
}

void check_not_constant(const Eigen::Ref<const Eigen::VectorXd>& y) {
    if ((y.array() - y(0)).abs().maxCoeff() == 0.0) throw NumericalError("constant series: regression is singular");
}

struct AdfRegression {
    double tstat = 0.0;
    double aic = 0.0;
    long nobs = 0;
};

// Regression of dy_t on [deterministic, y_{t-1}, dy_{t-1..t-lags}] for t (index into dy)
// from `start` to the end.
AdfRegression adf_regression(const Eigen::VectorXd& y, const Eigen::VectorXd& dy, int lags, Eigen::Index start,
                             Deterministic spec) {
    const Eigen::Index n = dy.size() - start;
    const auto d = deterministic_columns(spec, n, start);
    const Eigen::Index nd = d.cols();
    Eigen::MatrixXd X(n, nd + 1 + lags);
    X.leftCols(nd) = d;
    X.col(nd) = y.segment(start, n);  // y_{t-1} where dy_t = y_{t+1} - y_t in 0-based storage
    // Centering leaves the t-ratio unchanged when a constant is present and keeps
    // near-constant series from looking collinear with it.
    if (nd > 0) X.col(nd).array() -= X.col(nd).mean();
    for (int j = 1; j <= lags; ++j) X.col(nd + j) = dy.segment(start - j, n);
    auto names = deterministic_names(spec);
    names.push_back("y.L1");
    for (int j = 1; j <= lags; ++j) names.push_back("dy.L" + std::to_string(j));
    const auto fit = linalg::ols(X, dy.segment(start, n), names);
    const double rss = fit.residuals.squaredNorm();
    const double dof = static_cast<double>(n - X.cols());
    if (dof <= 0) throw Error("adf: not enough observations");
    const double s2 = rss / dof;
    AdfRegression out;
    out.nobs = static_cast<long>(n);
    const double se = std::sqrt(s2 * fit.xtx_inverse(nd, nd));
    out.tstat = fit.coefficients(nd, 0) / se;
    const double dn = static_cast<double>(n);
    const double llf = -0.5 * dn * (std::log(2.0 * M_PI) + std::log(rss / dn) + 1.0);
    out.aic = -2.0 * llf + 2.0 * static_cast<double>(X.cols());
    return out;
}

void fill_df_critical_values(TestResult& r) {
    for (double level : {0.01, 0.05, 0.10}) r.critical_values[level] = mackinnon_critical_value(level, r.deterministic, r.nobs);
}

}  // namespace

std::string to_string(Deterministic d) {
    switch (d) {
        case Deterministic::None: return "none";
        case Deterministic::Constant: return "constant";
        case Deterministic::ConstantTrend: return "constant+trend";
    }
    return "constant";
}

Deterministic deterministic_from_string(std::string_view s) {
    if (s == "none" || s == "n" || s == "nc") return Deterministic::None;
    if (s == "constant" || s == "c") return Deterministic::Constant;
    if (s == "constant+trend" || s == "trend" || s == "ct") return Deterministic::ConstantTrend;
    throw Error("unknown deterministic specification '" + std::string(s) + "'");
}

bool TestResult::rejects_at(double level) const {
    const auto it = critical_values.find(level);
    if (it == critical_values.end()) throw Error("no critical value at requested level");
    // KPSS rejects in the upper tail, the Dickey-Fuller family in the lower tail.
    return test == "kpss" ? statistic > it->second : statistic < it->second;
}

double mackinnon_pvalue(double statistic, Deterministic spec) {
    const auto i = spec_index(spec);
    if (statistic > kTauMax[i]) return 1.0;
    if (statistic < kTauMin[i]) return 0.0;
    double z = 0.0;
    if (statistic <= kTauStar[i]) {
        const auto& c = kTauSmallP[i];
        z = c[0] + statistic * (c[1] + statistic * c[2]);
    } else {
        const auto& c = kTauLargeP[i];
        z = c[0] + statistic * (c[1] + statistic * (c[2] + statistic * c[3]));
    }
    return normal_cdf(z);
}

double mackinnon_critical_value(double level, Deterministic spec, long nobs) {
    const auto& c = kTau2010[spec_index(spec)][static_cast<std::size_t>(level_index(level))];
    const double inv = 1.0 / static_cast<double>(nobs);
    return c[0] + inv * (c[1] + inv * (c[2] + inv * c[3]));
}

TestResult adf_test(const Eigen::Ref<const Eigen::VectorXd>& y_in, int max_lags, Deterministic spec, LagRule rule) {
    if (max_lags < 0) throw Error("adf: max_lags must be nonnegative");
    if (y_in.size() < max_lags + 10) throw Error("adf: series too short for the requested lags");
    check_not_constant(y_in);
    const Eigen::VectorXd y = y_in;
    const Eigen::Index n = y.size();
    const Eigen::VectorXd dy = y.tail(n - 1) - y.head(n - 1);

    int lags = max_lags;
    if (rule == LagRule::Aic) {
        double best = std::numeric_limits<double>::infinity();
        for (int p = 0; p <= max_lags; ++p) {
            const auto reg = adf_regression(y, dy, p, max_lags, spec);
            if (reg.aic < best - 1e-12) {
                best = reg.aic;
                lags = p;
            }
        }
    }
    const auto reg = adf_regression(y, dy, lags, lags, spec);

    TestResult r;
    r.test = "adf";
    r.statistic = reg.tstat;
    r.p_value = mackinnon_pvalue(reg.tstat, spec);
    r.lags_used = lags;
    r.deterministic = spec;
    r.nobs = reg.nobs;
    fill_df_critical_values(r);
    r.decision_hint = r.rejects_at(0.05) ? Decision::RejectNull : Decision::FailToReject;
    return r;
}

TestResult pp_test(const Eigen::Ref<const Eigen::VectorXd>& y_in, Deterministic spec, Bandwidth bandwidth) {
    if (y_in.size() < 20) throw Error("pp: series too short (need at least 20 observations)");
    check_not_constant(y_in);
    const Eigen::VectorXd y = y_in;
    const Eigen::Index n = y.size() - 1;
    const auto d = deterministic_columns(spec, n, 0);
    const Eigen::Index nd = d.cols();
    Eigen::MatrixXd X(n, nd + 1);
    X.leftCols(nd) = d;
    X.col(nd) = y.head(n);
    if (nd > 0) X.col(nd).array() -= X.col(nd).mean();
    auto names = deterministic_names(spec);
    names.push_back("y.L1");
    const Eigen::VectorXd dy = y.tail(n) - y.head(n);
    const auto fit = linalg::ols(X, dy, names);

    const Eigen::VectorXd u = fit.residuals.col(0);
    const double dn = static_cast<double>(n);
    const double k = static_cast<double>(X.cols());
    const double s2 = u.squaredNorm() / (dn - k);
    const double s = std::sqrt(s2);
    const double gamma0 = s2 * (dn - k) / dn;
    const double sigma = std::sqrt(fit.xtx_inverse(nd, nd));  // se / s
    const double tstat = fit.coefficients(nd, 0) / (s * sigma);

    const int lags = bandwidth.rule == Bandwidth::Rule::Fixed ? bandwidth.lags : linalg::newey_west_bandwidth(n);
    const double lam2 = linalg::long_run_variance(u, lags);
    if (!(lam2 > 0.0)) throw NumericalError("pp: long-run variance is zero");
    const double lam = std::sqrt(lam2);

    TestResult r;
    r.test = "pp";
    r.statistic = std::sqrt(gamma0) * tstat / lam - 0.5 * (lam2 - gamma0) / lam * dn * sigma;
    r.p_value = mackinnon_pvalue(r.statistic, spec);
    r.lags_used = lags;
    r.deterministic = spec;
    r.nobs = static_cast<long>(n);
    fill_df_critical_values(r);
    r.decision_hint = r.rejects_at(0.05) ? Decision::RejectNull : Decision::FailToReject;
    const double scale = std::max(std::fabs(y.mean()), 1.0);
    if (std::sqrt(gamma0) < 1e-8 * scale) r.warnings.push_back("near-constant series: degenerate stationary case");
    return r;
}

TestResult kpss_test(const Eigen::Ref<const Eigen::VectorXd>& y_in, Deterministic spec, Bandwidth bandwidth) {
    if (spec == Deterministic::None) throw Error("kpss: deterministic specification must include a constant");
    if (y_in.size() < 20) throw Error("kpss: series too short (need at least 20 observations)");
    const Eigen::VectorXd y = y_in;
    const Eigen::Index n = y.size();
    const auto X = deterministic_columns(spec, n, 0);
    const auto fit = linalg::ols(X, y, deterministic_names(spec));
    const Eigen::VectorXd e = fit.residuals.col(0);

    const int lags = bandwidth.rule == Bandwidth::Rule::Fixed ? bandwidth.lags : linalg::newey_west_bandwidth(n);
    const double dn = static_cast<double>(n);

    TestResult r;
    r.test = "kpss";
    r.lags_used = lags;
    r.deterministic = spec;
    r.nobs = static_cast<long>(n);
    const auto& cv = spec == Deterministic::Constant ? kKpssLevel : kKpssTrend;
    r.critical_values = {{0.10, cv[0]}, {0.05, cv[1]}, {0.01, cv[2]}};

    const double scale = std::max(y.cwiseAbs().maxCoeff(), 1e-300);
    if (e.cwiseAbs().maxCoeff() <= 1e-10 * scale) {
        // Deterministic terms absorb the series entirely.
        r.statistic = 0.0;
        r.warnings.push_back("residuals vanish: deterministic terms absorb the series");
    } else {
        double partial = 0.0;
        double sum_sq = 0.0;
        for (Eigen::Index t = 0; t < n; ++t) {
            partial += e(t);
            sum_sq += partial * partial;
        }
        const double lam2 = linalg::long_run_variance(e, lags);
        if (!(lam2 > 0.0)) throw NumericalError("kpss: long-run variance is not positive");
        r.statistic = sum_sq / (dn * dn * lam2);
    }
    r.decision_hint = r.rejects_at(0.05) ? Decision::RejectNull : Decision::FailToReject;
    return r;
}

}  // namespace regimekit::stationarity
