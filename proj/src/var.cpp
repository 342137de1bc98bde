#include "regimekit/var.hpp"

#include "regimekit/error.hpp"
#include "regimekit/linalg.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace regimekit::var {

Eigen::MatrixXd VarModel::companion() const {
    const Eigen::Index kp = static_cast<Eigen::Index>(k) * p;
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(kp, kp);
    for (int i = 0; i < p; ++i) c.block(0, static_cast<Eigen::Index>(i) * k, k, k) = lag_coefficients[static_cast<std::size_t>(i)];
    if (p > 1) c.bottomLeftCorner(kp - k, kp - k).setIdentity();
    return c;
}

Eigen::MatrixXd var_regressors(const Eigen::MatrixXd& data, int p, Eigen::Index first_row) {
    const Eigen::Index k = data.cols();
    const Eigen::Index n = data.rows() - first_row;
    Eigen::MatrixXd X(n, 1 + k * p);
    X.col(0).setOnes();
    for (int i = 1; i <= p; ++i) X.block(0, 1 + (i - 1) * k, n, k) = data.middleRows(first_row - i, n);
    return X;
}

VarModel fit_var(const Eigen::MatrixXd& data, int p, Eigen::Index first_row, std::vector<std::string> names) {
    const Eigen::Index k = data.cols();
    if (p < 0) throw Error("lag order must be nonnegative");
    if (first_row < p) throw Error("first estimation row must leave room for the lags");
    const Eigen::Index n = data.rows() - first_row;
    if (data.rows() <= k * p + k + 10) throw Error("sample too short: need T > k*p + k + 10");
    if (names.empty()) {
        for (Eigen::Index j = 0; j < k; ++j) names.push_back("y" + std::to_string(j + 1));
    }

    const Eigen::MatrixXd X = var_regressors(data, p, first_row);
    const Eigen::MatrixXd Y = data.bottomRows(n);
    std::vector<std::string> cols{"const"};
    for (int i = 1; i <= p; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) cols.push_back(names[static_cast<std::size_t>(j)] + ".L" + std::to_string(i));
    }
    const auto fit = linalg::ols(X, Y, cols);

    VarModel m;
    m.k = static_cast<int>(k);
    m.p = p;
    m.names = std::move(names);
    const Eigen::MatrixXd coef = fit.coefficients.transpose();  // k x (1 + kp)
    m.intercept = coef.col(0);
    for (int i = 0; i < p; ++i) m.lag_coefficients.push_back(coef.block(0, 1 + static_cast<Eigen::Index>(i) * k, k, k));
    const double dn = static_cast<double>(n);
    Eigen::MatrixXd sigma = fit.residuals.transpose() * fit.residuals / dn;
    m.residual_covariance = 0.5 * (sigma + sigma.transpose());
    m.sample_size = static_cast<long>(n);

    const double dof = dn - static_cast<double>(X.cols());
    m.coefficient_std_errors.resize(k, X.cols());
    if (dof > 0) {
        for (Eigen::Index eq = 0; eq < k; ++eq) {
            const double s2 = m.residual_covariance(eq, eq) * dn / dof;
            for (Eigen::Index c = 0; c < X.cols(); ++c) m.coefficient_std_errors(eq, c) = std::sqrt(s2 * fit.xtx_inverse(c, c));
        }
    } else {
        m.coefficient_std_errors.setConstant(std::numeric_limits<double>::quiet_NaN());
    }

    Eigen::LLT<Eigen::MatrixXd> llt(m.residual_covariance);
    if (llt.info() != Eigen::Success) throw NumericalError("residual covariance is singular");
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    m.log_likelihood = -0.5 * dn * (static_cast<double>(k) * (1.0 + std::log(2.0 * std::numbers::pi)) + log_det);
    return m;
}

VarModel fit_var(const TimeSeries& data, int p) { return fit_var(data.values(), p, p, data.names()); }

Eigen::MatrixXd var_residuals(const VarModel& model, const Eigen::MatrixXd& data, Eigen::Index first_row) {
    if (first_row < 0) first_row = model.p;
    const Eigen::MatrixXd X = var_regressors(data, model.p, first_row);
    Eigen::MatrixXd coef(model.k, 1 + model.k * model.p);
    coef.col(0) = model.intercept;
    for (int i = 0; i < model.p; ++i)
        coef.block(0, 1 + static_cast<Eigen::Index>(i) * model.k, model.k, model.k) = model.lag_coefficients[static_cast<std::size_t>(i)];
    return data.bottomRows(data.rows() - first_row) - X * coef.transpose();
}

// ---------------------------------------------------------------------------
// Lag selection

LagSelectionRow information_criteria(double ll, long n, int k, int p) {
    const double dn = static_cast<double>(n);
    const double dk = static_cast<double>(k);
    const double m = dk * (dk * p + 1.0);
    LagSelectionRow row;
    row.lag = p;
    row.log_likelihood = ll;
    row.aic = (-2.0 * ll + 2.0 * m) / dn;
    row.sc = (-2.0 * ll + std::log(dn) * m) / dn;
    row.hq = (-2.0 * ll + 2.0 * std::log(std::log(dn)) * m) / dn;
    const double log_det = (-2.0 * ll - dn * dk * (1.0 + std::log(2.0 * std::numbers::pi))) / dn;
    const double per = dk * p + 1.0;
    row.fpe = std::exp(log_det) * std::pow((dn + per) / (dn - per), dk);
    return row;
}

LagSelectionTable lag_selection(const TimeSeries& data, int max_lag) {
    const auto k = data.cols();
    if (max_lag < 0) throw Error("max_lag must be nonnegative");
    if (data.rows() <= k * max_lag + k + 10)
        throw Error("max_lag " + std::to_string(max_lag) + " too large for sample of " + std::to_string(data.rows()) +
                    " observations (need T > k*max_lag + k + 10)");
    LagSelectionTable table;
    table.sample_size = static_cast<long>(data.rows() - max_lag);
    for (int p = 0; p <= max_lag; ++p) {
        const auto m = fit_var(data.values(), p, max_lag, data.names());
        table.rows.push_back(information_criteria(m.log_likelihood, m.sample_size, static_cast<int>(k), p));
    }
    auto argmin = [&](auto field) {
        int best = 0;
        for (std::size_t i = 1; i < table.rows.size(); ++i) {
            if (field(table.rows[i]) < field(table.rows[static_cast<std::size_t>(best)])) best = static_cast<int>(i);
        }
        return table.rows[static_cast<std::size_t>(best)].lag;
    };
    table.selected["fpe"] = argmin([](const LagSelectionRow& r) { return r.fpe; });
    table.selected["aic"] = argmin([](const LagSelectionRow& r) { return r.aic; });
    table.selected["sc"] = argmin([](const LagSelectionRow& r) { return r.sc; });
    table.selected["hq"] = argmin([](const LagSelectionRow& r) { return r.hq; });
    return table;
}

// ---------------------------------------------------------------------------
// Impulse responses

std::string to_string(ShockType s) { return s == ShockType::OneUnit ? "one-unit" : "orthogonalized"; }

ShockType shock_type_from_string(std::string_view s) {
    if (s == "one-unit" || s == "unit") return ShockType::OneUnit;
    if (s == "orthogonalized" || s == "orthogonal" || s == "one-sd" || s == "cholesky") return ShockType::Orthogonalized;
    throw Error("unknown shock type '" + std::string(s) + "'");
}

IrfResult irf(const std::vector<Eigen::MatrixXd>& lags, const Eigen::MatrixXd& covariance, int horizon, ShockType shock,
              std::vector<std::string> names) {
    if (horizon < 0) throw Error("horizon must be nonnegative");
    const Eigen::Index k = covariance.rows();
    const Eigen::Index p = static_cast<Eigen::Index>(lags.size());
    if (names.empty()) {
        for (Eigen::Index j = 0; j < k; ++j) names.push_back("y" + std::to_string(j + 1));
    }

    Eigen::MatrixXd impact = Eigen::MatrixXd::Identity(k, k);
    if (shock == ShockType::Orthogonalized) {
        Eigen::LLT<Eigen::MatrixXd> llt(covariance);
        if (llt.info() != Eigen::Success) throw NumericalError("Cholesky factorization failed: covariance is singular");
        impact = llt.matrixL();
        for (Eigen::Index i = 0; i < k; ++i) {
            if (!(impact(i, i) > 0.0)) throw NumericalError("Cholesky factorization failed: covariance is singular");
        }
    }

    IrfResult r;
    r.horizon = horizon;
    r.names = names;
    r.shock_type = shock;
    if (shock == ShockType::Orthogonalized) r.cholesky_ordering = names;

    if (p == 0) {
        r.responses.push_back(impact);
        for (int h = 1; h <= horizon; ++h) r.responses.push_back(Eigen::MatrixXd::Zero(k, k));
        return r;
    }

    const Eigen::Index kp = k * p;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(kp, kp);
    for (Eigen::Index i = 0; i < p; ++i) companion.block(0, i * k, k, k) = lags[static_cast<std::size_t>(i)];
    if (p > 1) companion.bottomLeftCorner(kp - k, kp - k).setIdentity();
    if (linalg::spectral_radius(companion) >= 1.0)
        r.warnings.push_back("unstable dynamics (companion spectral radius >= 1): responses diverge");

    // Propagate only the first k columns of C^h.
    Eigen::MatrixXd state = Eigen::MatrixXd::Zero(kp, k);
    state.topRows(k).setIdentity();
    for (int h = 0; h <= horizon; ++h) {
        r.responses.push_back(state.topRows(k) * impact);
        state = companion * state;
    }
    return r;
}

IrfResult irf(const VarModel& model, int horizon, ShockType shock) {
    return irf(model.lag_coefficients, model.residual_covariance, horizon, shock, model.names);
}

namespace {
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}
}  // namespace

std::string irf_to_csv(const IrfResult& r) {
    const auto k = r.names.size();
    std::string out = "horizon";
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) out += ",response_" + r.names[i] + "_to_" + r.names[j];
    }
    out += "\n";
    for (int h = 0; h <= r.horizon; ++h) {
        out += std::to_string(h);
        const auto& m = r.responses[static_cast<std::size_t>(h)];
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j)
                out += "," + fmt(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        out += "\n";
    }
    return out;
}

std::string irf_to_svg(const IrfResult& r) {
    const auto k = static_cast<Eigen::Index>(r.names.size());
    const double width = 260.0, height = 180.0, pad = 30.0;
    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width * static_cast<double>(k)) +
           "\" height=\"" + fmt(height * static_cast<double>(k)) + "\">\n";
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            double lo = 0.0, hi = 0.0;
            for (const auto& m : r.responses) {
                lo = std::min(lo, m(i, j));
                hi = std::max(hi, m(i, j));
            }
            if (hi - lo < 1e-300) hi = lo + 1.0;
            const double x0 = static_cast<double>(j) * width, y0 = static_cast<double>(i) * height;
            const double pw = width - 2 * pad, ph = height - 2 * pad;
            auto px = [&](int h) { return x0 + pad + (r.horizon == 0 ? 0.0 : pw * h / r.horizon); };
            auto py = [&](double v) { return y0 + pad + ph * (hi - v) / (hi - lo); };
            out += "<g>\n<text x=\"" + fmt(x0 + pad) + "\" y=\"" + fmt(y0 + 15) + "\">" + r.names[static_cast<std::size_t>(i)] +
                   " to " + r.names[static_cast<std::size_t>(j)] + "</text>\n";
            out += "<line x1=\"" + fmt(px(0)) + "\" y1=\"" + fmt(py(0.0)) + "\" x2=\"" + fmt(px(r.horizon)) + "\" y2=\"" +
                   fmt(py(0.0)) + "\" stroke=\"gray\"/>\n";
            out += "<text x=\"" + fmt(x0 + 2) + "\" y=\"" + fmt(py(hi)) + "\">" + fmt(hi) + "</text>\n";
            out += "<text x=\"" + fmt(x0 + 2) + "\" y=\"" + fmt(py(lo)) + "\">" + fmt(lo) + "</text>\n";
            out += "<text x=\"" + fmt(px(r.horizon) - 10) + "\" y=\"" + fmt(y0 + height - 8) + "\">h=" +
                   std::to_string(r.horizon) + "</text>\n";
            out += "<polyline fill=\"none\" stroke=\"black\" points=\"";
            for (int h = 0; h <= r.horizon; ++h) {
                out += fmt(px(h)) + "," + fmt(py(r.responses[static_cast<std::size_t>(h)](i, j))) + (h < r.horizon ? " " : "");
            }
            out += "\"/>\n</g>\n";
        }
    }
    out += "</svg>\n";
    return out;
}

}  // namespace regimekit::var
