#include "regimekit/json_io.hpp"

#include "regimekit/error.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace regimekit {

namespace io {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double number_from(const Json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

Json vector_to_json(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
    return a;
}

Eigen::VectorXd vector_from_json(const Json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_from(j[i]);
    return v;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
    return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
    if (!j.is_array()) throw Error("expected a matrix (array of rows)");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Json& row = j[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != cols) throw Error("ragged matrix in JSON");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = number_from(row[static_cast<std::size_t>(c)]);
    }
    return m;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json model_document(const msvar::MsVarModel& model, const msvar::FitDiagnostics* diagnostics,
                    const std::vector<msvar::ParameterEstimate>* parameters) {
    Json doc;
    doc["format"] = "regimekit.msvar";
    doc["version"] = kModelFormatVersion;
    doc["model"] = model;
    if (diagnostics) doc["diagnostics"] = *diagnostics;
    if (parameters) doc["parameters"] = *parameters;
    return doc;
}

msvar::MsVarModel model_from_document(const Json& doc) {
    if (!doc.is_object() || doc.value("format", "") != "regimekit.msvar")
        throw Error("not a regimekit MS-VAR model document");
    if (doc.at("version").get<int>() != kModelFormatVersion)
        throw Error("unsupported model document version " + doc.at("version").dump());
    msvar::MsVarModel m = doc.at("model").get<msvar::MsVarModel>();
    m.validate();
    return m;
}

}  // namespace io

void to_json(Json& j, const StatsSummary& s) {
    j = Json{{"name", s.name},
             {"mean", io::number(s.mean)},
             {"median", io::number(s.median)},
             {"std_dev", io::number(s.std_dev)},
             {"kurtosis", io::number(s.kurtosis)},
             {"skewness", io::number(s.skewness)},
             {"range", io::number(s.range)},
             {"minimum", io::number(s.minimum)},
             {"maximum", io::number(s.maximum)},
             {"count", s.count}};
}

void from_json(const Json& j, StatsSummary& s) {
    s.name = j.at("name").get<std::string>();
    s.mean = io::number_from(j.at("mean"));
    s.median = io::number_from(j.at("median"));
    s.std_dev = io::number_from(j.at("std_dev"));
    s.kurtosis = io::number_from(j.at("kurtosis"));
    s.skewness = io::number_from(j.at("skewness"));
    s.range = io::number_from(j.at("range"));
    s.minimum = io::number_from(j.at("minimum"));
    s.maximum = io::number_from(j.at("maximum"));
    s.count = j.at("count").get<long>();
}

namespace stationarity {

namespace {
std::string level_key(double level) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2f", level);
    return buf;
}
}  // namespace

void to_json(Json& j, const TestResult& r) {
    Json cv = Json::object();
    for (const auto& [level, value] : r.critical_values) cv[level_key(level)] = io::number(value);
    j = Json{{"test", r.test},
             {"statistic", io::number(r.statistic)},
             {"p_value", r.p_value ? io::number(*r.p_value) : Json(nullptr)},
             {"critical_values", cv},
             {"lags_used", r.lags_used},
             {"deterministic", to_string(r.deterministic)},
             {"decision_hint", r.decision_hint == Decision::RejectNull ? "reject" : "fail-to-reject"},
             {"nobs", r.nobs},
             {"warnings", r.warnings}};
}

void from_json(const Json& j, TestResult& r) {
    r.test = j.at("test").get<std::string>();
    r.statistic = io::number_from(j.at("statistic"));
    r.p_value.reset();
    if (!j.at("p_value").is_null()) r.p_value = j.at("p_value").get<double>();
    r.critical_values.clear();
    for (const auto& [key, value] : j.at("critical_values").items()) r.critical_values[std::stod(key)] = io::number_from(value);
    r.lags_used = j.at("lags_used").get<int>();
    r.deterministic = deterministic_from_string(j.at("deterministic").get<std::string>());
    r.decision_hint = j.at("decision_hint").get<std::string>() == "reject" ? Decision::RejectNull : Decision::FailToReject;
    r.nobs = j.at("nobs").get<long>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
}

}  // namespace stationarity

namespace var {

void to_json(Json& j, const VarModel& m) {
    Json lags = Json::array();
    for (const auto& b : m.lag_coefficients) lags.push_back(io::matrix_to_json(b));
    j = Json{{"k", m.k},
             {"p", m.p},
             {"names", m.names},
             {"intercept", io::vector_to_json(m.intercept)},
             {"lag_coefficients", lags},
             {"residual_covariance", io::matrix_to_json(m.residual_covariance)},
             {"coefficient_std_errors", io::matrix_to_json(m.coefficient_std_errors)},
             {"sample_size", m.sample_size},
             {"log_likelihood", io::number(m.log_likelihood)}};
}

void from_json(const Json& j, VarModel& m) {
    m.k = j.at("k").get<int>();
    m.p = j.at("p").get<int>();
    m.names = j.at("names").get<std::vector<std::string>>();
    m.intercept = io::vector_from_json(j.at("intercept"));
    m.lag_coefficients.clear();
    for (const auto& b : j.at("lag_coefficients")) m.lag_coefficients.push_back(io::matrix_from_json(b));
    m.residual_covariance = io::matrix_from_json(j.at("residual_covariance"));
    m.coefficient_std_errors = io::matrix_from_json(j.at("coefficient_std_errors"));
    m.sample_size = j.at("sample_size").get<long>();
    m.log_likelihood = io::number_from(j.at("log_likelihood"));
}

void to_json(Json& j, const LagSelectionRow& r) {
    j = Json{{"lag", r.lag},
             {"log_likelihood", io::number(r.log_likelihood)},
             {"fpe", io::number(r.fpe)},
             {"aic", io::number(r.aic)},
             {"sc", io::number(r.sc)},
             {"hq", io::number(r.hq)}};
}

void from_json(const Json& j, LagSelectionRow& r) {
    r.lag = j.at("lag").get<int>();
    r.log_likelihood = io::number_from(j.at("log_likelihood"));
    r.fpe = io::number_from(j.at("fpe"));
    r.aic = io::number_from(j.at("aic"));
    r.sc = io::number_from(j.at("sc"));
    r.hq = io::number_from(j.at("hq"));
}

void to_json(Json& j, const LagSelectionTable& t) {
    Json sel = Json::object();
    for (const char* key : {"fpe", "aic", "sc", "hq"}) {
        if (auto it = t.selected.find(key); it != t.selected.end()) sel[key] = it->second;
    }
    j = Json{{"sample_size", t.sample_size}, {"rows", t.rows}, {"selected", sel}};
}

void from_json(const Json& j, LagSelectionTable& t) {
    t.sample_size = j.at("sample_size").get<long>();
    t.rows = j.at("rows").get<std::vector<LagSelectionRow>>();
    t.selected.clear();
    for (const auto& [key, value] : j.at("selected").items()) t.selected[key] = value.get<int>();
}

void to_json(Json& j, const JohansenCriticalValues& c) {
    j = Json{{"0.10", c.p10}, {"0.05", c.p05}, {"0.01", c.p01}};
}

void from_json(const Json& j, JohansenCriticalValues& c) {
    c.p10 = j.at("0.10").get<double>();
    c.p05 = j.at("0.05").get<double>();
    c.p01 = j.at("0.01").get<double>();
}

void to_json(Json& j, const JohansenRankRow& r) {
    j = Json{{"rank", r.rank},
             {"trace_statistic", io::number(r.trace_statistic)},
             {"trace_critical", r.trace_critical},
             {"max_eigen_statistic", io::number(r.max_eigen_statistic)},
             {"max_eigen_critical", r.max_eigen_critical}};
}

void from_json(const Json& j, JohansenRankRow& r) {
    r.rank = j.at("rank").get<int>();
    r.trace_statistic = io::number_from(j.at("trace_statistic"));
    r.trace_critical = j.at("trace_critical").get<JohansenCriticalValues>();
    r.max_eigen_statistic = io::number_from(j.at("max_eigen_statistic"));
    r.max_eigen_critical = j.at("max_eigen_critical").get<JohansenCriticalValues>();
}

void to_json(Json& j, const JohansenResult& r) {
    j = Json{{"deterministic", to_string(r.deterministic)},
             {"lags", r.lags},
             {"sample_size", r.sample_size},
             {"eigenvalues", io::vector_to_json(r.eigenvalues)},
             {"ranks", r.ranks},
             {"selected_rank", r.selected_rank}};
}

void from_json(const Json& j, JohansenResult& r) {
    r.deterministic = johansen_deterministic_from_string(j.at("deterministic").get<std::string>());
    r.lags = j.at("lags").get<int>();
    r.sample_size = j.at("sample_size").get<long>();
    r.eigenvalues = io::vector_from_json(j.at("eigenvalues"));
    r.ranks = j.at("ranks").get<std::vector<JohansenRankRow>>();
    r.selected_rank = j.at("selected_rank").get<int>();
}

void to_json(Json& j, const IrfResult& r) {
    Json resp = Json::array();
    for (const auto& m : r.responses) resp.push_back(io::matrix_to_json(m));
    j = Json{{"horizon", r.horizon},
             {"names", r.names},
             {"shock_type", to_string(r.shock_type)},
             {"cholesky_ordering", r.cholesky_ordering},
             {"responses", resp},
             {"warnings", r.warnings}};
}

void from_json(const Json& j, IrfResult& r) {
    r.horizon = j.at("horizon").get<int>();
    r.names = j.at("names").get<std::vector<std::string>>();
    r.shock_type = shock_type_from_string(j.at("shock_type").get<std::string>());
    r.cholesky_ordering = j.at("cholesky_ordering").get<std::vector<std::string>>();
    r.responses.clear();
    for (const auto& m : j.at("responses")) r.responses.push_back(io::matrix_from_json(m));
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
}

}  // namespace var

namespace msvar {

void to_json(Json& j, const MsVarSpec& s) {
    j = Json{{"k", s.k},
             {"q", s.q},
             {"r", s.r},
             {"switch_target", to_string(s.switch_target)},
             {"switch_variance", s.switch_variance},
             {"switch_ar", s.switch_ar},
             {"label", s.label()}};
}

void from_json(const Json& j, MsVarSpec& s) {
    s.k = j.at("k").get<int>();
    s.q = j.at("q").get<int>();
    s.r = j.at("r").get<int>();
    s.switch_target = switch_target_from_string(j.at("switch_target").get<std::string>());
    s.switch_variance = j.at("switch_variance").get<bool>();
    s.switch_ar = j.at("switch_ar").get<bool>();
}

void to_json(Json& j, const MsVarModel& m) {
    Json regimes = Json::array();
    for (int s = 0; s < m.spec.r; ++s) {
        Json ar = Json::array();
        for (const auto& b : m.ar[static_cast<std::size_t>(s)]) ar.push_back(io::matrix_to_json(b));
        regimes.push_back(Json{{"regime", s + 1},
                               {m.spec.switch_target == SwitchTarget::Mean ? "mean" : "intercept",
                                io::vector_to_json(m.means[static_cast<std::size_t>(s)])},
                               {"ar", ar},
                               {"covariance", io::matrix_to_json(m.covariances[static_cast<std::size_t>(s)])}});
    }
    j = Json{{"spec", m.spec},
             {"names", m.names},
             {"regimes", regimes},
             {"transitions", io::matrix_to_json(m.transitions.matrix())},
             {"log_likelihood", io::number(m.log_likelihood)}};
}

void from_json(const Json& j, MsVarModel& m) {
    m.spec = j.at("spec").get<MsVarSpec>();
    m.names = j.at("names").get<std::vector<std::string>>();
    m.means.clear();
    m.ar.clear();
    m.covariances.clear();
    const char* key = m.spec.switch_target == SwitchTarget::Mean ? "mean" : "intercept";
    for (const auto& reg : j.at("regimes")) {
        m.means.push_back(io::vector_from_json(reg.at(key)));
        std::vector<Eigen::MatrixXd> ar;
        for (const auto& b : reg.at("ar")) ar.push_back(io::matrix_from_json(b));
        m.ar.push_back(std::move(ar));
        m.covariances.push_back(io::matrix_from_json(reg.at("covariance")));
    }
    m.transitions = TransitionMatrix(io::matrix_from_json(j.at("transitions")));
    m.log_likelihood = io::number_from(j.at("log_likelihood"));
}

void to_json(Json& j, const RestartRecord& r) {
    j = Json{{"index", r.index},
             {"abandoned", r.abandoned},
             {"reason", r.reason},
             {"converged", r.converged},
             {"iterations", r.iterations},
             {"log_likelihood", io::number(r.log_likelihood)}};
}

void from_json(const Json& j, RestartRecord& r) {
    r.index = j.at("index").get<int>();
    r.abandoned = j.at("abandoned").get<bool>();
    r.reason = j.at("reason").get<std::string>();
    r.converged = j.at("converged").get<bool>();
    r.iterations = j.at("iterations").get<int>();
    r.log_likelihood = io::number_from(j.at("log_likelihood"));
}

void to_json(Json& j, const ParameterEstimate& p) {
    j = Json{{"name", p.name},
             {"estimate", io::number(p.estimate)},
             {"std_error", io::number(p.std_error)},
             {"z", io::number(p.z)},
             {"p_value", io::number(p.p_value)}};
}

void from_json(const Json& j, ParameterEstimate& p) {
    p.name = j.at("name").get<std::string>();
    p.estimate = io::number_from(j.at("estimate"));
    p.std_error = io::number_from(j.at("std_error"));
    p.z = io::number_from(j.at("z"));
    p.p_value = io::number_from(j.at("p_value"));
}

void to_json(Json& j, const FitDiagnostics& d) {
    j = Json{{"converged", d.converged},
             {"iterations", d.iterations},
             {"best_restart", d.best_restart},
             {"log_likelihood_trace", d.log_likelihood_trace},
             {"restarts", d.restarts},
             {"occupancy", io::vector_to_json(d.occupancy)},
             {"aic", io::number(d.aic)},
             {"linear_var_aic", io::number(d.linear_var_aic)},
             {"flags", d.flags}};
}

void from_json(const Json& j, FitDiagnostics& d) {
    d.converged = j.at("converged").get<bool>();
    d.iterations = j.at("iterations").get<int>();
    d.best_restart = j.at("best_restart").get<int>();
    d.log_likelihood_trace = j.at("log_likelihood_trace").get<std::vector<double>>();
    d.restarts = j.at("restarts").get<std::vector<RestartRecord>>();
    d.occupancy = io::vector_from_json(j.at("occupancy"));
    d.aic = io::number_from(j.at("aic"));
    d.linear_var_aic = io::number_from(j.at("linear_var_aic"));
    d.flags = j.at("flags").get<std::vector<std::string>>();
}

}  // namespace msvar

}  // namespace regimekit
