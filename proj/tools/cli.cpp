#include "cli.hpp"

#include "regimekit/error.hpp"
#include "regimekit/json_io.hpp"
#include "regimekit/msvar.hpp"
#include "regimekit/stationarity.hpp"
#include "regimekit/timeseries.hpp"
#include "regimekit/var.hpp"

#include "CLI11.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

namespace regimekit::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v, int decimals = 6) {
    if (!std::isfinite(v)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string csv_num(double v) {
    if (!std::isfinite(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string markdown_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::string out = "|";
    for (const auto& h : header) out += " " + h + " |";
    out += "\n|";
    for (std::size_t i = 0; i < header.size(); ++i) out += i == 0 ? " :--- |" : " ---: |";
    out += "\n";
    for (const auto& row : rows) {
        out += "|";
        for (const auto& c : row) out += " " + c + " |";
        out += "\n";
    }
    return out;
}

fs::path resolve_input(const std::string& given) {
    fs::path p(given);
    if (fs::exists(p)) return p;
    if (const char* dir = std::getenv(kFixtureEnv); dir && *dir) {
        const fs::path alt = fs::path(dir) / p.filename();
        if (fs::exists(alt)) return alt;
    }
    throw DataError("input file not found: " + given);
}

// Shared state for one invocation: outputs, inputs and the manifest.
struct Run {
    std::string command;
    fs::path out_dir = "regimekit_out";
    std::uint64_t seed = 42;
    std::string format = "markdown";
    std::vector<std::string> args;
    std::vector<fs::path> inputs;
    std::vector<std::string> outputs;
    Json flags = Json::object();
    std::ostream* out = nullptr;

    std::string ext() const { return format == "json" ? "json" : format == "csv" ? "csv" : "md"; }

    void write(const std::string& name, const std::string& content) {
        fs::create_directories(out_dir);
        std::ofstream f(out_dir / name, std::ios::binary);
        if (!f) throw Error("cannot write " + (out_dir / name).string());
        f << content;
        outputs.push_back(name);
    }

    // Report in the requested format, written to disk and echoed to stdout.
    void report(const std::string& stem, const Json& json, const std::string& csv, const std::string& md) {
        const std::string body = format == "json" ? io::dump(json) : format == "csv" ? csv : md;
        write(stem + "." + ext(), body);
        *out << body;
    }

    TimeSeries load(const std::string& path, const std::vector<std::string>& columns, const std::string& timestamp_column) {
        const fs::path p = resolve_input(path);
        inputs.push_back(p);
        CsvSchema schema;
        schema.timestamp_column = timestamp_column;
        schema.value_columns = columns;
        return load_csv(p, schema);
    }

    void manifest() {
        Json m;
        m["tool"] = "regimekit";
        m["version"] = kVersion;
        m["command"] = command;
        m["arguments"] = args;
        m["flags"] = flags;
        Json ins = Json::array();
        for (const auto& p : inputs) ins.push_back(Json{{"path", p.generic_string()}, {"sha256", sha256_hex(p)}});
        m["inputs"] = ins;
        m["outputs"] = outputs;
        fs::create_directories(out_dir);
        std::ofstream f(out_dir / "run.manifest.json", std::ios::binary);
        f << io::dump(m);
    }
};

TimeSeries transform(const TimeSeries& s, const std::string& form) {
    if (form == "level") return s;
    if (form == "log") return log_levels(s);
    if (form == "return") return log_returns(s);
    throw UsageError("unknown transform '" + form + "' (expected level, log or return)");
}

// ---------------------------------------------------------------------------
// describe

struct Panel {
    std::string name;
    std::vector<StatsSummary> stats;
};

void cmd_describe(Run& run, const std::string& input, const std::vector<std::string>& columns, bool returns,
                  const std::string& ts_col) {
    const TimeSeries data = run.load(input, columns, ts_col);
    std::vector<Panel> panels{{"levels", describe(data)}};
    if (returns) panels.push_back({"returns", describe(log_returns(data))});

    Json j;
    j["report"] = "describe";
    Json ps = Json::array();
    for (const auto& p : panels) ps.push_back(Json{{"panel", p.name}, {"columns", p.stats}});
    j["panels"] = ps;

    std::string csv = "panel,name,mean,median,std_dev,kurtosis,skewness,range,minimum,maximum,count\n";
    std::string md;
    const char* labels[] = {"Mean", "Median", "Std. Dev.", "Kurtosis", "Skewness", "Range", "Minimum", "Maximum", "Count"};
    char letter = 'A';
    for (const auto& p : panels) {
        for (const auto& s : p.stats) {
            csv += p.name + "," + s.name + "," + csv_num(s.mean) + "," + csv_num(s.median) + "," + csv_num(s.std_dev) + "," +
                   csv_num(s.kurtosis) + "," + csv_num(s.skewness) + "," + csv_num(s.range) + "," + csv_num(s.minimum) + "," +
                   csv_num(s.maximum) + "," + std::to_string(s.count) + "\n";
        }
        md += std::string("Panel ") + letter++ + ": " + p.name + "\n\n";
        std::vector<std::string> header{"Statistic"};
        for (const auto& s : p.stats) header.push_back(s.name);
        std::vector<std::vector<std::string>> rows;
        for (int i = 0; i < 9; ++i) {
            std::vector<std::string> row{labels[i]};
            for (const auto& s : p.stats) {
                const double vals[] = {s.mean, s.median, s.std_dev, s.kurtosis, s.skewness, s.range, s.minimum, s.maximum, 0.0};
                row.push_back(i == 8 ? std::to_string(s.count) : fmt(vals[i]));
            }
            rows.push_back(row);
        }
        md += markdown_table(header, rows) + "\n";
    }
    run.report("describe", j, csv, md);
}

// ---------------------------------------------------------------------------
// unitroot

void cmd_unitroot(Run& run, const std::string& input, const std::vector<std::string>& columns, const std::string& ts_col,
                  const std::vector<std::string>& tests, const std::vector<std::string>& forms, const std::string& det,
                  int max_lags, const std::string& lag_rule, const std::string& bandwidth) {
    for (const auto& t : tests) {
        if (t != "adf" && t != "pp" && t != "kpss") throw UsageError("unknown test '" + t + "' (expected adf, pp or kpss)");
    }
    for (const auto& f : forms) {
        if (f != "level" && f != "log" && f != "return") throw UsageError("unknown form '" + f + "'");
    }
    if (lag_rule != "aic" && lag_rule != "fixed") throw UsageError("lag rule must be aic or fixed");
    stationarity::Deterministic spec;
    try {
        spec = stationarity::deterministic_from_string(det);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    stationarity::Bandwidth bw = stationarity::Bandwidth::automatic();
    if (bandwidth != "auto") {
        try {
            bw = stationarity::Bandwidth::fixed(std::stoi(bandwidth));
        } catch (const std::exception&) {
            throw UsageError("bandwidth must be 'auto' or an integer");
        }
    }

    const TimeSeries data = run.load(input, columns, ts_col);
    Json j;
    j["report"] = "unitroot";
    j["deterministic"] = stationarity::to_string(spec);
    Json cols = Json::array();
    std::string csv = "column,form,test,statistic,p_value,cv_0.01,cv_0.05,cv_0.10,lags_used,nobs,decision\n";
    std::string md;
    for (const auto& name : data.names()) {
        Json entries = Json::array();
        std::vector<std::vector<std::string>> rows;
        for (const auto& form : forms) {
            const TimeSeries series = transform(data.select({name}), form);
            const Eigen::VectorXd y = series.values().col(0);
            std::vector<std::string> row{form};
            for (const auto& test : tests) {
                stationarity::TestResult r;
                if (test == "adf") {
                    const int lags = max_lags >= 0 ? max_lags
                                                   : static_cast<int>(std::floor(12.0 * std::pow(static_cast<double>(y.size()) / 100.0, 0.25)));
                    r = stationarity::adf_test(y, lags, spec,
                                               lag_rule == "aic" ? stationarity::LagRule::Aic : stationarity::LagRule::Fixed);
                } else if (test == "pp") {
                    r = stationarity::pp_test(y, spec, bw);
                } else {
                    r = stationarity::kpss_test(y, spec == stationarity::Deterministic::None ? stationarity::Deterministic::Constant : spec, bw);
                }
                entries.push_back(Json{{"form", form}, {"result", r}});
                const bool reject = r.decision_hint == stationarity::Decision::RejectNull;
                csv += name + "," + form + "," + test + "," + csv_num(r.statistic) + "," + (r.p_value ? csv_num(*r.p_value) : "") +
                       "," + csv_num(r.critical_values.at(0.01)) + "," + csv_num(r.critical_values.at(0.05)) + "," +
                       csv_num(r.critical_values.at(0.10)) + "," + std::to_string(r.lags_used) + "," + std::to_string(r.nobs) +
                       "," + (reject ? "reject" : "fail-to-reject") + "\n";
                row.push_back(fmt(r.statistic) + (r.p_value ? " (" + fmt(*r.p_value, 4) + ")" : " [" + fmt(r.critical_values.at(0.05), 3) + "]"));
            }
            rows.push_back(row);
        }
        cols.push_back(Json{{"name", name}, {"results", entries}});
        std::vector<std::string> header{name};
        for (const auto& t : tests) {
            std::string h = t == "adf" ? "ADF" : t == "pp" ? "PP" : "KPSS";
            header.push_back(h);
        }
        md += markdown_table(header, rows) + "\n";
    }
    j["columns"] = cols;
    md += "ADF and PP: statistic (MacKinnon p-value). KPSS: statistic [5% critical value].\n";
    run.report("unitroot", j, csv, md);
}

// ---------------------------------------------------------------------------
// lagselect

void cmd_lagselect(Run& run, const std::string& input, const std::vector<std::string>& columns, const std::string& ts_col,
                   const std::string& form, int max_lag) {
    const TimeSeries data = transform(run.load(input, columns, ts_col), form);
    const var::LagSelectionTable t = var::lag_selection(data, max_lag);
    Json j;
    j["report"] = "lagselect";
    j["transform"] = form;
    j["table"] = t;
    // csv stays numeric; the selected column names the criteria minimised at that lag
    std::string csv = "lag,log_likelihood,fpe,aic,sc,hq,selected\n";
    std::vector<std::vector<std::string>> rows;
    auto star = [&](const char* key, int lag, double v) { return fmt(v) + (t.selected.at(key) == lag ? "*" : ""); };
    for (const auto& r : t.rows) {
        csv += std::to_string(r.lag) + "," + csv_num(r.log_likelihood) + "," + csv_num(r.fpe) + "," + csv_num(r.aic) + "," +
               csv_num(r.sc) + "," + csv_num(r.hq) + ",";
        std::string sel;
        for (const char* key : {"fpe", "aic", "sc", "hq"})
            if (t.selected.at(key) == r.lag) sel += (sel.empty() ? "" : ";") + std::string(key);
        csv += sel + "\n";
        rows.push_back({std::to_string(r.lag), fmt(r.log_likelihood, 3), star("fpe", r.lag, r.fpe), star("aic", r.lag, r.aic),
                        star("sc", r.lag, r.sc), star("hq", r.lag, r.hq)});
    }
    std::string md = markdown_table({"Lag", "LogL", "FPE", "AIC", "SC", "HQ"}, rows);
    md += "\n* lag order selected by the criterion. Common sample: " + std::to_string(t.sample_size) + " observations.\n";
    run.report("lagselect", j, csv, md);
}

// ---------------------------------------------------------------------------
// johansen

void cmd_johansen(Run& run, const std::string& input, const std::vector<std::string>& columns, const std::string& ts_col,
                  const std::string& form, int lags, const std::string& det) {
    var::JohansenDeterministic d;
    try {
        d = var::johansen_deterministic_from_string(det);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    const TimeSeries data = transform(run.load(input, columns, ts_col), form);
    const var::JohansenResult r = var::johansen_test(data, lags, d);
    Json j;
    j["report"] = "johansen";
    j["transform"] = form;
    j["result"] = r;
    std::string csv = "rank,eigenvalue,trace_statistic,trace_cv_0.10,trace_cv_0.05,trace_cv_0.01,max_eigen_statistic,max_cv_0.10,max_cv_0.05,max_cv_0.01\n";
    std::vector<std::vector<std::string>> trace_rows, max_rows;
    for (const auto& row : r.ranks) {
        const double ev = r.eigenvalues(row.rank);
        csv += std::to_string(row.rank) + "," + csv_num(ev) + "," + csv_num(row.trace_statistic) + "," +
               csv_num(row.trace_critical.p10) + "," + csv_num(row.trace_critical.p05) + "," + csv_num(row.trace_critical.p01) + "," +
               csv_num(row.max_eigen_statistic) + "," + csv_num(row.max_eigen_critical.p10) + "," +
               csv_num(row.max_eigen_critical.p05) + "," + csv_num(row.max_eigen_critical.p01) + "\n";
        const std::string hyp = row.rank == 0 ? "None" : "At most " + std::to_string(row.rank);
        const bool trace_rej = row.trace_statistic > row.trace_critical.p05;
        const bool max_rej = row.max_eigen_statistic > row.max_eigen_critical.p05;
        trace_rows.push_back({hyp + (trace_rej ? " *" : ""), fmt(ev), fmt(row.trace_statistic, 4), fmt(row.trace_critical.p05, 2),
                              fmt(row.trace_critical.p01, 2)});
        max_rows.push_back({hyp + (max_rej ? " *" : ""), fmt(ev), fmt(row.max_eigen_statistic, 4),
                            fmt(row.max_eigen_critical.p05, 2), fmt(row.max_eigen_critical.p01, 2)});
    }
    std::string md = "Trace test (deterministic: " + var::to_string(d) + ", lags " + std::to_string(lags) + ")\n\n";
    md += markdown_table({"Hypothesized No. of CE(s)", "Eigenvalue", "Trace Statistic", "0.05 Critical Value", "0.01 Critical Value"}, trace_rows);
    md += "\nMaximum eigenvalue test\n\n";
    md += markdown_table({"Hypothesized No. of CE(s)", "Eigenvalue", "Max-Eigen Statistic", "0.05 Critical Value", "0.01 Critical Value"}, max_rows);
    md += "\n* rejection of the hypothesis at the 0.05 level. Selected rank: " + std::to_string(r.selected_rank) + "\n";
    run.report("johansen", j, csv, md);
}

// ---------------------------------------------------------------------------
// fit-msvar

struct FitFlags {
    int regimes = 2;
    int lags = 1;
    std::string target = "mean";
    bool switch_variance = true;
    bool switch_ar = false;
    int restarts = 20;
    double tol = 1e-8;
    int max_iter = 1000;
    bool standard_errors = true;
    int threads = 0;
    std::string form = "return";
};

void cmd_fit_msvar(Run& run, const std::string& input, const std::vector<std::string>& columns, const std::string& ts_col,
                   const FitFlags& ff) {
    if (ff.regimes < 2) throw UsageError("Markov switching requires at least 2 regimes (--regimes " + std::to_string(ff.regimes) + ")");
    if (ff.lags < 0) throw UsageError("--lags must be nonnegative");
    if (ff.restarts < 1) throw UsageError("--restarts must be at least 1");
    msvar::MsVarSpec spec;
    try {
        spec.switch_target = msvar::switch_target_from_string(ff.target);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    const TimeSeries data = transform(run.load(input, columns, ts_col), ff.form);
    spec.k = static_cast<int>(data.cols());
    spec.q = ff.lags;
    spec.r = ff.regimes;
    spec.switch_variance = ff.switch_variance;
    spec.switch_ar = ff.switch_ar;

    msvar::EmOptions opt;
    opt.tol = ff.tol;
    opt.max_iter = ff.max_iter;
    opt.restarts = ff.restarts;
    opt.seed = run.seed;
    opt.standard_errors = ff.standard_errors;
    opt.threads = ff.threads;
    const msvar::FitResult fit = msvar::em_fit(data, spec, opt);
    const msvar::MsVarModel& m = fit.model;

    run.write("model.json", io::dump(io::model_document(m, &fit.diagnostics, &fit.parameters)));
    run.write("probabilities.csv", msvar::probabilities_to_csv(fit.probabilities, false));
    run.write("smoothed_probabilities.csv", msvar::probabilities_to_csv(fit.probabilities, true));

    // Coefficient report: one row per (regime, equation, term).
    std::map<std::string, const msvar::ParameterEstimate*> by_name;
    for (const auto& p : fit.parameters) by_name[p.name] = &p;
    const bool msm = spec.switch_target == msvar::SwitchTarget::Mean;
    struct Line {
        int regime;
        std::string equation, term, param;
        double value;
    };
    std::vector<Line> lines;
    for (int s = 0; s < spec.r; ++s) {
        const std::string tag = "[" + std::to_string(s + 1) + "]";
        for (int i = 0; i < spec.k; ++i) {
            const std::string eq = m.names[static_cast<std::size_t>(i)];
            lines.push_back({s + 1, eq, msm ? "mean" : "intercept", (msm ? "mean" : "intercept") + tag + "." + eq,
                             m.means[static_cast<std::size_t>(s)](i)});
            for (int l = 0; l < spec.q; ++l) {
                for (int j = 0; j < spec.k; ++j) {
                    const std::string var = m.names[static_cast<std::size_t>(j)];
                    std::string pname = "ar";
                    if (spec.switch_ar) pname += tag;
                    pname += "[" + std::to_string(l + 1) + "]." + eq + "." + var;
                    lines.push_back({s + 1, eq, var + "(-" + std::to_string(l + 1) + ")", pname,
                                     m.ar[static_cast<std::size_t>(s)][static_cast<std::size_t>(l)](i, j)});
                }
            }
            const std::string sd_name = std::string("sd") + (spec.switch_variance ? tag : "") + "." + eq;
            lines.push_back({s + 1, eq, "sigma", sd_name, std::sqrt(m.covariances[static_cast<std::size_t>(s)](i, i))});
        }
    }
    Json coef = Json::array();
    std::string csv = "regime,equation,term,estimate,std_error,z,p_value\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& ln : lines) {
        const auto it = by_name.find(ln.param);
        const double se = it != by_name.end() ? it->second->std_error : std::nan("");
        const double z = ln.value / se;
        const double pv = it != by_name.end() ? it->second->p_value : std::nan("");
        coef.push_back(Json{{"regime", ln.regime}, {"equation", ln.equation}, {"term", ln.term}, {"estimate", io::number(ln.value)},
                            {"std_error", io::number(se)}, {"z", io::number(z)}, {"p_value", io::number(pv)}});
        csv += std::to_string(ln.regime) + "," + ln.equation + "," + ln.term + "," + csv_num(ln.value) + "," + csv_num(se) + "," +
               csv_num(z) + "," + csv_num(pv) + "\n";
        rows.push_back({std::to_string(ln.regime), ln.equation, ln.term, fmt(ln.value), fmt(se), fmt(z, 3), fmt(pv, 4)});
    }
    Json cj;
    cj["report"] = "msvar-coefficients";
    cj["model"] = spec.label();
    cj["log_likelihood"] = io::number(m.log_likelihood);
    cj["aic"] = io::number(fit.diagnostics.aic);
    cj["linear_var_aic"] = io::number(fit.diagnostics.linear_var_aic);
    cj["coefficients"] = coef;
    cj["flags"] = fit.diagnostics.flags;
    std::string md = spec.label() + " estimates (regime 1 = lowest volatility)\n\n";
    md += markdown_table({"Regime", "Equation", "Term", "Estimate", "Std. Error", "z", "p-value"}, rows);
    md += "\nLog-likelihood " + fmt(m.log_likelihood, 4) + ", AIC " + fmt(fit.diagnostics.aic, 4) + " (linear VAR " +
          fmt(fit.diagnostics.linear_var_aic, 4) + ")\n";
    for (const auto& f : fit.diagnostics.flags) md += "\nNote: " + f + "\n";
    run.report("coefficients", cj, csv, md);

    // Transition report: probabilities, expected durations, ergodic occupancy.
    const Eigen::MatrixXd& p = m.transitions.matrix();
    const Eigen::VectorXd erg = msvar::ergodic_distribution(m.transitions);
    Eigen::VectorXd dur(spec.r);
    for (int i = 0; i < spec.r; ++i) dur(i) = p(i, i) < 1.0 ? 1.0 / (1.0 - p(i, i)) : INFINITY;
    Json tj;
    tj["report"] = "msvar-transitions";
    tj["transitions"] = io::matrix_to_json(p);
    tj["expected_duration"] = io::vector_to_json(dur);
    tj["ergodic"] = io::vector_to_json(erg);
    tj["occupancy"] = io::vector_to_json(fit.diagnostics.occupancy);
    std::string tcsv = "from";
    for (int j = 0; j < spec.r; ++j) tcsv += ",to_regime_" + std::to_string(j + 1);
    tcsv += ",expected_duration,ergodic\n";
    std::vector<std::string> header{"From \\ To"};
    for (int j = 0; j < spec.r; ++j) header.push_back("Regime " + std::to_string(j + 1));
    header.push_back("Expected duration");
    header.push_back("Ergodic probability");
    std::vector<std::vector<std::string>> trows;
    for (int i = 0; i < spec.r; ++i) {
        tcsv += "regime_" + std::to_string(i + 1);
        std::vector<std::string> row{"Regime " + std::to_string(i + 1)};
        for (int j = 0; j < spec.r; ++j) {
            tcsv += "," + csv_num(p(i, j));
            row.push_back(fmt(p(i, j), 4));
        }
        tcsv += "," + csv_num(dur(i)) + "," + csv_num(erg(i)) + "\n";
        row.push_back(fmt(dur(i), 2));
        row.push_back(fmt(erg(i), 4));
        trows.push_back(row);
    }
    const std::string tmd = "Transition probabilities P(i, j) = Pr(s_t+1 = j | s_t = i)\n\n" + markdown_table(header, trows);
    const std::string body = run.format == "json" ? io::dump(tj) : run.format == "csv" ? tcsv : tmd;
    run.write("transitions." + run.ext(), body);
    *run.out << "\n" << body;
}

// ---------------------------------------------------------------------------
// irf

void emit_irf(Run& run, const var::IrfResult& r, const std::string& stem) {
    run.write(stem + ".csv", var::irf_to_csv(r));
    run.write(stem + ".svg", var::irf_to_svg(r));
    Json j = r;
    run.write(stem + ".json", io::dump(j));
    for (const auto& w : r.warnings) *run.out << "warning: " << w << "\n";
}

void cmd_irf(Run& run, const std::string& model_path, const std::string& input, const std::vector<std::string>& columns,
             const std::string& ts_col, const std::string& form, int lags, int horizon, int regime, const std::string& shock_name) {
    if (horizon < 0) throw UsageError("--horizon must be nonnegative");
    var::ShockType shock;
    try {
        shock = var::shock_type_from_string(shock_name);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    if (!model_path.empty()) {
        const fs::path p = resolve_input(model_path);
        run.inputs.push_back(p);
        std::ifstream f(p, std::ios::binary);
        Json doc;
        try {
            doc = Json::parse(f);
        } catch (const std::exception& e) {
            throw DataError("cannot parse model file " + p.string() + ": " + e.what());
        }
        const msvar::MsVarModel m = io::model_from_document(doc);
        if (regime > m.spec.r) throw UsageError("--regime " + std::to_string(regime) + " exceeds the model's " + std::to_string(m.spec.r) + " regimes");
        std::vector<int> regs;
        if (regime >= 1) {
            regs.push_back(regime);
        } else {
            for (int s = 1; s <= m.spec.r; ++s) regs.push_back(s);
        }
        std::string shown;
        for (int s : regs) {
            const var::IrfResult r = msvar::regime_irf(m, s - 1, horizon, shock);
            const std::string stem = "irf_regime_" + std::to_string(s);
            emit_irf(run, r, stem);
            shown += "Regime " + std::to_string(s) + "\n" + var::irf_to_csv(r) + "\n";
        }
        *run.out << shown;
        return;
    }
    if (input.empty()) throw UsageError("irf needs --model or --input");
    const TimeSeries data = transform(run.load(input, columns, ts_col), form);
    const var::VarModel vm = var::fit_var(data, lags);
    const var::IrfResult r = var::irf(vm, horizon, shock);
    emit_irf(run, r, "irf");
    *run.out << var::irf_to_csv(r);
}

// ---------------------------------------------------------------------------
// event-study

void cmd_event_study(Run& run, const std::string& prices_path, const std::string& calendar_path, const std::string& ts_col,
                     int window, int lags, int horizon, const std::string& shock_name) {
    if (window < 1) throw UsageError("--window must be at least 1 hour");
    var::ShockType shock;
    try {
        shock = var::shock_type_from_string(shock_name);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    const TimeSeries prices = run.load(prices_path, {}, ts_col);
    const fs::path cal_path = resolve_input(calendar_path);
    run.inputs.push_back(cal_path);
    const EventCalendar cal = load_event_calendar(cal_path);
    const TimeSeries events = event_returns(prices, cal, window);
    run.write("event_returns.csv", to_csv(events));

    const var::VarModel m = var::fit_var(events, lags);
    Json coef = Json::array();
    std::string csv = "equation,term,estimate,std_error,t\n";
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> terms{"const"};
    for (int l = 1; l <= lags; ++l)
        for (const auto& n : m.names) terms.push_back(n + "(-" + std::to_string(l) + ")");
    for (int i = 0; i < m.k; ++i) {
        for (std::size_t c = 0; c < terms.size(); ++c) {
            const double est = c == 0 ? m.intercept(i)
                                      : m.lag_coefficients[(c - 1) / static_cast<std::size_t>(m.k)](i, static_cast<Eigen::Index>((c - 1) % static_cast<std::size_t>(m.k)));
            const double se = m.coefficient_std_errors(i, static_cast<Eigen::Index>(c));
            const std::string& eq = m.names[static_cast<std::size_t>(i)];
            coef.push_back(Json{{"equation", eq}, {"term", terms[c]}, {"estimate", io::number(est)}, {"std_error", io::number(se)},
                                {"t", io::number(est / se)}});
            csv += eq + "," + terms[c] + "," + csv_num(est) + "," + csv_num(se) + "," + csv_num(est / se) + "\n";
            rows.push_back({eq, terms[c], fmt(est, 4), "(" + fmt(se, 4) + ")", fmt(est / se, 3)});
        }
    }
    const var::IrfResult r = var::irf(m, horizon, shock);
    emit_irf(run, r, "event_irf");

    Json j;
    j["report"] = "event-study";
    j["events"] = static_cast<long>(events.rows());
    j["window_hours"] = window;
    j["var"] = m;
    j["coefficients"] = coef;
    j["irf"] = r;
    std::string md = "Event VAR(" + std::to_string(lags) + ") on " + std::to_string(events.rows()) + " announcements, " +
                     std::to_string(window) + "-hour window\n\n";
    md += markdown_table({"Equation", "Term", "Estimate", "(Std. Error)", "t"}, rows);
    md += "\nResponse of return to a rate_change shock (" + var::to_string(shock) + "):\n\n";
    std::vector<std::vector<std::string>> irows;
    for (int h = 0; h <= horizon; ++h) irows.push_back({std::to_string(h), fmt(r.responses[static_cast<std::size_t>(h)](1, 0))});
    md += markdown_table({"Horizon", "Response"}, irows);
    run.report("event_study", j, csv, md);
}

}  // namespace

std::string sha256_hex(const fs::path& file) {
    std::ifstream f(file, std::ios::binary);
    if (!f) throw Error("cannot read " + file.string());
    const std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"regimekit: Markov-switching VAR toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1, 1);

    Run r;
    r.args = args;
    r.out = &out;
    std::string out_dir = "regimekit_out";
    std::string input, ts_col = "date";
    std::string columns_csv;

    auto common = [&](CLI::App* sub, bool needs_input) {
        sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
        sub->add_option("--seed", r.seed, "Random seed")->capture_default_str();
        sub->add_option("--format", r.format, "Report format")->check(CLI::IsMember({"json", "csv", "markdown"}))->capture_default_str();
        sub->add_option("--columns", columns_csv, "Comma-separated value columns (default: all)");
        sub->add_option("--timestamp-column", ts_col, "Name of the timestamp column")->capture_default_str();
        if (needs_input) sub->add_option("--input", input, "Input CSV")->required();
    };

    bool returns = false;
    auto* describe_cmd = app.add_subcommand("describe", "Descriptive statistics (levels, optionally log returns)");
    common(describe_cmd, true);
    describe_cmd->add_flag("--returns", returns, "Add a panel for log returns");

    std::string tests = "adf,pp,kpss", forms = "level", det = "constant", lag_rule = "aic", bandwidth = "auto";
    int max_lags = -1;
    auto* unitroot_cmd = app.add_subcommand("unitroot", "ADF, Phillips-Perron and KPSS tests");
    common(unitroot_cmd, true);
    unitroot_cmd->add_option("--tests", tests, "Tests: adf,pp,kpss")->capture_default_str();
    unitroot_cmd->add_option("--forms", forms, "Forms: level,log,return")->capture_default_str();
    unitroot_cmd->add_option("--deterministic", det, "none | constant | constant+trend")->capture_default_str();
    unitroot_cmd->add_option("--max-lags", max_lags, "ADF maximum lag (default 12 (T/100)^(1/4))");
    unitroot_cmd->add_option("--lag-rule", lag_rule, "aic | fixed")->capture_default_str();
    unitroot_cmd->add_option("--bandwidth", bandwidth, "Newey-West bandwidth: auto or an integer")->capture_default_str();

    std::string form = "return";
    int max_lag = 8;
    auto* lag_cmd = app.add_subcommand("lagselect", "VAR lag order selection (LogL, FPE, AIC, SC, HQ)");
    common(lag_cmd, true);
    lag_cmd->add_option("--max-lag", max_lag, "Largest lag considered")->capture_default_str();
    lag_cmd->add_option("--transform", form, "level | log | return")->capture_default_str();

    int lags = 1;
    std::string jdet = "constant";
    std::string jform = "level";
    auto* joh_cmd = app.add_subcommand("johansen", "Johansen trace and maximum-eigenvalue tests");
    common(joh_cmd, true);
    joh_cmd->add_option("--lags", lags, "VAR order in levels")->capture_default_str();
    joh_cmd->add_option("--deterministic", jdet, "none | constant-in-ce | constant")->capture_default_str();
    joh_cmd->add_option("--transform", jform, "level | log | return")->capture_default_str();

    FitFlags ff;
    bool no_switch_variance = false, no_se = false;
    auto* fit_cmd = app.add_subcommand("fit-msvar", "Fit a Markov-switching VAR by EM");
    common(fit_cmd, true);
    fit_cmd->add_option("--regimes", ff.regimes, "Number of regimes")->capture_default_str();
    fit_cmd->add_option("--lags", ff.lags, "VAR lag order")->capture_default_str();
    fit_cmd->add_option("--switch", ff.target, "mean | intercept")->capture_default_str();
    fit_cmd->add_flag("--switch-ar", ff.switch_ar, "Regime-specific AR coefficients");
    fit_cmd->add_flag("--common-variance", no_switch_variance, "One covariance shared by all regimes");
    fit_cmd->add_option("--restarts", ff.restarts, "EM restarts")->capture_default_str();
    fit_cmd->add_option("--tol", ff.tol, "Convergence tolerance on the log-likelihood")->capture_default_str();
    fit_cmd->add_option("--max-iter", ff.max_iter, "Maximum EM iterations")->capture_default_str();
    fit_cmd->add_option("--threads", ff.threads, "Worker threads for restarts (0 = all cores)")->capture_default_str();
    fit_cmd->add_option("--transform", ff.form, "level | log | return")->capture_default_str();
    fit_cmd->add_flag("--no-standard-errors", no_se, "Skip the numerical Hessian");

    std::string model_path, shock = "one-unit", iform = "return";
    int horizon = 12, regime = 0, ilags = 1;
    auto* irf_cmd = app.add_subcommand("irf", "Impulse responses (regime-frozen from a model file, or a linear VAR)");
    common(irf_cmd, false);
    irf_cmd->add_option("--model", model_path, "Model JSON written by fit-msvar");
    irf_cmd->add_option("--input", input, "CSV for a linear VAR instead of a model file");
    irf_cmd->add_option("--lags", ilags, "Linear VAR order")->capture_default_str();
    irf_cmd->add_option("--transform", iform, "level | log | return")->capture_default_str();
    irf_cmd->add_option("--horizon", horizon, "Largest horizon")->capture_default_str();
    irf_cmd->add_option("--regime", regime, "Regime (1-based); default: every regime");
    irf_cmd->add_option("--shock", shock, "one-unit | orthogonalized")->capture_default_str();

    std::string prices, calendar;
    int window = 1, elags = 1, ehorizon = 10;
    std::string eshock = "orthogonalized";
    auto* ev_cmd = app.add_subcommand("event-study", "Event VAR of announcement-window returns on rate changes");
    common(ev_cmd, false);
    ev_cmd->add_option("--prices", prices, "Hourly price CSV")->required();
    ev_cmd->add_option("--calendar", calendar, "Event calendar CSV (datetime, actual, forecast, previous)")->required();
    ev_cmd->add_option("--window", window, "Return window in hours")->capture_default_str();
    ev_cmd->add_option("--lags", elags, "VAR order")->capture_default_str();
    ev_cmd->add_option("--horizon", ehorizon, "IRF horizon")->capture_default_str();
    ev_cmd->add_option("--shock", eshock, "one-unit | orthogonalized")->capture_default_str();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::Success& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    r.command = sub->get_name();
    r.out_dir = out_dir;
    for (const auto* opt : sub->get_options()) {
        if (opt->get_name().empty() || opt->get_name() == "--help") continue;
        const auto res = opt->reduced_results();
        std::string value;
        for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
        if (res.empty()) value = opt->get_default_str();
        std::string key = opt->get_name();
        if (key.rfind("--", 0) == 0) key = key.substr(2);
        r.flags[key] = value;
    }
    const std::vector<std::string> columns = split(columns_csv);

    try {
        if (r.command == "describe") {
            cmd_describe(r, input, columns, returns, ts_col);
        } else if (r.command == "unitroot") {
            cmd_unitroot(r, input, columns, ts_col, split(tests), split(forms), det, max_lags, lag_rule, bandwidth);
        } else if (r.command == "lagselect") {
            cmd_lagselect(r, input, columns, ts_col, form, max_lag);
        } else if (r.command == "johansen") {
            cmd_johansen(r, input, columns, ts_col, jform, lags, jdet);
        } else if (r.command == "fit-msvar") {
            ff.switch_variance = !no_switch_variance;
            ff.standard_errors = !no_se;
            cmd_fit_msvar(r, input, columns, ts_col, ff);
        } else if (r.command == "irf") {
            cmd_irf(r, model_path, input, columns, ts_col, iform, ilags, horizon, regime, shock);
        } else if (r.command == "event-study") {
            cmd_event_study(r, prices, calendar, ts_col, window, elags, ehorizon, eshock);
        }
        r.manifest();
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace regimekit::cli
