// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Set REGIMEKIT_REAL_DATA to a monthly CSV with BTC and MPU price levels to run the
// qualitative check on real data instead of the bundled synthetic fixture.

#include "cli.hpp"
#include "oracles.hpp"

#include "regimekit/msvar.hpp"
#include "regimekit/simulate.hpp"
#include "regimekit/stationarity.hpp"
#include "regimekit/timeseries.hpp"
#include "regimekit/var.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

using namespace regimekit;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

int failures = 0;

void criterion(int id, const char* title, double budget_seconds, const std::function<Verdict()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt("%.1f s", secs);
    if (budget_seconds > 0) {
        timing += fmt(" of %.0f s", budget_seconds);
        if (secs > budget_seconds) {
            v.pass = false;
            v.detail += "; over the runtime budget";
        }
    }
    if (!v.pass) ++failures;
    std::printf("criterion %d %s  %s: %s [%s]\n", id, v.pass ? "PASS" : "FAIL", title, v.detail.c_str(), timing.c_str());
    std::fflush(stdout);
}

Eigen::MatrixXd m2(double a, double b, double c, double d) {
    Eigen::MatrixXd m(2, 2);
    m << a, b, c, d;
    return m;
}

double max_row_error(const Eigen::MatrixXd& m) { return (m.rowwise().sum().array() - 1.0).abs().maxCoeff(); }

// 1. Hamilton filter against path enumeration.
Verdict filter_oracle() {
    Rng rng(Seed{1001});
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int k = 1 + i % 2;
        const int q = (i / 2) % 2;
        const auto m = oracle::random_model(rng, k, q, 2, msvar::SwitchTarget::Intercept);
        const int T = 3 + static_cast<int>(rng.uniform() * 8.0);  // 3..10
        const auto x = simulate::simulate_msvar(m, T, 20, Seed{5000ULL + static_cast<std::uint64_t>(i)}).series.values();
        const double ll = msvar::hamilton_filter(m, x).log_likelihood;
        worst = std::max(worst, std::abs(ll - oracle::enumerate(m, x).log_likelihood));
    }
    return {worst <= 1e-10, fmt("100 MSI(2)-VAR(0/1) models, T <= 10, max |dLL| = %.2e (tol 1e-10)", worst)};
}

// 2. EM never decreases the likelihood.
Verdict em_monotone() {
    double worst = 0.0;
    long iterations = 0;
    for (int i = 0; i < 50; ++i) {
        Rng rng(Seed{2000ULL + static_cast<std::uint64_t>(i)});
        const int k = 1 + i % 2;
        const int q = (i / 2) % 3;
        const int r = i % 5 == 4 ? 3 : 2;
        const auto target = (i / 6) % 2 ? msvar::SwitchTarget::Intercept : msvar::SwitchTarget::Mean;
        const bool switch_ar = i % 7 == 3;
        auto truth = oracle::random_model(rng, k, q, r, target, switch_ar);
        const auto sim = simulate::simulate_msvar(truth, 300, simulate::kDefaultBurnIn, Seed{3000ULL + static_cast<std::uint64_t>(i)});
        auto spec = truth.spec;
        spec.switch_variance = i % 3 != 1;
        const auto start = msvar::initial_model(sim.series.values(), spec, truth.names, 77, i % 3);
        const auto run = msvar::em_iterate(start, sim.series.values(), 1e-8, 1000);
        for (std::size_t t = 1; t < run.trace.size(); ++t) worst = std::max(worst, run.trace[t - 1] - run.trace[t]);
        iterations += static_cast<long>(run.trace.size());
    }
    return {worst <= 1e-8, fmt("50 fits, %.0f E-steps, largest decrease %.2e (tol 1e-8)", static_cast<double>(iterations),
                               std::max(worst, 0.0))};
}

// 3. Parameter recovery for an MSM(2)-VAR(1) in the published BTC range.
Verdict recovery() {
    msvar::MsVarModel truth;
    truth.spec.k = 1;
    truth.spec.q = 1;
    truth.spec.r = 2;
    truth.names = {"BTC"};
    truth.means = {Eigen::VectorXd::Constant(1, 0.027), Eigen::VectorXd::Constant(1, 0.286)};
    truth.ar = {{Eigen::MatrixXd::Constant(1, 1, 0.1)}, {Eigen::MatrixXd::Constant(1, 1, 0.1)}};
    truth.covariances = {Eigen::MatrixXd::Constant(1, 1, 0.24 * 0.24), Eigen::MatrixXd::Constant(1, 1, 0.51 * 0.51)};
    truth.transitions = msvar::TransitionMatrix(m2(0.97, 0.03, 0.105, 0.895));
    int ok = 0;
    for (int i = 0; i < 50; ++i) {
        const auto seed = 4000ULL + static_cast<std::uint64_t>(i);
        const auto sim = simulate::simulate_msvar(truth, 2000, simulate::kDefaultBurnIn, Seed{seed});
        msvar::EmOptions opt;
        opt.seed = seed;
        opt.restarts = 4;
        opt.standard_errors = false;
        const auto fit = msvar::em_fit(sim.series, truth.spec, opt).model;
        const bool p_ok = std::abs(fit.transitions(0, 0) - 0.97) <= 0.05 && std::abs(fit.transitions(1, 1) - 0.895) <= 0.05;
        const bool s_ok = std::abs(std::sqrt(fit.covariances[0](0, 0)) / 0.24 - 1.0) <= 0.10 &&
                          std::abs(std::sqrt(fit.covariances[1](0, 0)) / 0.51 - 1.0) <= 0.10;
        ok += p_ok && s_ok;
    }
    return {ok >= 45, fmt("%.0f of 50 replications within +-0.05 (P diagonal) and 10%% (sigma); need 45", ok)};
}

// 4. Probability rows and transition rows are normalized.
Verdict normalization() {
    double prob = 0.0, trans = 0.0;
    for (int i = 0; i < 20; ++i) {
        Rng rng(Seed{6000ULL + static_cast<std::uint64_t>(i)});
        const auto truth = oracle::random_model(rng, 1 + i % 2, i % 3, 2 + i % 2,
                                                i % 2 ? msvar::SwitchTarget::Intercept : msvar::SwitchTarget::Mean);
        const auto sim = simulate::simulate_msvar(truth, 250, 50, Seed{6500ULL + static_cast<std::uint64_t>(i)});
        msvar::EmOptions opt;
        opt.seed = static_cast<std::uint64_t>(i);
        opt.restarts = 2;
        opt.standard_errors = false;
        const auto fit = msvar::em_fit(sim.series, truth.spec, opt);
        const auto& f = fit.probabilities;
        for (const auto* m : {&f.predicted, &f.filtered, &f.smoothed, &f.predicted_states, &f.filtered_states,
                              &f.smoothed_states})
            prob = std::max(prob, max_row_error(*m));
        trans = std::max(trans, max_row_error(fit.model.transitions.matrix()));
        const auto g = msvar::kim_smoother(msvar::hamilton_filter(truth, sim.series), truth.transitions);
        for (const auto* m : {&g.predicted, &g.filtered, &g.smoothed}) prob = std::max(prob, max_row_error(*m));
    }
    return {prob <= 1e-10 && trans <= 1e-12,
            fmt("20 randomized fits, probability rows %.1e (tol 1e-10), transition rows %.1e (tol 1e-12)", prob, trans)};
}

// 5. One-unit IRF of a VAR(1) is B^h.
Verdict irf_closed_form() {
    Rng rng(Seed{7001});
    double worst = 0.0;
    int made = 0;
    while (made < 100) {
        const int k = 1 + made % 4;
        Eigen::MatrixXd B(k, k);
        for (auto& v : B.reshaped()) v = 0.6 * rng.normal() / std::sqrt(static_cast<double>(k));
        if (Eigen::EigenSolver<Eigen::MatrixXd>(B).eigenvalues().cwiseAbs().maxCoeff() >= 0.98) continue;
        ++made;
        const auto r = var::irf({B}, Eigen::MatrixXd::Identity(k, k), 30, var::ShockType::OneUnit);
        Eigen::MatrixXd pw = Eigen::MatrixXd::Identity(k, k);
        for (int h = 0; h <= 30; ++h) {
            worst = std::max(worst, (r.responses[static_cast<std::size_t>(h)] - pw).cwiseAbs().maxCoeff());
            pw = pw * B;
        }
    }
    return {worst <= 1e-12, fmt("100 stable B, horizons 0-30, max |R_h - B^h| = %.2e (tol 1e-12)", worst)};
}

// 6. Johansen size and power.
Verdict johansen() {
    const auto cv2 = var::johansen_trace_critical(var::JohansenDeterministic::Constant, 2);
    const auto cv1 = var::johansen_trace_critical(var::JohansenDeterministic::Constant, 1);
    int size = 0, power = 0;
    for (int i = 0; i < 200; ++i) {
        const auto w = simulate::simulate_random_walks(1000, 2, Seed{8000ULL + static_cast<std::uint64_t>(i)});
        size += var::johansen_test(w, 2).ranks[0].trace_statistic > cv2.p05;
        const auto c = simulate::simulate_cointegrated_pair(1000, Seed{9000ULL + static_cast<std::uint64_t>(i)}, 0.5);
        power += var::johansen_test(c, 2).ranks[0].trace_statistic > cv2.p05;
    }
    const bool tables = cv2.p05 == 17.95 && cv1.p05 == 8.18;
    return {tables && size <= 20 && power >= 180,
            fmt("r=0 rejected for %.1f%% of independent walks (max 10%%), %.1f%% of cointegrated pairs (min 90%%); "
                "5%% critical values %.2f / %.2f",
                size / 2.0, power / 2.0, cv2.p05, cv1.p05)};
}

// 7. Unit-root size and power.
Verdict unit_root() {
    int adf_ar = 0, adf_rw = 0, kpss_ar = 0, kpss_rw = 0;
    for (int i = 0; i < 200; ++i) {
        Rng rng(Seed{10000ULL + static_cast<std::uint64_t>(i)});
        Eigen::VectorXd ar(500), rw(500);
        double a = 0.0, w = 0.0;
        for (int t = 0; t < 500; ++t) {
            a = 0.5 * a + rng.normal();
            w += rng.normal();
            ar(t) = a;
            rw(t) = w;
        }
        using stationarity::LagRule;
        adf_ar += stationarity::adf_test(ar, 4, stationarity::Deterministic::Constant, LagRule::Aic).rejects_at(0.05);
        adf_rw += stationarity::adf_test(rw, 4, stationarity::Deterministic::Constant, LagRule::Aic).rejects_at(0.05);
        kpss_ar += stationarity::kpss_test(ar).rejects_at(0.05);
        kpss_rw += stationarity::kpss_test(rw).rejects_at(0.05);
    }
    const bool pass = adf_ar >= 180 && adf_rw <= 20 && kpss_rw >= 180 && kpss_ar <= 20;
    return {pass, fmt("ADF rejects AR(0.5) %.1f%%, random walk %.1f%%; KPSS rejects random walk %.1f%%, AR(0.5) %.1f%%",
                      adf_ar / 2.0, adf_rw / 2.0, kpss_rw / 2.0, kpss_ar / 2.0)};
}

// 8. Qualitative BTC/MPU replication.
Verdict qualitative() {
    const char* real = std::getenv("REGIMEKIT_REAL_DATA");
    const std::string path = real && *real ? real : std::string(REGIMEKIT_FIXTURES) + "/btc_mpu_monthly.csv";
    CsvSchema schema;
    schema.value_columns = {"BTC", "MPU"};
    const auto returns = log_returns(load_csv(path, schema));
    msvar::MsVarSpec spec;
    spec.k = 2;
    spec.q = 1;
    spec.r = 2;
    spec.switch_ar = true;
    msvar::EmOptions opt;
    opt.seed = 42;
    opt.restarts = 20;
    opt.standard_errors = false;
    const auto m = msvar::em_fit(returns, spec, opt).model;
    const double v1 = m.covariances[0].trace(), v2 = m.covariances[1].trace();
    const bool a = v2 >= 1.5 * v1 && m.covariances[1](0, 0) > m.covariances[0](0, 0);
    const double b1 = m.ar[0][0](0, 1), b2 = m.ar[1][0](0, 1);
    const bool b = b1 < 0.0 && b2 < 0.0;
    const bool c = m.transitions(0, 0) > 0.7 && m.transitions(1, 1) > 0.7;
    std::string src = real && *real ? "user data" : "synthetic fixture";
    return {a && b && c,
            src + ", MSMAH(2)-VAR(1): (a) covariance traces " + fmt("%.4f < %.4f", v1, v2) + (a ? " ok" : " not distinct") +
                "; (b) MPU(-1) in BTC eq " + fmt("%.3f, %.3f", b1, b2) + (b ? " ok" : " not both negative") +
                "; (c) P diagonal " + fmt("%.3f, %.3f", m.transitions(0, 0), m.transitions(1, 1)) +
                (c ? " ok" : " not both > 0.7")};
}

// 9. CLI determinism: every subcommand twice into the same directory.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::ifstream f(e.path(), std::ios::binary);
        std::ostringstream s;
        s << f.rdbuf();
        out[e.path().filename().string()] = s.str();
    }
    return out;
}

Verdict determinism() {
    const std::string fx = REGIMEKIT_FIXTURES;
    const fs::path base = fs::temp_directory_path() / "regimekit_acceptance";
    fs::remove_all(base);
    const fs::path model = base / "fit" / "model.json";
    const std::vector<std::vector<std::string>> commands = {
        {"describe", "--input", fx + "/btc_mpu_monthly.csv", "--returns", "--format", "json"},
        {"unitroot", "--input", fx + "/btc_mpu_monthly.csv", "--tests", "adf,pp,kpss", "--forms", "level,log,return"},
        {"lagselect", "--input", fx + "/btc_mpu_monthly.csv", "--max-lag", "8", "--format", "csv"},
        {"johansen", "--input", fx + "/btc_mpu_monthly.csv", "--transform", "log", "--format", "json"},
        {"fit-msvar", "--input", fx + "/btc_mpu_monthly.csv", "--regimes", "2", "--lags", "1", "--switch", "mean",
         "--restarts", "20", "--seed", "42"},
        {"irf", "--model", model.string(), "--horizon", "12", "--format", "json"},
        {"event-study", "--prices", fx + "/btc_hourly_fomc.csv", "--calendar", fx + "/fomc_calendar.csv", "--window", "1",
         "--lags", "1"},
    };
    const std::vector<std::string> dirs = {"describe", "unitroot", "lagselect", "johansen", "fit", "irf", "event"};
    int files = 0;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        auto args = commands[i];
        args.push_back("--out");
        args.push_back((base / dirs[i]).string());
        std::ostringstream o1, e1, o2, e2;
        if (cli::run(args, o1, e1) != 0) return {false, dirs[i] + " failed: " + e1.str()};
        const auto first = snapshot(base / dirs[i]);
        if (cli::run(args, o2, e2) != 0) return {false, dirs[i] + " failed on repeat: " + e2.str()};
        if (snapshot(base / dirs[i]) != first || o1.str() != o2.str()) return {false, dirs[i] + " output differs"};
        files += static_cast<int>(first.size());
    }
    fs::remove_all(base);
    return {true, fmt("7 subcommands run twice, %.0f output files byte-identical", files)};
}

}  // namespace

int main() {
    criterion(1, "filter-oracle equivalence", 10, filter_oracle);
    criterion(2, "EM monotonicity", 120, em_monotone);
    criterion(3, "parameter recovery", 300, recovery);
    criterion(4, "probability normalization", 0, normalization);
    criterion(5, "VAR(1) IRF closed form", 0, irf_closed_form);
    criterion(6, "Johansen size/power", 120, johansen);
    criterion(7, "unit-root size/power", 0, unit_root);
    criterion(8, "qualitative BTC/MPU replication", 0, qualitative);
    criterion(9, "CLI determinism", 0, determinism);
    std::printf("%d of 9 criteria passed\n", 9 - failures);
    return failures == 0 ? 0 : 1;
}
