#include "doctest.h"

#include "oracles.hpp"

#include "regimekit/error.hpp"
#include "regimekit/msvar.hpp"
#include "regimekit/simulate.hpp"
#include "regimekit/timeseries.hpp"
#include "regimekit/var.hpp"

#include <cmath>
#include <numbers>

using namespace regimekit;
using namespace regimekit::msvar;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Eigen::MatrixXd m2(double a, double b, double c, double d) {
    Eigen::MatrixXd m(2, 2);
    m << a, b, c, d;
    return m;
}

MsVarModel univariate(double mu1, double mu2, double s1, double s2, Eigen::MatrixXd P, int q = 0,
                      SwitchTarget target = SwitchTarget::Mean, double phi = 0.0) {
    MsVarModel m;
    m.spec.k = 1;
    m.spec.q = q;
    m.spec.r = 2;
    m.spec.switch_target = target;
    m.names = {"y"};
    m.means = {Eigen::VectorXd::Constant(1, mu1), Eigen::VectorXd::Constant(1, mu2)};
    std::vector<Eigen::MatrixXd> ar;
    for (int l = 0; l < q; ++l) ar.push_back(Eigen::MatrixXd::Constant(1, 1, phi));
    m.ar = {ar, ar};
    m.covariances = {Eigen::MatrixXd::Constant(1, 1, s1 * s1), Eigen::MatrixXd::Constant(1, 1, s2 * s2)};
    m.transitions = TransitionMatrix(std::move(P));
    return m;
}

// MSM(2)-VAR(1) in the range of the published BTC estimates.
MsVarModel recovery_model() {
    MsVarModel m = univariate(0.027, 0.286, 0.24, 0.51, m2(0.97, 0.03, 0.105, 0.895), 1, SwitchTarget::Mean, 0.2);
    return m;
}

void check_rows_sum_to_one(const Eigen::MatrixXd& m, double tol) {
    CHECK((m.rowwise().sum().array() - 1.0).abs().maxCoeff() < tol);
}

}  // namespace

TEST_CASE("spec labels and validation") {
    MsVarSpec s;
    s.k = 2;
    s.q = 1;
    s.r = 2;
    CHECK(s.label() == "MSMH(2)-VAR(1)");
    CHECK(s.state_count() == 4);
    s.switch_target = SwitchTarget::Intercept;
    s.switch_ar = true;
    s.r = 3;
    s.q = 2;
    CHECK(s.label() == "MSIAH(3)-VAR(2)");
    CHECK(s.state_count() == 3);
    s.switch_variance = false;
    CHECK(s.label() == "MSIA(3)-VAR(2)");
    s.r = 1;
    CHECK_THROWS_WITH(s.validate(), doctest::Contains("at least 2 regimes"));
    CHECK(switch_target_from_string(to_string(SwitchTarget::Mean)) == SwitchTarget::Mean);
}

TEST_CASE("transition matrix") {
    CHECK_THROWS(TransitionMatrix(m2(0.9, 0.2, 0.5, 0.5)));
    CHECK_THROWS(TransitionMatrix(m2(1.1, -0.1, 0.5, 0.5)));
    CHECK_NOTHROW(TransitionMatrix(m2(0.9, 0.1, 0.5, 0.5)));

    const Eigen::VectorXd half = ergodic_distribution(TransitionMatrix(m2(0.5, 0.5, 0.5, 0.5)));
    CHECK(half(0) == doctest::Approx(0.5));
    CHECK(half(1) == doctest::Approx(0.5));

    const Eigen::MatrixXd P = m2(0.895, 0.105, 0.03, 0.97);
    const Eigen::VectorXd pi = ergodic_distribution(TransitionMatrix(P));
    CHECK((pi - oracle::stationary(P)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(pi(0) == doctest::Approx(0.222).epsilon(0.002));
    CHECK(pi(1) == doctest::Approx(0.778).epsilon(0.002));

    CHECK_THROWS_WITH(ergodic_distribution(TransitionMatrix(Eigen::MatrixXd::Identity(2, 2))),
                      doctest::Contains("reducible"));
    CHECK_THROWS(ergodic_distribution(TransitionMatrix(m2(0, 1, 1, 0))));

    CHECK(expected_duration(TransitionMatrix(m2(0.5, 0.5, 0.5, 0.5)))(0) == doctest::Approx(2.0));
    CHECK(expected_duration(TransitionMatrix(m2(0.7167, 0.2833, 0.08267, 0.91733)))(0) ==
          doctest::Approx(3.53).epsilon(0.002));
    CHECK(expected_duration(TransitionMatrix(P))(1) == doctest::Approx(33.3).epsilon(0.002));
    CHECK_THROWS(expected_duration(TransitionMatrix(Eigen::MatrixXd::Identity(2, 2))));
}

TEST_CASE("conditional density") {
    const auto m = univariate(0.3, -1.0, 1.0, 2.0, m2(0.9, 0.1, 0.1, 0.9));
    CHECK(conditional_density(m, 0, Eigen::VectorXd::Constant(1, 0.3), Eigen::MatrixXd(0, 1)) ==
          doctest::Approx(-0.5 * kLog2Pi).epsilon(1e-15));

    MsVarModel b;
    b.spec.k = 2;
    b.spec.r = 2;
    b.means = {Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones()};
    b.ar = {{}, {}};
    b.covariances = {Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)};
    b.transitions = TransitionMatrix(m2(0.9, 0.1, 0.1, 0.9));
    CHECK(conditional_density(b, 0, Eigen::Vector2d(3, 4), Eigen::MatrixXd(0, 2)) ==
          doctest::Approx(-kLog2Pi - 12.5).epsilon(1e-15));

    Rng rng(Seed{31});
    for (auto target : {SwitchTarget::Mean, SwitchTarget::Intercept}) {
        const auto m3 = oracle::random_model(rng, 3, 2, 2, target, true);
        const Eigen::MatrixXd x = oracle::random_data(rng, 3, 3);
        const std::vector<int> path = {1, 0, 1};  // regimes of rows 0, 1, 2
        Eigen::MatrixXd history(2, 3);
        history.row(0) = x.row(1);
        history.row(1) = x.row(0);
        const double got = conditional_density(m3, 1, x.row(2).transpose(), history, {0, 1});
        CHECK(got == doctest::Approx(oracle::path_density(m3, x, 2, path)).epsilon(1e-12));
    }
}

TEST_CASE("filter and smoother match exhaustive path enumeration") {
    Rng rng(Seed{2718});
    struct Case {
        int k, q;
        SwitchTarget target;
        bool switch_ar;
    };
    const Case cases[] = {{1, 0, SwitchTarget::Intercept, false}, {2, 1, SwitchTarget::Intercept, false},
                          {1, 0, SwitchTarget::Mean, false},      {2, 1, SwitchTarget::Mean, false},
                          {1, 2, SwitchTarget::Mean, true},       {2, 1, SwitchTarget::Intercept, true}};
    for (const auto& c : cases) {
        for (int rep = 0; rep < 3; ++rep) {
            const auto m = oracle::random_model(rng, c.k, c.q, 2, c.target, c.switch_ar);
            const Eigen::MatrixXd x = oracle::random_data(rng, 8 + c.q, c.k);
            const auto ref = oracle::enumerate(m, x);
            const auto f = kim_smoother(hamilton_filter(m, x), m.transitions);
            CAPTURE(m.spec.label());
            CHECK(f.log_likelihood == doctest::Approx(ref.log_likelihood).epsilon(1e-12));
            CHECK(std::abs(f.log_likelihood - ref.log_likelihood) < 1e-10);
            CHECK((f.filtered - ref.filtered).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((f.smoothed - ref.smoothed).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
    // three regimes, MSI
    const auto m = oracle::random_model(rng, 1, 1, 3, SwitchTarget::Intercept);
    const Eigen::MatrixXd x = oracle::random_data(rng, 7, 1);
    const auto ref = oracle::enumerate(m, x);
    const auto f = kim_smoother(hamilton_filter(m, x), m.transitions);
    CHECK(std::abs(f.log_likelihood - ref.log_likelihood) < 1e-10);
    CHECK((f.smoothed - ref.smoothed).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("filter output invariants") {
    Rng rng(Seed{99});
    const auto m = oracle::random_model(rng, 2, 2, 3, SwitchTarget::Mean);
    const auto sim = simulate::simulate_msvar(m, 300, 50, Seed{4});
    const auto f = kim_smoother(hamilton_filter(m, sim.series), m.transitions);
    CHECK(f.timestamps.size() == 298);
    CHECK(f.timestamps.front() == sim.series.timestamps()[2]);
    CHECK(f.filtered_states.cols() == 27);
    for (const auto* p : {&f.predicted, &f.filtered, &f.smoothed, &f.predicted_states, &f.filtered_states,
                          &f.smoothed_states}) {
        check_rows_sum_to_one(*p, 1e-10);
        CHECK(p->minCoeff() >= 0.0);
    }
    CHECK(f.smoothed.row(f.smoothed.rows() - 1) == f.filtered.row(f.filtered.rows() - 1));
    CHECK(std::isfinite(f.log_likelihood));
    CHECK(f.regime_path.size() == 298);
    CHECK(f.transition_counts.sum() == doctest::Approx(297.0 + 2.0));
    CHECK(f.initial_weights.sum() == doctest::Approx(1.0));

    const auto csv = probabilities_to_csv(f, true);
    CHECK(csv.rfind("date,prob_regime_1,prob_regime_2,prob_regime_3\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 299);
}

TEST_CASE("uninformative and absorbing chains") {
    // identical regimes: data carry no regime information
    auto same = univariate(0.1, 0.1, 1.0, 1.0, m2(0.8, 0.2, 0.4, 0.6), 1, SwitchTarget::Mean, 0.3);
    const auto sim = simulate::simulate_msvar(same, 100, 20, Seed{6});
    const auto f = hamilton_filter(same, sim.series);
    CHECK((f.filtered - f.predicted).cwiseAbs().maxCoeff() < 1e-12);

    // P = I with all data from regime 1
    const auto frozen = univariate(-2.0, 2.0, 0.5, 0.5, Eigen::MatrixXd::Identity(2, 2));
    Rng rng(Seed{1});
    Eigen::MatrixXd x(60, 1);
    for (auto& v : x.reshaped()) v = -2.0 + 0.5 * rng.normal();
    const auto g = kim_smoother(hamilton_filter(frozen, x), frozen.transitions);
    CHECK(g.predicted(0, 0) == doctest::Approx(0.5));
    CHECK(g.filtered.col(0).tail(55).minCoeff() >= 0.99);
    CHECK((g.smoothed.rowwise() - g.smoothed.row(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero density everywhere is reported") {
    const auto m = univariate(0.0, 0.0, 1e-3, 1e-3, m2(0.9, 0.1, 0.1, 0.9));
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(10, 1);
    // log densities stay finite for merely remote points; this one overflows to -inf
    x(6, 0) = 1e200;
    CHECK_THROWS_WITH_AS(hamilton_filter(m, x), doctest::Contains("observation 7"), NumericalError);
}

TEST_CASE("label permutation leaves the likelihood unchanged") {
    Rng rng(Seed{404});
    for (auto target : {SwitchTarget::Mean, SwitchTarget::Intercept}) {
        const auto m = oracle::random_model(rng, 2, 1, 3, target, true);
        const Eigen::MatrixXd x = simulate::simulate_msvar(m, 200, 20, Seed{7}).series.values();
        const double ll = hamilton_filter(m, x).log_likelihood;
        for (const std::vector<int>& perm : {std::vector<int>{1, 0, 2}, std::vector<int>{2, 0, 1}}) {
            const auto pm = m.permuted(perm);
            CHECK(pm.transitions(0, 1) == m.transitions(perm[0], perm[1]));
            CHECK(std::abs(hamilton_filter(pm, x).log_likelihood - ll) < 1e-12 * std::max(1.0, std::abs(ll)));
        }
        const auto c = canonical_order(m);
        for (int s = 1; s < 3; ++s)
            CHECK(c.covariances[static_cast<std::size_t>(s)].trace() >= c.covariances[static_cast<std::size_t>(s - 1)].trace());
        CHECK(canonical_order(c) == c);
    }
}

TEST_CASE("regime-frozen impulse responses") {
    auto zero = univariate(0.0, 1.0, 1.0, 2.0, m2(0.9, 0.1, 0.1, 0.9), 2, SwitchTarget::Mean, 0.0);
    const auto z = regime_irf(zero, 1, 5);
    CHECK(z.responses[0](0, 0) == 1.0);
    for (int h = 1; h <= 5; ++h) CHECK(z.responses[static_cast<std::size_t>(h)](0, 0) == 0.0);

    Rng rng(Seed{5});
    auto m = oracle::random_model(rng, 2, 2, 2, SwitchTarget::Intercept);
    m.covariances[1] = m.covariances[0];
    m.means[1] = m.means[0];
    var::VarModel v;
    v.k = 2;
    v.p = 2;
    v.intercept = m.means[0];
    v.lag_coefficients = m.ar[0];
    v.residual_covariance = m.covariances[0];
    for (auto shock : {var::ShockType::OneUnit, var::ShockType::Orthogonalized}) {
        const auto lin = var::irf(v, 12, shock);
        for (int s = 0; s < 2; ++s) {
            const auto r = regime_irf(m, s, 12, shock);
            for (int h = 0; h <= 12; ++h)
                CHECK((r.responses[static_cast<std::size_t>(h)] - lin.responses[static_cast<std::size_t>(h)]).cwiseAbs().maxCoeff() <
                      1e-10);
        }
    }
}

TEST_CASE("EM increases the likelihood and keeps P stochastic") {
    const auto truth = recovery_model();
    const auto sim = simulate::simulate_msvar(truth, 600, simulate::kDefaultBurnIn, Seed{21});
    for (int index : {0, 1, 2}) {
        const auto start = initial_model(sim.series.values(), truth.spec, {"y"}, 21, index);
        const auto run = em_iterate(start, sim.series.values(), 1e-8, 500);
        REQUIRE(run.trace.size() >= 2);
        for (std::size_t i = 1; i < run.trace.size(); ++i) CHECK(run.trace[i] >= run.trace[i - 1] - 1e-8);
        check_rows_sum_to_one(run.model.transitions.matrix(), 1e-12);
        CHECK(run.model.transitions.matrix().minCoeff() >= 1e-6 - 1e-15);
    }
}

TEST_CASE("EM recovers a known MSM(2)-VAR(1)") {
    const auto truth = recovery_model();
    const auto sim = simulate::simulate_msvar(truth, 2000, simulate::kDefaultBurnIn, Seed{3});
    EmOptions opt;
    opt.seed = 3;
    opt.restarts = 4;
    const auto fit = em_fit(sim.series, truth.spec, opt);
    const auto& m = fit.model;
    CHECK(fit.diagnostics.converged);
    CHECK(std::abs(m.transitions(0, 0) - 0.97) < 0.05);
    CHECK(std::abs(m.transitions(1, 1) - 0.895) < 0.05);
    CHECK(std::abs(std::sqrt(m.covariances[0](0, 0)) / 0.24 - 1.0) < 0.1);
    CHECK(std::abs(std::sqrt(m.covariances[1](0, 0)) / 0.51 - 1.0) < 0.1);
    CHECK(fit.model.log_likelihood >= hamilton_filter(truth, sim.series).log_likelihood);
    CHECK(fit.diagnostics.aic < fit.diagnostics.linear_var_aic);
    CHECK(fit.diagnostics.restarts.size() == 4);
    CHECK(fit.diagnostics.occupancy.sum() == doctest::Approx(1999.0));
    CHECK(fit.probabilities.has_smoothed());

    // standard errors
    REQUIRE(fit.parameters.size() == static_cast<std::size_t>(m.parameter_count()));
    CHECK(fit.parameters.front().name == "mean[1].y");
    for (const auto& p : fit.parameters) {
        CAPTURE(p.name);
        CHECK(std::isfinite(p.std_error));
        CHECK(p.std_error > 0.0);
        CHECK(p.p_value >= 0.0);
        CHECK(p.p_value <= 1.0);
    }
}

TEST_CASE("EM is deterministic and independent of the thread count") {
    const auto sim = simulate::simulate_msvar(recovery_model(), 300, 50, Seed{8});
    EmOptions opt;
    opt.seed = 11;
    opt.restarts = 5;
    opt.standard_errors = false;
    opt.threads = 1;
    const auto a = em_fit(sim.series, recovery_model().spec, opt);
    opt.threads = 4;
    const auto b = em_fit(sim.series, recovery_model().spec, opt);
    CHECK(a.model == b.model);
    CHECK(a.diagnostics == b.diagnostics);
}

TEST_CASE("MSM and MSI coincide without lags") {
    const auto truth = univariate(-0.5, 1.0, 0.6, 1.2, m2(0.9, 0.1, 0.2, 0.8));
    const auto sim = simulate::simulate_msvar(truth, 500, 50, Seed{13});
    MsVarSpec spec = truth.spec;
    EmOptions opt;
    opt.seed = 1;
    opt.restarts = 3;
    opt.tol = 1e-11;
    opt.max_iter = 5000;
    opt.standard_errors = false;
    const auto msm = em_fit(sim.series, spec, opt);
    spec.switch_target = SwitchTarget::Intercept;
    const auto msi = em_fit(sim.series, spec, opt);
    CHECK(std::abs(msm.model.log_likelihood - msi.model.log_likelihood) < 1e-6);
    CHECK((msm.model.means[0] - msi.model.means[0]).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("two regimes fitted to one-regime data are flagged") {
    const auto one = univariate(0.2, 0.2, 1.0, 1.0, m2(0.5, 0.5, 0.5, 0.5), 1, SwitchTarget::Mean, 0.4);
    const auto sim = simulate::simulate_msvar(one, 400, 50, Seed{17});
    EmOptions opt;
    opt.seed = 2;
    opt.restarts = 3;
    opt.standard_errors = false;
    const auto fit = em_fit(sim.series, one.spec, opt);
    const auto& m = fit.model;
    const bool similar = std::abs(m.means[0](0) - m.means[1](0)) < 0.5 &&
                         std::abs(std::sqrt(m.covariances[0](0, 0)) - std::sqrt(m.covariances[1](0, 0))) < 0.3;
    const bool collapsed = fit.diagnostics.occupancy.minCoeff() < 20.0;
    CHECK((similar || collapsed));
    CHECK_FALSE(fit.diagnostics.flags.empty());
}

TEST_CASE("BTC/MPU fixture: negative MPU lag in the BTC equation") {
    const auto returns = log_returns(load_csv(std::string(REGIMEKIT_FIXTURES) + "/btc_mpu_monthly.csv"));
    MsVarSpec spec;
    spec.k = 2;
    spec.q = 1;
    spec.r = 2;
    EmOptions opt;
    opt.seed = 42;
    opt.restarts = 20;
    opt.standard_errors = false;
    for (bool switch_ar : {false, true}) {
        spec.switch_ar = switch_ar;
        const auto fit = em_fit(returns, spec, opt);
        CAPTURE(spec.label());
        for (int s = 0; s < 2; ++s) {
            CHECK(fit.model.ar[static_cast<std::size_t>(s)][0](0, 1) < 0.0);
            CHECK(regime_irf(fit.model, s, 1).responses[1](0, 1) < 0.0);
        }
        CHECK(std::sqrt(fit.model.covariances[0](0, 0)) < std::sqrt(fit.model.covariances[1](0, 0)));
    }
}
