#include "regimekit/simulate.hpp"

#include "regimekit/error.hpp"
#include "regimekit/linalg.hpp"

#include <chrono>
#include <cmath>

namespace regimekit::simulate {

using msvar::MsVarModel;
using msvar::SwitchTarget;
using msvar::TransitionMatrix;

std::vector<int> sample_markov_chain(const TransitionMatrix& p, int T, ChainStart start, Seed seed) {
    if (T < 1) throw Error("chain length must be at least 1");
    Rng rng(seed);
    const int r = p.size();
    std::vector<int> path(static_cast<std::size_t>(T));
    int s = 0;
    if (start.ergodic) {
        const Eigen::VectorXd pi = msvar::ergodic_distribution(p);
        s = rng.categorical(std::vector<double>(pi.data(), pi.data() + pi.size()));
    } else {
        if (start.state < 0 || start.state >= r) throw Error("initial state out of range");
        s = start.state;
    }
    path[0] = s;
    std::vector<double> row(static_cast<std::size_t>(r));
    for (int t = 1; t < T; ++t) {
        for (int j = 0; j < r; ++j) row[static_cast<std::size_t>(j)] = p(s, j);
        s = rng.categorical(row);
        path[static_cast<std::size_t>(t)] = s;
    }
    return path;
}

std::vector<Instant> synthetic_stamps(int T) {
    using namespace std::chrono;
    std::vector<Instant> out;
    out.reserve(static_cast<std::size_t>(T));
    year_month start{year{2000}, January};
    for (int t = 0; t < T; ++t) {
        const year_month ym = start + months{t};
        out.push_back(time_point_cast<seconds>(sys_days{ym / 1}));
    }
    return out;
}

namespace {

std::vector<std::string> default_names(const std::vector<std::string>& names, int k) {
    if (!names.empty()) return names;
    std::vector<std::string> out;
    for (int j = 0; j < k; ++j) out.push_back("y" + std::to_string(j + 1));
    return out;
}

Eigen::MatrixXd companion(const std::vector<Eigen::MatrixXd>& lags, int k) {
    const auto p = static_cast<Eigen::Index>(lags.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k * p, k * p);
    for (Eigen::Index i = 0; i < p; ++i) c.block(0, i * k, k, k) = lags[static_cast<std::size_t>(i)];
    if (p > 1) c.bottomLeftCorner(k * (p - 1), k * (p - 1)).setIdentity();
    return c;
}

// Level of a stable intercept-form regime: (I - sum B)^-1 alpha; alpha itself otherwise.
Eigen::VectorXd start_level(const MsVarModel& m, int s) {
    const auto& mu = m.means[static_cast<std::size_t>(s)];
    if (m.spec.switch_target == SwitchTarget::Mean) return mu;
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m.spec.k, m.spec.k);
    for (const auto& b : m.ar[static_cast<std::size_t>(s)]) a -= b;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    return lu.isInvertible() ? Eigen::VectorXd(lu.solve(mu)) : Eigen::VectorXd(mu);
}

}  // namespace

Simulation simulate_msvar(const MsVarModel& model, int T, int burn_in, Seed seed) {
    model.validate();
    if (T < 1) throw Error("T must be at least 1");
    if (burn_in < 0) throw Error("burn_in must be nonnegative");
    const int k = model.spec.k, q = model.spec.q, r = model.spec.r;
    const int total = T + burn_in;

    const std::vector<int> chain = sample_markov_chain(model.transitions, total, ChainStart::from_ergodic(), substream(seed, 0));
    Rng rng(substream(seed, 1));

    std::vector<Eigen::MatrixXd> factors;
    for (int s = 0; s < r; ++s) factors.push_back(model.covariance_factor(s));

    bool divergent = false;
    for (int s = 0; s < r; ++s) {
        if (q > 0 && linalg::spectral_radius(companion(model.ar[static_cast<std::size_t>(s)], k)) >= 1.0) divergent = true;
    }

    // Pre-sample lags sit at the starting regime's level.
    const int s0 = chain[0];
    const Eigen::VectorXd level0 = start_level(model, s0);
    Eigen::MatrixXd x(total + q, k);
    std::vector<int> regimes(static_cast<std::size_t>(total + q), s0);
    for (int j = 0; j < q; ++j) x.row(j) = level0.transpose();
    for (int t = 0; t < total; ++t) regimes[static_cast<std::size_t>(t + q)] = chain[static_cast<std::size_t>(t)];

    const bool msm = model.spec.switch_target == SwitchTarget::Mean;
    Eigen::VectorXd z(k), xt(k);
    for (int t = 0; t < total; ++t) {
        const int row = t + q;
        const auto s = static_cast<std::size_t>(regimes[static_cast<std::size_t>(row)]);
        for (int j = 0; j < k; ++j) z(j) = rng.normal();
        xt = model.means[s] + factors[s] * z;
        for (int j = 0; j < q; ++j) {
            const Eigen::VectorXd lag = x.row(row - 1 - j).transpose();
            if (msm)
                xt += model.ar[s][static_cast<std::size_t>(j)] * (lag - model.means[static_cast<std::size_t>(regimes[static_cast<std::size_t>(row - 1 - j)])]);
            else
                xt += model.ar[s][static_cast<std::size_t>(j)] * lag;
        }
        x.row(row) = xt.transpose();
    }

    Simulation out{TimeSeries(synthetic_stamps(T), default_names(model.names, k), x.bottomRows(T), Frequency::Monthly),
                   std::vector<int>(chain.end() - T, chain.end()), divergent};
    if (!x.allFinite()) out.divergent = true;
    return out;
}

MsVarModel as_single_regime(const var::VarModel& model) {
    MsVarModel m;
    m.spec.k = model.k;
    m.spec.q = model.p;
    m.spec.r = 1;
    m.spec.switch_target = SwitchTarget::Intercept;
    m.spec.switch_variance = false;
    m.names = model.names;
    m.means = {model.intercept};
    m.ar = {model.lag_coefficients};
    m.covariances = {model.residual_covariance};
    m.transitions = TransitionMatrix(Eigen::MatrixXd::Ones(1, 1));
    return m;
}

Simulation simulate_var(const var::VarModel& model, int T, int burn_in, Seed seed) {
    return simulate_msvar(as_single_regime(model), T, burn_in, seed);
}

TimeSeries simulate_cointegrated_pair(int T, Seed seed, double spread_ar) {
    if (T < 50) throw Error("cointegrated pair needs T >= 50");
    if (!(spread_ar > -1.0 && spread_ar < 1.0)) throw Error("spread_ar must lie in (-1, 1)");
    Rng rng(seed);
    Eigen::MatrixXd x(T, 2);
    double w = 0.0;
    double u = rng.normal() / std::sqrt(1.0 - spread_ar * spread_ar);
    for (int t = 0; t < T; ++t) {
        w += rng.normal();
        if (t > 0) u = spread_ar * u + rng.normal();
        x(t, 0) = w + u;
        x(t, 1) = w;
    }
    return TimeSeries(synthetic_stamps(T), {"y1", "y2"}, x, Frequency::Monthly);
}

TimeSeries simulate_random_walks(int T, int k, Seed seed) {
    if (T < 1 || k < 1) throw Error("random walks need T >= 1 and k >= 1");
    Rng rng(seed);
    Eigen::MatrixXd x(T, k);
    Eigen::RowVectorXd level = Eigen::RowVectorXd::Zero(k);
    for (int t = 0; t < T; ++t) {
        for (int j = 0; j < k; ++j) level(j) += rng.normal();
        x.row(t) = level;
    }
    std::vector<std::string> names;
    for (int j = 0; j < k; ++j) names.push_back("w" + std::to_string(j + 1));
    return TimeSeries(synthetic_stamps(T), names, x, Frequency::Monthly);
}

}  // namespace regimekit::simulate
