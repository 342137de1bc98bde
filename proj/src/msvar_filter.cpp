#include "msvar_internal.hpp"

#include "regimekit/error.hpp"
#include "regimekit/linalg.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace regimekit::msvar {

namespace detail {

StateSpace::StateSpace(int regimes, int state_lags) : r(regimes), lags(state_lags) {
    for (int j = 0; j < lags; ++j) shift *= r;
    count = shift * r;
}

int StateSpace::digit(int state, int j) const {
    for (int i = 0; i < j; ++i) state /= r;
    return state % r;
}

namespace {

// Ergodic law when it exists; otherwise the Cesaro average of uniform * P^n, which is
// still invariant (uniform for P = I, the average over the cycle for periodic chains).
Eigen::VectorXd start_distribution(const TransitionMatrix& p) {
    try {
        return ergodic_distribution(p);
    } catch (const Error&) {
        const int r = p.size();
        Eigen::RowVectorXd v = Eigen::RowVectorXd::Constant(r, 1.0 / r);
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(r);
        constexpr int kSteps = 2000;
        for (int i = 0; i < kSteps; ++i) {
            acc += v;
            v = v * p.matrix();
        }
        return (acc / acc.sum()).transpose();
    }
}

}  // namespace

Eigen::VectorXd StateSpace::initial(const TransitionMatrix& p) const {
    const Eigen::VectorXd pi = start_distribution(p);
    Eigen::VectorXd out(count);
    for (int a = 0; a < count; ++a) {
        // digit(lags) is the oldest regime; walk forward in time to digit(0).
        double w = pi(digit(a, lags));
        for (int j = lags; j >= 1; --j) w *= p(digit(a, j), digit(a, j - 1));
        out(a) = w;
    }
    return out;
}

StateSpace state_space(const MsVarSpec& spec) {
    return StateSpace(spec.r, spec.switch_target == SwitchTarget::Mean ? spec.q : 0);
}

Eigen::MatrixXd log_densities(const MsVarModel& model, const Eigen::MatrixXd& data) {
    const int q = model.spec.q;
    const int k = model.spec.k;
    if (data.cols() != k)
        throw Error("model expects " + std::to_string(k) + " series, data has " + std::to_string(data.cols()));
    if (data.rows() <= q) throw Error("need more than q = " + std::to_string(q) + " observations");
    const Eigen::Index n = data.rows() - q;
    const StateSpace ss = state_space(model.spec);

    std::vector<linalg::GaussianKernel> kernels;
    for (const auto& c : model.covariances) kernels.emplace_back(c);

    Eigen::MatrixXd logf(n, ss.count);
    Eigen::VectorXd e(k);
    const bool msm = model.spec.switch_target == SwitchTarget::Mean;
    for (Eigen::Index t = 0; t < n; ++t) {
        const Eigen::Index row = t + q;
        for (int a = 0; a < ss.count; ++a) {
            const auto s = static_cast<std::size_t>(ss.current(a));
            const auto& b = model.ar[s];
            e = data.row(row).transpose() - model.means[s];
            for (int j = 0; j < q; ++j) {
                if (msm) {
                    e -= b[static_cast<std::size_t>(j)] *
                         (data.row(row - 1 - j).transpose() - model.means[static_cast<std::size_t>(ss.digit(a, j + 1))]);
                } else {
                    e -= b[static_cast<std::size_t>(j)] * data.row(row - 1 - j).transpose();
                }
            }
            logf(t, a) = kernels[s].log_density(e);
        }
    }
    return logf;
}

namespace {

Eigen::MatrixXd marginal(const StateSpace& ss, const Eigen::MatrixXd& states) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(states.rows(), ss.r);
    for (int a = 0; a < ss.count; ++a) out.col(ss.current(a)) += states.col(a);
    return out;
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& m) {
    std::vector<int> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index t = 0; t < m.rows(); ++t) {
        Eigen::Index best = 0;
        m.row(t).maxCoeff(&best);
        out[static_cast<std::size_t>(t)] = static_cast<int>(best);
    }
    return out;
}

}  // namespace

FilterOutput run_filter(const StateSpace& ss, const TransitionMatrix& p, const Eigen::MatrixXd& logf) {
    const Eigen::Index n = logf.rows();
    FilterOutput out;
    out.regimes = ss.r;
    out.state_lags = ss.lags;
    out.predicted_states.resize(n, ss.count);
    out.filtered_states.resize(n, ss.count);

    Eigen::VectorXd pred = ss.initial(p);
    Eigen::VectorXd w(ss.count);
    double ll = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
        out.predicted_states.row(t) = pred.transpose();
        double m = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < ss.count; ++a) {
            if (pred(a) > 0.0) m = std::max(m, logf(t, a));
        }
        if (!std::isfinite(m))
            throw NumericalError("all regimes have zero density at observation " + std::to_string(t + 1) +
                                 " of the estimation sample");
        double total = 0.0;
        for (int a = 0; a < ss.count; ++a) {
            w(a) = pred(a) > 0.0 ? pred(a) * std::exp(logf(t, a) - m) : 0.0;
            total += w(a);
        }
        if (!(total > 0.0) || !std::isfinite(total))
            throw NumericalError("all regimes have zero density at observation " + std::to_string(t + 1) +
                                 " of the estimation sample");
        ll += m + std::log(total);
        w /= total;
        out.filtered_states.row(t) = w.transpose();

        pred.setZero();
        for (int a = 0; a < ss.count; ++a) {
            if (w(a) == 0.0) continue;
            const int s = ss.current(a);
            for (int next = 0; next < ss.r; ++next) pred(ss.successor(a, next)) += w(a) * p(s, next);
        }
        pred /= pred.sum();
    }
    out.log_likelihood = ll;
    out.predicted = marginal(ss, out.predicted_states);
    out.filtered = marginal(ss, out.filtered_states);
    out.regime_path = argmax_rows(out.filtered);
    return out;
}

}  // namespace detail

FilterOutput hamilton_filter(const MsVarModel& model, const Eigen::MatrixXd& data) {
    model.validate();
    const auto logf = detail::log_densities(model, data);
    return detail::run_filter(detail::state_space(model.spec), model.transitions, logf);
}

FilterOutput hamilton_filter(const MsVarModel& model, const TimeSeries& data) {
    FilterOutput out = hamilton_filter(model, data.values());
    out.timestamps.assign(data.timestamps().begin() + model.spec.q, data.timestamps().end());
    return out;
}

FilterOutput kim_smoother(const FilterOutput& filter, const TransitionMatrix& p) {
    const detail::StateSpace ss(filter.regimes, filter.state_lags);
    if (p.size() != ss.r) throw Error("transition matrix does not match the filter's regime count");
    const Eigen::Index n = filter.filtered_states.rows();
    FilterOutput out = filter;
    out.smoothed_states.resize(n, ss.count);
    out.transition_counts = Eigen::MatrixXd::Zero(ss.r, ss.r);
    if (n == 0) return out;

    out.smoothed_states.row(n - 1) = filter.filtered_states.row(n - 1);
    Eigen::VectorXd ratio(ss.count);
    for (Eigen::Index t = n - 2; t >= 0; --t) {
        for (int b = 0; b < ss.count; ++b) {
            const double pr = filter.predicted_states(t + 1, b);
            ratio(b) = pr > 0.0 ? out.smoothed_states(t + 1, b) / pr : 0.0;
        }
        double total = 0.0;
        for (int a = 0; a < ss.count; ++a) {
            const double f = filter.filtered_states(t, a);
            double acc = 0.0;
            if (f > 0.0) {
                const int s = ss.current(a);
                for (int next = 0; next < ss.r; ++next) {
                    const double pair = f * p(s, next) * ratio(ss.successor(a, next));
                    out.transition_counts(s, next) += pair;
                    acc += pair;
                }
            }
            out.smoothed_states(t, a) = acc;
            total += acc;
        }
        out.smoothed_states.row(t) /= total;
    }

    // Transitions inside the first hidden state, plus the weight on its oldest regime.
    out.initial_weights = Eigen::VectorXd::Zero(ss.r);
    for (int a = 0; a < ss.count; ++a) {
        const double w = out.smoothed_states(0, a);
        out.initial_weights(ss.digit(a, ss.lags)) += w;
        for (int j = ss.lags; j >= 1; --j) out.transition_counts(ss.digit(a, j), ss.digit(a, j - 1)) += w;
    }

    out.smoothed = Eigen::MatrixXd::Zero(n, ss.r);
    for (int a = 0; a < ss.count; ++a) out.smoothed.col(ss.current(a)) += out.smoothed_states.col(a);
    out.regime_path.assign(static_cast<std::size_t>(n), 0);
    for (Eigen::Index t = 0; t < n; ++t) {
        Eigen::Index best = 0;
        out.smoothed.row(t).maxCoeff(&best);
        out.regime_path[static_cast<std::size_t>(t)] = static_cast<int>(best);
    }
    return out;
}

std::string probabilities_to_csv(const FilterOutput& f, bool smoothed) {
    const Eigen::MatrixXd& m = smoothed && f.has_smoothed() ? f.smoothed : f.filtered;
    std::string out = "date";
    for (int i = 0; i < f.regimes; ++i) out += ",prob_regime_" + std::to_string(i + 1);
    out += "\n";
    char buf[40];
    for (Eigen::Index t = 0; t < m.rows(); ++t) {
        out += static_cast<std::size_t>(t) < f.timestamps.size() ? format_instant(f.timestamps[static_cast<std::size_t>(t)])
                                                                  : std::to_string(t);
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, ",%.10f", m(t, j));
            out += buf;
        }
        out += "\n";
    }
    return out;
}

}  // namespace regimekit::msvar
