#include "msvar_internal.hpp"

#include "regimekit/error.hpp"
#include "regimekit/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>

namespace regimekit::msvar {

namespace {

using detail::StateSpace;

constexpr double kMinProb = 1e-6;

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const char* what) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0)
        throw NumericalError(std::string("singular normal equations in the ") + what + " step");
    return ldlt.solve(b);
}

// Kronecker-weighted system sum_s (Sinv_s (x) A_s) vec(Theta) = vec(sum_s C_s Sinv_s), Theta m x k.
Eigen::MatrixXd gls_shared(const std::vector<Eigen::MatrixXd>& a, const std::vector<Eigen::MatrixXd>& c,
                           const std::vector<Eigen::MatrixXd>& sinv, const char* what) {
    const Eigen::Index m = a[0].rows();
    const Eigen::Index k = sinv[0].rows();
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(m * k, m * k);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, k);
    for (std::size_t s = 0; s < a.size(); ++s) {
        for (Eigen::Index l = 0; l < k; ++l) {
            for (Eigen::Index j = 0; j < k; ++j) lhs.block(l * m, j * m, m, m) += sinv[s](l, j) * a[s];
        }
        rhs += c[s] * sinv[s];
    }
    const Eigen::VectorXd rhs_vec = Eigen::Map<const Eigen::VectorXd>(rhs.data(), rhs.size());
    const Eigen::VectorXd theta = solve_spd(symmetrize(lhs), rhs_vec, what);
    return Eigen::Map<const Eigen::MatrixXd>(theta.data(), m, k);
}

std::vector<Eigen::MatrixXd> inverses(const std::vector<Eigen::MatrixXd>& covs) {
    std::vector<Eigen::MatrixXd> out;
    for (const auto& c : covs) {
        Eigen::LLT<Eigen::MatrixXd> llt(c);
        if (llt.info() != Eigen::Success) throw NumericalError("regime covariance lost positive definiteness");
        out.push_back(llt.solve(Eigen::MatrixXd::Identity(c.rows(), c.cols())));
    }
    return out;
}

Eigen::VectorXd lag_stack(const Eigen::MatrixXd& x, Eigen::Index row, int q) {
    const Eigen::Index k = x.cols();
    Eigen::VectorXd z(k * q);
    for (int j = 0; j < q; ++j) z.segment(j * k, k) = x.row(row - 1 - j).transpose();
    return z;
}

struct Moments {
    const Eigen::MatrixXd& x;
    const Eigen::MatrixXd& w;  // smoothed hidden-state weights, n x states
    const StateSpace& ss;
    int q;
};

// Regime covariances from the current mean/AR parameters.
void covariance_step(MsVarModel& m, const Moments& mo) {
    const int k = m.spec.k, r = m.spec.r, q = mo.q;
    const bool msm = m.spec.switch_target == SwitchTarget::Mean;
    std::vector<Eigen::MatrixXd> acc(static_cast<std::size_t>(r), Eigen::MatrixXd::Zero(k, k));
    std::vector<double> weight(static_cast<std::size_t>(r), 0.0);
    Eigen::VectorXd e(k);
    for (Eigen::Index t = 0; t < mo.w.rows(); ++t) {
        const Eigen::Index row = t + q;
        for (int a = 0; a < mo.ss.count; ++a) {
            const double wt = mo.w(t, a);
            if (wt <= 0.0) continue;
            const auto s = static_cast<std::size_t>(mo.ss.current(a));
            e = mo.x.row(row).transpose() - m.means[s];
            for (int j = 0; j < q; ++j) {
                const Eigen::VectorXd lag = msm ? Eigen::VectorXd(mo.x.row(row - 1 - j).transpose() -
                                                                  m.means[static_cast<std::size_t>(mo.ss.digit(a, j + 1))])
                                                : Eigen::VectorXd(mo.x.row(row - 1 - j).transpose());
                e -= m.ar[s][static_cast<std::size_t>(j)] * lag;
            }
            acc[s].noalias() += wt * e * e.transpose();
            weight[s] += wt;
        }
    }
    if (m.spec.switch_variance) {
        for (int s = 0; s < r; ++s) m.covariances[static_cast<std::size_t>(s)] = symmetrize(acc[static_cast<std::size_t>(s)] / weight[static_cast<std::size_t>(s)]);
    } else {
        Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(k, k);
        double total = 0.0;
        for (int s = 0; s < r; ++s) {
            pooled += acc[static_cast<std::size_t>(s)];
            total += weight[static_cast<std::size_t>(s)];
        }
        for (auto& c : m.covariances) c = symmetrize(pooled / total);
    }
    for (int s = 0; s < r; ++s) {
        Eigen::LLT<Eigen::MatrixXd> llt(m.covariances[static_cast<std::size_t>(s)]);
        if (llt.info() != Eigen::Success)
            throw NumericalError("regime " + std::to_string(s + 1) + " covariance became singular");
    }
}

// Intercept switching: joint intercept/AR update by weighted GLS.
void msi_coefficient_step(MsVarModel& m, const Moments& mo) {
    const int k = m.spec.k, r = m.spec.r, q = mo.q;
    const Eigen::Index n = mo.w.rows();
    if (m.spec.switch_ar) {
        const Eigen::Index dim = 1 + k * q;
        for (int s = 0; s < r; ++s) {
            Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
            Eigen::MatrixXd c = Eigen::MatrixXd::Zero(dim, k);
            Eigen::VectorXd z(dim);
            for (Eigen::Index t = 0; t < n; ++t) {
                const double wt = mo.w(t, s);
                if (wt <= 0.0) continue;
                z(0) = 1.0;
                z.tail(k * q) = lag_stack(mo.x, t + q, q);
                a.noalias() += wt * z * z.transpose();
                c.noalias() += wt * z * mo.x.row(t + q);
            }
            Eigen::LDLT<Eigen::MatrixXd> ldlt(symmetrize(a));
            if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0)
                throw NumericalError("singular normal equations in the intercept step");
            const Eigen::MatrixXd theta = ldlt.solve(c);
            m.means[static_cast<std::size_t>(s)] = theta.row(0).transpose();
            for (int j = 0; j < q; ++j)
                m.ar[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] = theta.middleRows(1 + j * k, k).transpose();
        }
        return;
    }
    const Eigen::Index dim = r + k * q;
    std::vector<Eigen::MatrixXd> a(static_cast<std::size_t>(r), Eigen::MatrixXd::Zero(dim, dim));
    std::vector<Eigen::MatrixXd> c(static_cast<std::size_t>(r), Eigen::MatrixXd::Zero(dim, k));
    Eigen::VectorXd z(dim);
    for (Eigen::Index t = 0; t < n; ++t) {
        const Eigen::VectorXd lags = lag_stack(mo.x, t + q, q);
        for (int s = 0; s < r; ++s) {
            const double wt = mo.w(t, s);
            if (wt <= 0.0) continue;
            z.setZero();
            z(s) = 1.0;
            z.tail(k * q) = lags;
            a[static_cast<std::size_t>(s)].noalias() += wt * z * z.transpose();
            c[static_cast<std::size_t>(s)].noalias() += wt * z * mo.x.row(t + q);
        }
    }
    const Eigen::MatrixXd theta = gls_shared(a, c, inverses(m.covariances), "intercept");
    for (int s = 0; s < r; ++s) {
        m.means[static_cast<std::size_t>(s)] = theta.row(s).transpose();
        for (int j = 0; j < q; ++j)
            m.ar[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] = theta.middleRows(r + j * k, k).transpose();
    }
}

// Mean switching, step 1: AR coefficients given the regime means.
void msm_ar_step(MsVarModel& m, const Moments& mo) {
    const int k = m.spec.k, r = m.spec.r, q = mo.q;
    if (q == 0) return;
    const Eigen::Index dim = k * q;
    std::vector<Eigen::MatrixXd> a(static_cast<std::size_t>(r), Eigen::MatrixXd::Zero(dim, dim));
    std::vector<Eigen::MatrixXd> c(static_cast<std::size_t>(r), Eigen::MatrixXd::Zero(dim, k));
    Eigen::VectorXd z(dim), y(k);
    for (Eigen::Index t = 0; t < mo.w.rows(); ++t) {
        const Eigen::Index row = t + q;
        for (int st = 0; st < mo.ss.count; ++st) {
            const double wt = mo.w(t, st);
            if (wt <= 0.0) continue;
            const auto s = static_cast<std::size_t>(mo.ss.current(st));
            y = mo.x.row(row).transpose() - m.means[s];
            for (int j = 0; j < q; ++j)
                z.segment(j * k, k) = mo.x.row(row - 1 - j).transpose() - m.means[static_cast<std::size_t>(mo.ss.digit(st, j + 1))];
            a[s].noalias() += wt * z * z.transpose();
            c[s].noalias() += wt * z * y.transpose();
        }
    }
    if (m.spec.switch_ar) {
        for (int s = 0; s < r; ++s) {
            Eigen::LDLT<Eigen::MatrixXd> ldlt(symmetrize(a[static_cast<std::size_t>(s)]));
            if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0)
                throw NumericalError("singular normal equations in the AR step");
            const Eigen::MatrixXd theta = ldlt.solve(c[static_cast<std::size_t>(s)]);
            for (int j = 0; j < q; ++j)
                m.ar[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] = theta.middleRows(j * k, k).transpose();
        }
    } else {
        const Eigen::MatrixXd theta = gls_shared(a, c, inverses(m.covariances), "AR");
        for (int s = 0; s < r; ++s) {
            for (int j = 0; j < q; ++j)
                m.ar[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] = theta.middleRows(j * k, k).transpose();
        }
    }
}

// Mean switching, step 2: all regime means jointly given the AR coefficients.
void msm_mean_step(MsVarModel& m, const Moments& mo) {
    const int k = m.spec.k, r = m.spec.r, q = mo.q;
    const auto sinv = inverses(m.covariances);
    const Eigen::Index dim = static_cast<Eigen::Index>(r) * k;
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd d(k, dim);
    Eigen::VectorXd y(k);
    for (Eigen::Index t = 0; t < mo.w.rows(); ++t) {
        const Eigen::Index row = t + q;
        for (int st = 0; st < mo.ss.count; ++st) {
            const double wt = mo.w(t, st);
            if (wt <= 0.0) continue;
            const int s = mo.ss.current(st);
            const auto& b = m.ar[static_cast<std::size_t>(s)];
            y = mo.x.row(row).transpose();
            d.setZero();
            d.middleCols(static_cast<Eigen::Index>(s) * k, k).diagonal().array() += 1.0;
            for (int j = 0; j < q; ++j) {
                y -= b[static_cast<std::size_t>(j)] * mo.x.row(row - 1 - j).transpose();
                d.middleCols(static_cast<Eigen::Index>(mo.ss.digit(st, j + 1)) * k, k) -= b[static_cast<std::size_t>(j)];
            }
            const Eigen::MatrixXd ds = d.transpose() * sinv[static_cast<std::size_t>(s)];
            lhs.noalias() += wt * ds * d;
            rhs.noalias() += wt * ds * y;
        }
    }
    const Eigen::VectorXd mu = solve_spd(symmetrize(lhs), rhs, "mean");
    for (int s = 0; s < r; ++s) m.means[static_cast<std::size_t>(s)] = mu.segment(static_cast<Eigen::Index>(s) * k, k);
}

double transition_objective(const Eigen::MatrixXd& p, const Eigen::MatrixXd& counts, const Eigen::VectorXd& n0) {
    double q = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.cols(); ++j) {
            if (counts(i, j) > 0.0) q += counts(i, j) * std::log(p(i, j));
        }
    }
    const Eigen::VectorXd pi = ergodic_distribution(TransitionMatrix(p));
    for (Eigen::Index i = 0; i < n0.size(); ++i) {
        if (n0(i) > 0.0) q += n0(i) * std::log(std::max(pi(i), 1e-300));
    }
    return q;
}

Eigen::MatrixXd clamp_rows(Eigen::MatrixXd p) {
    for (int pass = 0; pass < 3; ++pass) {
        p = p.cwiseMax(kMinProb).cwiseMin(1.0 - kMinProb);
        for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
    }
    return p;
}

// Row-normalized expected counts, clamped; accepted only if the expected complete-data
// objective (transitions plus the ergodic start) does not fall, with step halving otherwise.
TransitionMatrix transition_step(const TransitionMatrix& old, const Eigen::MatrixXd& counts, const Eigen::VectorXd& n0) {
    const Eigen::MatrixXd& p_old = old.matrix();
    Eigen::MatrixXd cand = p_old;
    for (Eigen::Index i = 0; i < counts.rows(); ++i) {
        const double total = counts.row(i).sum();
        if (total > 0.0) cand.row(i) = counts.row(i) / total;
    }
    if (p_old.rows() == 1) return old;
    cand = clamp_rows(cand);
    const double q_old = transition_objective(p_old, counts, n0);
    double step = 1.0;
    for (int attempt = 0; attempt < 40; ++attempt) {
        Eigen::MatrixXd p = p_old + step * (cand - p_old);
        for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
        if (transition_objective(p, counts, n0) >= q_old) return TransitionMatrix(p);
        step *= 0.5;
    }
    return old;
}

FilterOutput e_step(const MsVarModel& m, const Eigen::MatrixXd& x) {
    const auto logf = detail::log_densities(m, x);
    const StateSpace ss = detail::state_space(m.spec);
    return kim_smoother(detail::run_filter(ss, m.transitions, logf), m.transitions);
}

MsVarModel m_step(const MsVarModel& cur, const FilterOutput& f, const Eigen::MatrixXd& x) {
    const StateSpace ss = detail::state_space(cur.spec);
    for (int s = 0; s < cur.spec.r; ++s) {
        const double occ = f.smoothed.col(s).sum();
        if (occ < 1.0)
            throw NumericalError("degenerate regime " + std::to_string(s + 1) + ": expected occupancy " +
                                 std::to_string(occ) + " < 1 observation");
    }
    MsVarModel m = cur;
    const Moments mo{x, f.smoothed_states, ss, cur.spec.q};
    if (cur.spec.switch_target == SwitchTarget::Mean) {
        msm_ar_step(m, mo);
        msm_mean_step(m, mo);
    } else {
        msi_coefficient_step(m, mo);
    }
    covariance_step(m, mo);
    m.transitions = transition_step(cur.transitions, f.transition_counts, f.initial_weights);
    return m;
}

double series_sd(const Eigen::VectorXd& v) {
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / std::max<double>(1.0, static_cast<double>(v.size()) - 1.0));
}

// Deterministic 1-D k-means, initialised at quantiles.
std::vector<int> kmeans_1d(const Eigen::VectorXd& v, int r) {
    const Eigen::Index n = v.size();
    std::vector<double> sorted(v.data(), v.data() + n);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> centers(static_cast<std::size_t>(r));
    for (int c = 0; c < r; ++c) {
        const auto idx = static_cast<std::size_t>(std::min<double>(static_cast<double>(n - 1), std::floor((c + 0.5) / r * static_cast<double>(n))));
        centers[static_cast<std::size_t>(c)] = sorted[idx];
    }
    std::vector<int> label(static_cast<std::size_t>(n), 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (Eigen::Index t = 0; t < n; ++t) {
            int best = 0;
            for (int c = 1; c < r; ++c) {
                if (std::abs(v(t) - centers[static_cast<std::size_t>(c)]) < std::abs(v(t) - centers[static_cast<std::size_t>(best)])) best = c;
            }
            if (label[static_cast<std::size_t>(t)] != best) {
                label[static_cast<std::size_t>(t)] = best;
                changed = true;
            }
        }
        std::vector<double> sum(static_cast<std::size_t>(r), 0.0);
        std::vector<int> cnt(static_cast<std::size_t>(r), 0);
        for (Eigen::Index t = 0; t < n; ++t) {
            sum[static_cast<std::size_t>(label[static_cast<std::size_t>(t)])] += v(t);
            ++cnt[static_cast<std::size_t>(label[static_cast<std::size_t>(t)])];
        }
        for (int c = 0; c < r; ++c) {
            if (cnt[static_cast<std::size_t>(c)] > 0) centers[static_cast<std::size_t>(c)] = sum[static_cast<std::size_t>(c)] / cnt[static_cast<std::size_t>(c)];
        }
        if (!changed && iter > 0) break;
    }
    // Relabel clusters by ascending center.
    std::vector<int> order(static_cast<std::size_t>(r));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return centers[static_cast<std::size_t>(a)] < centers[static_cast<std::size_t>(b)]; });
    std::vector<int> rank(static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;
    for (auto& l : label) l = rank[static_cast<std::size_t>(l)];
    return label;
}

}  // namespace

MsVarModel initial_model(const Eigen::MatrixXd& x, const MsVarSpec& spec, std::vector<std::string> names,
                         std::uint64_t seed, int index) {
    const int k = spec.k, q = spec.q, r = spec.r;
    const Eigen::Index n = x.rows() - q;
    const var::VarModel lin = var::fit_var(x, q, q, names);
    const Eigen::MatrixXd u = var::var_residuals(lin, x, q);

    Eigen::VectorXd usd(k), xsd(k);
    for (int j = 0; j < k; ++j) {
        usd(j) = std::max(series_sd(u.col(j)), 1e-12);
        xsd(j) = std::max(series_sd(x.col(j).tail(n)), 1e-12);
    }
    Eigen::VectorXd energy(n);
    for (Eigen::Index t = 0; t < n; ++t) energy(t) = u.row(t).cwiseQuotient(usd.transpose()).squaredNorm() / k;
    const Eigen::Index h = 3;
    Eigen::VectorXd vol(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, t - h), hi = std::min<Eigen::Index>(n - 1, t + h);
        vol(t) = energy.segment(lo, hi - lo + 1).mean();
    }
    std::vector<int> label = kmeans_1d(vol, r);
    std::vector<int> counts(static_cast<std::size_t>(r), 0);
    for (int l : label) ++counts[static_cast<std::size_t>(l)];
    if (*std::min_element(counts.begin(), counts.end()) < k + 2) {
        // Fall back to equal-size volatility ranks.
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return vol(a) < vol(b); });
        for (Eigen::Index i = 0; i < n; ++i)
            label[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = static_cast<int>(i * r / n);
    }

    MsVarModel m;
    m.spec = spec;
    m.names = names;
    const Eigen::MatrixXd pooled = symmetrize(u.transpose() * u / static_cast<double>(n));
    for (int s = 0; s < r; ++s) {
        Eigen::VectorXd xs = Eigen::VectorXd::Zero(k), us = Eigen::VectorXd::Zero(k);
        Eigen::MatrixXd cs = Eigen::MatrixXd::Zero(k, k);
        int c = 0;
        for (Eigen::Index t = 0; t < n; ++t) {
            if (label[static_cast<std::size_t>(t)] != s) continue;
            xs += x.row(t + q).transpose();
            us += u.row(t).transpose();
            ++c;
        }
        xs /= c;
        us /= c;
        for (Eigen::Index t = 0; t < n; ++t) {
            if (label[static_cast<std::size_t>(t)] != s) continue;
            const Eigen::VectorXd d = u.row(t).transpose() - us;
            cs += d * d.transpose();
        }
        cs = symmetrize(cs / c);
        Eigen::LLT<Eigen::MatrixXd> llt(cs);
        if (llt.info() != Eigen::Success || cs.diagonal().minCoeff() <= 1e-12 * pooled.trace())
            cs = pooled * (1.0 + 0.5 * s);
        m.means.push_back(spec.switch_target == SwitchTarget::Mean ? xs : Eigen::VectorXd(lin.intercept + us));
        m.ar.push_back(lin.lag_coefficients);
        m.covariances.push_back(spec.switch_variance ? cs : pooled);
    }
    Eigen::MatrixXd p = Eigen::MatrixXd::Constant(r, r, 0.1 / (r - 1));
    p.diagonal().setConstant(0.9);
    m.transitions = TransitionMatrix(p);

    if (index > 0) {
        Rng rng(substream(Seed{seed}, static_cast<std::uint64_t>(index)));
        const Eigen::VectorXd& scale = spec.switch_target == SwitchTarget::Mean ? xsd : usd;
        for (int s = 0; s < r; ++s) {
            for (int j = 0; j < k; ++j) m.means[static_cast<std::size_t>(s)](j) += 0.5 * scale(j) * rng.normal();
        }
        if (spec.switch_variance) {
            for (int s = 0; s < r; ++s) m.covariances[static_cast<std::size_t>(s)] *= std::exp(0.3 * rng.normal());
        } else {
            const double f = std::exp(0.3 * rng.normal());
            for (auto& c : m.covariances) c *= f;
        }
    }
    return m;
}

EmRun em_iterate(const MsVarModel& start, const Eigen::MatrixXd& x, double tol, int max_iter) {
    EmRun run;
    MsVarModel cur = start;
    for (int it = 0; it < max_iter; ++it) {
        const FilterOutput f = e_step(cur, x);
        cur.log_likelihood = f.log_likelihood;
        run.trace.push_back(f.log_likelihood);
        run.iterations = it;
        if (it > 0 && run.trace[static_cast<std::size_t>(it)] - run.trace[static_cast<std::size_t>(it - 1)] < tol) {
            run.converged = true;
            break;
        }
        if (it + 1 == max_iter) break;
        cur = m_step(cur, f, x);
    }
    run.model = cur;
    return run;
}

namespace {

std::string nm(const MsVarModel& m, int j) {
    return m.names.empty() ? "y" + std::to_string(j + 1) : m.names[static_cast<std::size_t>(j)];
}

// Parameter vector for the numerical Hessian: means, AR terms, standard deviations and
// correlations, and the free transition probabilities (last column implied).
std::vector<double> pack(const MsVarModel& m, std::vector<std::string>* names) {
    std::vector<double> th;
    const int k = m.spec.k, r = m.spec.r, q = m.spec.q;
    auto add = [&](double v, std::string label) {
        th.push_back(v);
        if (names) names->push_back(std::move(label));
    };
    const std::string mean_label = m.spec.switch_target == SwitchTarget::Mean ? "mean" : "intercept";
    for (int s = 0; s < r; ++s)
        for (int j = 0; j < k; ++j) add(m.means[static_cast<std::size_t>(s)](j), mean_label + "[" + std::to_string(s + 1) + "]." + nm(m, j));
    const int ar_blocks = m.spec.switch_ar ? r : 1;
    for (int s = 0; s < ar_blocks; ++s)
        for (int l = 0; l < q; ++l)
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) {
                    std::string label = "ar";
                    if (m.spec.switch_ar) label += "[" + std::to_string(s + 1) + "]";
                    label += "[" + std::to_string(l + 1) + "]." + nm(m, i) + "." + nm(m, j);
                    add(m.ar[static_cast<std::size_t>(s)][static_cast<std::size_t>(l)](i, j), label);
                }
    const int cov_blocks = m.spec.switch_variance ? r : 1;
    for (int s = 0; s < cov_blocks; ++s) {
        const auto& c = m.covariances[static_cast<std::size_t>(s)];
        const std::string tag = m.spec.switch_variance ? "[" + std::to_string(s + 1) + "]" : "";
        for (int i = 0; i < k; ++i) add(std::sqrt(c(i, i)), "sd" + tag + "." + nm(m, i));
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j)
                add(c(i, j) / std::sqrt(c(i, i) * c(j, j)), "corr" + tag + "." + nm(m, i) + "." + nm(m, j));
    }
    for (int i = 0; i < r; ++i)
        for (int j = 0; j + 1 < r; ++j)
            add(m.transitions(i, j), "p[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]");
    return th;
}

MsVarModel unpack(const MsVarModel& base, const std::vector<double>& th) {
    MsVarModel m = base;
    const int k = m.spec.k, r = m.spec.r, q = m.spec.q;
    std::size_t pos = 0;
    for (int s = 0; s < r; ++s)
        for (int j = 0; j < k; ++j) m.means[static_cast<std::size_t>(s)](j) = th[pos++];
    const int ar_blocks = m.spec.switch_ar ? r : 1;
    for (int s = 0; s < ar_blocks; ++s)
        for (int l = 0; l < q; ++l)
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) m.ar[static_cast<std::size_t>(s)][static_cast<std::size_t>(l)](i, j) = th[pos++];
    if (!m.spec.switch_ar)
        for (int s = 1; s < r; ++s) m.ar[static_cast<std::size_t>(s)] = m.ar[0];
    const int cov_blocks = m.spec.switch_variance ? r : 1;
    for (int s = 0; s < cov_blocks; ++s) {
        Eigen::VectorXd sd(k);
        for (int i = 0; i < k; ++i) sd(i) = th[pos++];
        Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) corr(i, j) = corr(j, i) = th[pos++];
        m.covariances[static_cast<std::size_t>(s)] = sd.asDiagonal() * corr * sd.asDiagonal();
    }
    if (!m.spec.switch_variance)
        for (int s = 1; s < r; ++s) m.covariances[static_cast<std::size_t>(s)] = m.covariances[0];
    Eigen::MatrixXd p(r, r);
    for (int i = 0; i < r; ++i) {
        double rest = 1.0;
        for (int j = 0; j + 1 < r; ++j) {
            p(i, j) = th[pos++];
            rest -= p(i, j);
        }
        p(i, r - 1) = rest;
    }
    m.transitions = TransitionMatrix(p);
    return m;
}

double loglik_or_nan(const MsVarModel& base, const std::vector<double>& th, const Eigen::MatrixXd& x) {
    try {
        return hamilton_filter(unpack(base, th), x).log_likelihood;
    } catch (const Error&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace

bool ParameterEstimate::operator==(const ParameterEstimate& o) const {
    auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
    return name == o.name && same(estimate, o.estimate) && same(std_error, o.std_error) && same(z, o.z) &&
           same(p_value, o.p_value);
}

std::vector<ParameterEstimate> standard_errors(const MsVarModel& model, const Eigen::MatrixXd& x) {
    std::vector<std::string> names;
    const std::vector<double> th = pack(model, &names);
    const auto np = th.size();
    std::vector<double> h(np);
    for (std::size_t i = 0; i < np; ++i) h[i] = 1e-5 * std::max(std::abs(th[i]), 1.0);

    const double f0 = loglik_or_nan(model, th, x);
    Eigen::MatrixXd hess(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(np));
    auto eval = [&](std::size_t i, double di, std::size_t j, double dj) {
        std::vector<double> t = th;
        t[i] += di;
        t[j] += dj;
        return loglik_or_nan(model, t, x);
    };
    for (std::size_t i = 0; i < np; ++i) {
        const double fp = eval(i, h[i], i, 0.0), fm = eval(i, -h[i], i, 0.0);
        hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for (std::size_t j = 0; j < i; ++j) {
            const double v = (eval(i, h[i], j, h[j]) - eval(i, h[i], j, -h[j]) - eval(i, -h[i], j, h[j]) +
                              eval(i, -h[i], j, -h[j])) /
                             (4.0 * h[i] * h[j]);
            hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            hess(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    }

    Eigen::VectorXd var = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(np), std::numeric_limits<double>::quiet_NaN());
    if (hess.allFinite()) {
        const Eigen::MatrixXd info = -hess;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
            for (Eigen::Index i = 0; i < inv.rows(); ++i) var(i) = inv(i, i) > 0.0 ? inv(i, i) : var(i);
        }
    }

    std::vector<ParameterEstimate> out;
    for (std::size_t i = 0; i < np; ++i) {
        ParameterEstimate pe;
        pe.name = names[i];
        pe.estimate = th[i];
        pe.std_error = std::sqrt(var(static_cast<Eigen::Index>(i)));
        pe.z = pe.estimate / pe.std_error;
        pe.p_value = 2.0 * (1.0 - normal_cdf(std::abs(pe.z)));
        out.push_back(pe);
    }
    return out;
}

FitResult em_fit(const TimeSeries& data, const MsVarSpec& spec, const EmOptions& options) {
    spec.validate();
    if (data.cols() != spec.k)
        throw Error("spec has k = " + std::to_string(spec.k) + " but data has " + std::to_string(data.cols()) + " columns");
    const Eigen::MatrixXd& x = data.values();
    const long floor = spec.q + static_cast<long>(spec.r) * spec.k + 5;
    if (x.rows() <= floor)
        throw Error("sample too short for the model: need T > q + r*k + 5 = " + std::to_string(floor));
    if (options.restarts < 1) throw Error("restarts must be at least 1");
    if (options.max_iter < 1) throw Error("max_iter must be at least 1");

    const int restarts = options.restarts;
    std::vector<std::optional<EmRun>> runs(static_cast<std::size_t>(restarts));
    std::vector<RestartRecord> records(static_cast<std::size_t>(restarts));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < restarts; i = next++) {
            RestartRecord& rec = records[static_cast<std::size_t>(i)];
            rec.index = i;
            try {
                const MsVarModel start = initial_model(x, spec, data.names(), options.seed, i);
                EmRun run = em_iterate(start, x, options.tol, options.max_iter);
                rec.converged = run.converged;
                rec.iterations = run.iterations;
                rec.log_likelihood = run.model.log_likelihood;
                runs[static_cast<std::size_t>(i)] = std::move(run);
            } catch (const Error& e) {
                rec.abandoned = true;
                rec.reason = e.what();
            }
        }
    };
    int threads = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, restarts);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    int best = -1;
    for (int i = 0; i < restarts; ++i) {
        if (!runs[static_cast<std::size_t>(i)]) continue;
        if (best < 0 || runs[static_cast<std::size_t>(i)]->model.log_likelihood > runs[static_cast<std::size_t>(best)]->model.log_likelihood)
            best = i;
    }
    if (best < 0) {
        std::string why;
        for (const auto& r : records) why += "\n  restart " + std::to_string(r.index) + ": " + r.reason;
        throw NumericalError("every EM restart was abandoned:" + why);
    }

    FitResult out;
    const EmRun& win = *runs[static_cast<std::size_t>(best)];
    out.model = canonical_order(win.model);
    out.probabilities = kim_smoother(hamilton_filter(out.model, data), out.model.transitions);
    out.model.log_likelihood = out.probabilities.log_likelihood;

    FitDiagnostics& d = out.diagnostics;
    d.converged = win.converged;
    d.iterations = win.iterations;
    d.best_restart = best;
    d.log_likelihood_trace = win.trace;
    d.restarts = records;
    d.occupancy = out.probabilities.smoothed.colwise().sum().transpose();
    d.aic = -2.0 * out.model.log_likelihood + 2.0 * out.model.parameter_count();
    const var::VarModel lin = var::fit_var(x, spec.q, spec.q, data.names());
    const int lin_params = spec.k * (spec.k * spec.q + 1) + spec.k * (spec.k + 1) / 2;
    d.linear_var_aic = -2.0 * lin.log_likelihood + 2.0 * lin_params;

    if (!d.converged) d.flags.push_back("not converged after " + std::to_string(options.max_iter) + " iterations");
    const double n = static_cast<double>(out.probabilities.smoothed.rows());
    const double min_occ = std::max(5.0, 0.02 * n);
    for (int s = 0; s < spec.r; ++s) {
        if (d.occupancy(s) < min_occ)
            d.flags.push_back("occupancy collapse: regime " + std::to_string(s + 1) + " expects " +
                              std::to_string(d.occupancy(s)) + " periods");
    }
    if (d.aic >= d.linear_var_aic) d.flags.push_back("AIC does not favor switching over the linear VAR");
    for (const auto& r : records) {
        if (r.abandoned) d.flags.push_back("restart " + std::to_string(r.index) + " abandoned: " + r.reason);
    }

    if (options.standard_errors) {
        out.parameters = standard_errors(out.model, x);
        for (const auto& p : out.parameters) {
            if (std::isnan(p.std_error)) {
                d.flags.push_back("numerical Hessian not negative definite: some standard errors unavailable");
                break;
            }
        }
    }
    return out;
}

}  // namespace regimekit::msvar
