#include "regimekit/error.hpp"
#include "regimekit/linalg.hpp"
#include "regimekit/msvar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace regimekit::msvar {

std::string to_string(SwitchTarget t) { return t == SwitchTarget::Mean ? "mean" : "intercept"; }

SwitchTarget switch_target_from_string(std::string_view s) {
    if (s == "mean" || s == "msm") return SwitchTarget::Mean;
    if (s == "intercept" || s == "msi") return SwitchTarget::Intercept;
    throw Error("unknown switch target '" + std::string(s) + "' (expected mean or intercept)");
}

void MsVarSpec::validate() const {
    if (r < 2) throw Error("Markov switching requires at least 2 regimes (got " + std::to_string(r) + ")");
    if (q < 0) throw Error("lag order must be nonnegative");
    if (k < 1) throw Error("need at least one series");
}

std::string MsVarSpec::label() const {
    std::string s = switch_target == SwitchTarget::Mean ? "MSM" : "MSI";
    if (switch_ar) s += "A";
    if (switch_variance) s += "H";
    return s + "(" + std::to_string(r) + ")-VAR(" + std::to_string(q) + ")";
}

int MsVarSpec::state_count() const {
    if (switch_target == SwitchTarget::Intercept) return r;
    int n = 1;
    for (int i = 0; i <= q; ++i) n *= r;
    return n;
}

TransitionMatrix::TransitionMatrix(Eigen::MatrixXd p) : p_(std::move(p)) {
    if (p_.rows() == 0 || p_.rows() != p_.cols()) throw Error("transition matrix must be square and nonempty");
    for (Eigen::Index i = 0; i < p_.rows(); ++i) {
        for (Eigen::Index j = 0; j < p_.cols(); ++j) {
            if (!(p_(i, j) >= 0.0 && p_(i, j) <= 1.0))
                throw Error("transition probability P(" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                            ") outside [0, 1]");
        }
        if (std::abs(p_.row(i).sum() - 1.0) > 1e-12)
            throw Error("transition matrix row " + std::to_string(i + 1) + " does not sum to 1");
    }
}

namespace {

// Reachability along positive entries, starting from state 0, forwards or backwards.
std::vector<int> bfs_levels(const Eigen::MatrixXd& p, bool reverse) {
    const int n = static_cast<int>(p.rows());
    std::vector<int> level(static_cast<std::size_t>(n), -1);
    std::queue<int> todo;
    level[0] = 0;
    todo.push(0);
    while (!todo.empty()) {
        const int i = todo.front();
        todo.pop();
        for (int j = 0; j < n; ++j) {
            const double w = reverse ? p(j, i) : p(i, j);
            if (w > 0.0 && level[static_cast<std::size_t>(j)] < 0) {
                level[static_cast<std::size_t>(j)] = level[static_cast<std::size_t>(i)] + 1;
                todo.push(j);
            }
        }
    }
    return level;
}

}  // namespace

Eigen::VectorXd ergodic_distribution(const TransitionMatrix& tm) {
    const Eigen::MatrixXd& p = tm.matrix();
    const int n = tm.size();
    const auto fwd = bfs_levels(p, false);
    const auto bwd = bfs_levels(p, true);
    for (int i = 0; i < n; ++i) {
        if (fwd[static_cast<std::size_t>(i)] < 0 || bwd[static_cast<std::size_t>(i)] < 0)
            throw Error("transition matrix is reducible: no unique ergodic distribution");
    }
    int period = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (p(i, j) > 0.0) period = std::gcd(period, std::abs(fwd[static_cast<std::size_t>(i)] + 1 - fwd[static_cast<std::size_t>(j)]));
        }
    }
    if (period != 1) throw Error("transition matrix is periodic (period " + std::to_string(period) + ")");

    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - p.transpose();
    a.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    Eigen::VectorXd pi = a.fullPivLu().solve(b);
    pi = pi.cwiseMax(0.0);
    return pi / pi.sum();
}

Eigen::VectorXd expected_duration(const TransitionMatrix& tm) {
    Eigen::VectorXd d(tm.size());
    for (int i = 0; i < tm.size(); ++i) {
        if (tm(i, i) >= 1.0) throw Error("regime " + std::to_string(i + 1) + " is absorbing: infinite duration");
        d(i) = 1.0 / (1.0 - tm(i, i));
    }
    return d;
}

void MsVarModel::validate() const {
    const int r = spec.r;
    if (r < 1 || spec.k < 1 || spec.q < 0) throw Error("invalid model dimensions");
    if (static_cast<int>(means.size()) != r || static_cast<int>(ar.size()) != r ||
        static_cast<int>(covariances.size()) != r || transitions.size() != r)
        throw Error("model has inconsistent regime count");
    if (!names.empty() && static_cast<int>(names.size()) != spec.k) throw Error("model names do not match k");
    for (int s = 0; s < r; ++s) {
        if (means[static_cast<std::size_t>(s)].size() != spec.k) throw Error("regime mean has wrong length");
        if (static_cast<int>(ar[static_cast<std::size_t>(s)].size()) != spec.q) throw Error("AR lag count mismatch");
        for (const auto& b : ar[static_cast<std::size_t>(s)]) {
            if (b.rows() != spec.k || b.cols() != spec.k) throw Error("AR matrix has wrong shape");
        }
        const auto& c = covariances[static_cast<std::size_t>(s)];
        if (c.rows() != spec.k || c.cols() != spec.k) throw Error("covariance has wrong shape");
        if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, c.cwiseAbs().maxCoeff()))
            throw Error("regime " + std::to_string(s + 1) + " covariance is not symmetric");
        Eigen::LLT<Eigen::MatrixXd> llt(c);
        if (llt.info() != Eigen::Success) throw NumericalError("regime " + std::to_string(s + 1) + " covariance is not positive definite");
    }
}

Eigen::MatrixXd MsVarModel::covariance_factor(int regime) const {
    Eigen::LLT<Eigen::MatrixXd> llt(covariances.at(static_cast<std::size_t>(regime)));
    if (llt.info() != Eigen::Success) throw NumericalError("covariance is not positive definite");
    return llt.matrixL();
}

int MsVarModel::parameter_count() const {
    const int k = spec.k, r = spec.r, q = spec.q;
    const int ar_blocks = spec.switch_ar ? r : 1;
    const int cov_blocks = spec.switch_variance ? r : 1;
    return r * k + ar_blocks * q * k * k + cov_blocks * k * (k + 1) / 2 + r * (r - 1);
}

MsVarModel MsVarModel::permuted(const std::vector<int>& perm) const {
    MsVarModel m = *this;
    const int r = spec.r;
    Eigen::MatrixXd p(r, r);
    for (int i = 0; i < r; ++i) {
        const auto src = static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]);
        m.means[static_cast<std::size_t>(i)] = means[src];
        m.ar[static_cast<std::size_t>(i)] = ar[src];
        m.covariances[static_cast<std::size_t>(i)] = covariances[src];
        for (int j = 0; j < r; ++j) p(i, j) = transitions(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    m.transitions = TransitionMatrix(p);
    return m;
}

MsVarModel canonical_order(const MsVarModel& model) {
    std::vector<int> perm(static_cast<std::size_t>(model.spec.r));
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
        const double ta = model.covariances[static_cast<std::size_t>(a)].trace();
        const double tb = model.covariances[static_cast<std::size_t>(b)].trace();
        if (ta != tb) return ta < tb;
        const auto& ma = model.means[static_cast<std::size_t>(a)];
        const auto& mb = model.means[static_cast<std::size_t>(b)];
        return std::lexicographical_compare(ma.data(), ma.data() + ma.size(), mb.data(), mb.data() + mb.size());
    });
    return model.permuted(perm);
}

double conditional_density(const MsVarModel& model, int regime, const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::MatrixXd& history, const std::vector<int>& lag_regimes) {
    const int q = model.spec.q;
    if (history.rows() < q) throw Error("history must supply " + std::to_string(q) + " lags");
    const auto s = static_cast<std::size_t>(regime);
    Eigen::VectorXd e;
    if (model.spec.switch_target == SwitchTarget::Mean) {
        if (static_cast<int>(lag_regimes.size()) < q) throw Error("mean-switching density needs the lagged regimes");
        e = x - model.means[s];
        for (int j = 0; j < q; ++j) {
            const Eigen::VectorXd dev =
                history.row(j).transpose() - model.means[static_cast<std::size_t>(lag_regimes[static_cast<std::size_t>(j)])];
            e -= model.ar[s][static_cast<std::size_t>(j)] * dev;
        }
    } else {
        e = x - model.means[s];
        for (int j = 0; j < q; ++j) e -= model.ar[s][static_cast<std::size_t>(j)] * history.row(j).transpose();
    }
    return linalg::mvn_log_density(e, model.covariances[s]);
}

var::IrfResult regime_irf(const MsVarModel& model, int regime, int horizon, var::ShockType shock) {
    if (regime < 0 || regime >= model.spec.r)
        throw Error("regime " + std::to_string(regime + 1) + " out of range 1.." + std::to_string(model.spec.r));
    return var::irf(model.ar[static_cast<std::size_t>(regime)], model.covariances[static_cast<std::size_t>(regime)],
                    horizon, shock, model.names);
}

}  // namespace regimekit::msvar
