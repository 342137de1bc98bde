#include "regimekit/linalg.hpp"

#include "regimekit/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace regimekit::linalg {

OlsFit ols(const Eigen::MatrixXd& X, const Eigen::MatrixXd& y, const std::vector<std::string>& column_names) {
    if (X.rows() != y.rows()) throw NumericalError("ols: row mismatch");
    if (X.rows() < X.cols()) throw NumericalError("ols: fewer observations than regressors");
    // Unit-norm columns make the rank decision independent of the regressors' units.
    const Eigen::VectorXd norms = X.colwise().norm().transpose();
    const bool zero_column = (norms.array() == 0.0).any();
    const Eigen::VectorXd inv = zero_column ? Eigen::VectorXd::Ones(X.cols()) : Eigen::VectorXd(norms.cwiseInverse());
    const Eigen::MatrixXd Xs = X * inv.asDiagonal();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xs);
    qr.setThreshold(1e-10);
    if (qr.rank() < X.cols() || zero_column) {
        // Columns beyond the rank in pivot order are (numerically) spanned by the others.
        std::string names;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index i = zero_column ? 0 : qr.rank(); i < X.cols(); ++i) {
            const auto c = static_cast<std::size_t>(perm(i));
            if (zero_column && norms(perm(i)) != 0.0) continue;
            names += (names.empty() ? "" : ", ") +
                     (c < column_names.size() ? column_names[c] : "x" + std::to_string(c));
        }
        throw NumericalError("rank-deficient regressor matrix; collinear column(s): " + names);
    }
    OlsFit fit;
    fit.coefficients = inv.asDiagonal() * qr.solve(y);
    fit.residuals = y - X * fit.coefficients;
    // (X'X)^-1 = D P R^-1 R^-T P' D with D the column scaling
    const auto p = X.cols();
    Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    Eigen::MatrixXd inner = Rinv * Rinv.transpose();
    fit.xtx_inverse = inv.asDiagonal() * (qr.colsPermutation() * inner * qr.colsPermutation().transpose()) * inv.asDiagonal();
    return fit;
}

GaussianKernel::GaussianKernel(const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericalError("covariance matrix is not positive definite");
    lower_ = llt.matrixL();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < cov.rows(); ++i) {
        if (!(lower_(i, i) > 0.0)) throw NumericalError("covariance matrix is not positive definite");
        log_det += 2.0 * std::log(lower_(i, i));
    }
    log_norm_ = -0.5 * (static_cast<double>(cov.rows()) * std::log(2.0 * std::numbers::pi) + log_det);
}

double GaussianKernel::log_density(const Eigen::Ref<const Eigen::VectorXd>& e) const {
    const Eigen::VectorXd z = lower_.triangularView<Eigen::Lower>().solve(e);
    return log_norm_ - 0.5 * z.squaredNorm();
}

double mvn_log_density(const Eigen::Ref<const Eigen::VectorXd>& e, const Eigen::MatrixXd& cov) {
    return GaussianKernel(cov).log_density(e);
}

double spectral_radius(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double long_run_variance(const Eigen::Ref<const Eigen::VectorXd>& u, int bandwidth) {
    const auto n = u.size();
    const double dn = static_cast<double>(n);
    double lrv = u.squaredNorm() / dn;
    for (int j = 1; j <= bandwidth && j < n; ++j) {
        const double gamma = u.tail(n - j).dot(u.head(n - j)) / dn;
        lrv += 2.0 * (1.0 - static_cast<double>(j) / (bandwidth + 1.0)) * gamma;
    }
    return lrv;
}

int newey_west_bandwidth(Eigen::Index n) {
    return static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 2.0 / 9.0)));
}

}  // namespace regimekit::linalg
