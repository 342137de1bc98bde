#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace regimekit::linalg {

/// Ordinary least squares fit of y (n x m) on X (n x p).
struct OlsFit {
    Eigen::MatrixXd coefficients;  ///< p x m
    Eigen::MatrixXd residuals;     ///< n x m
    Eigen::MatrixXd xtx_inverse;   ///< p x p
};

/// Solves by column-pivoted QR; throws NumericalError naming collinear columns on rank loss.
OlsFit ols(const Eigen::MatrixXd& X, const Eigen::MatrixXd& y, const std::vector<std::string>& column_names = {});

/// Log-density of N(0, cov) at e, via Cholesky. Throws NumericalError if cov is not PD.
double mvn_log_density(const Eigen::Ref<const Eigen::VectorXd>& e, const Eigen::MatrixXd& cov);

/// Precomputed Cholesky factor for repeated density evaluations.
class GaussianKernel {
public:
    explicit GaussianKernel(const Eigen::MatrixXd& cov);
    double log_density(const Eigen::Ref<const Eigen::VectorXd>& e) const;
    const Eigen::MatrixXd& lower() const noexcept { return lower_; }

private:
    Eigen::MatrixXd lower_;
    double log_norm_ = 0.0;
};

/// Largest eigenvalue modulus.
double spectral_radius(const Eigen::MatrixXd& m);

/// Newey-West long-run variance with Bartlett weights 1 - j/(L+1), divisor n.
double long_run_variance(const Eigen::Ref<const Eigen::VectorXd>& u, int bandwidth);

/// floor(4 (n/100)^(2/9)).
int newey_west_bandwidth(Eigen::Index n);

}  // namespace regimekit::linalg
