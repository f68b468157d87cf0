#pragma once

#include <Eigen/Dense>
#include <vector>

namespace dbb::bias {

double logistic(double eta);
double logit(double p);
double digamma(double x);

// Two-sided normal (Wald) p-value for a z statistic.
double wald_p_value(double z);

// Beta log-likelihood with logit mean link, parameterized as
// theta = [beta_0..beta_{p-1}, tau] with phi = exp(tau):
//   l_i = lnG(phi) - lnG(mu_i phi) - lnG((1-mu_i) phi)
//       + (mu_i phi - 1) ln y_i + ((1-mu_i) phi - 1) ln(1-y_i)
// where logit(mu_i) = x_i' beta. Requires y strictly inside (0,1).
double beta_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& theta);

// Analytic gradient of the log-likelihood above with respect to theta.
Eigen::VectorXd beta_loglik_grad(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& theta);

struct FitOptions {
  int max_iter = 500;
  double grad_tol = 1e-6;    // max-norm of the gradient at the optimum
  double polish_tol = 1e-9;  // Newton polish target
  int min_rows_per_param = 10;
};

struct MleResult {
  Eigen::VectorXd theta;          // [beta, tau]
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double grad_max_norm = 0.0;
  Eigen::MatrixXd observed_info;  // -(d^2 l / d theta^2) at the optimum
  Eigen::MatrixXd covariance;     // inverse observed information
  bool info_positive_definite = false;
  // Log-likelihood at every accepted iterate, starting point included;
  // non-decreasing by construction.
  std::vector<double> ll_trace;
};

// Quasi-Newton (BFGS) ascent with analytic gradients over (beta, ln phi),
// followed by a Newton polish using a finite-difference Hessian of the
// analytic gradient. Start values: beta from a logit-scale least-squares fit,
// phi from method-of-moments on its residuals.
MleResult maximize_beta_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const FitOptions& options = {});

}  // namespace dbb::bias
