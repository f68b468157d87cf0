#include "dbb/betareg.hpp"

#include <cmath>
#include <limits>

#include "dbb/errors.hpp"

namespace dbb::bias {

double logistic(double eta) {
  if (eta >= 0.0) {
    double e = std::exp(-eta);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(eta);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

// Asymptotic series after shifting the argument above 6; ~1e-14 accurate for
// x > 0, which is all the likelihood ever needs.
double digamma(double x) {
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  double inv = 1.0 / x;
  double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                            inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
  return result;
}

double wald_p_value(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

namespace {

constexpr double kMuEps = 1e-12;
constexpr double kTauMin = -12.0;
constexpr double kTauMax = 25.0;

void check_inputs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& theta) {
  if (X.rows() != y.size()) throw ArgumentError("beta_loglik: X rows != y length");
  if (theta.size() != X.cols() + 1)
    throw ArgumentError("beta_loglik: theta must hold one entry per column plus ln(phi)");
}

}  // namespace

double beta_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& theta) {
  check_inputs(X, y, theta);
  const Eigen::Index n = y.size();
  const Eigen::Index p = X.cols();
  double tau = std::clamp(theta[p], kTauMin, kTauMax);
  double phi = std::exp(tau);
  Eigen::VectorXd eta = X * theta.head(p);

  double lgam_phi = std::lgamma(phi);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double yi = y[i];
    if (!(yi > 0.0 && yi < 1.0))
      throw ArgumentError("beta_loglik: y must lie strictly inside (0,1)");
    double mu = std::clamp(logistic(eta[i]), kMuEps, 1.0 - kMuEps);
    double a = mu * phi;
    double b = (1.0 - mu) * phi;
    ll += lgam_phi - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(yi) +
          (b - 1.0) * std::log1p(-yi);
  }
  return ll;
}

Eigen::VectorXd beta_loglik_grad(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& theta) {
  check_inputs(X, y, theta);
  const Eigen::Index n = y.size();
  const Eigen::Index p = X.cols();
  double tau = std::clamp(theta[p], kTauMin, kTauMax);
  double phi = std::exp(tau);
  Eigen::VectorXd eta = X * theta.head(p);

  double psi_phi = digamma(phi);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(p + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    double yi = y[i];
    double mu = std::clamp(logistic(eta[i]), kMuEps, 1.0 - kMuEps);
    double a = mu * phi;
    double b = (1.0 - mu) * phi;
    double ystar = std::log(yi) - std::log1p(-yi);
    double mustar = digamma(a) - digamma(b);
    // d l_i / d eta_i = phi (y* - mu*) mu(1-mu)
    double deta = phi * (ystar - mustar) * mu * (1.0 - mu);
    grad.head(p) += deta * X.row(i).transpose();
    // d l_i / d phi, chain rule through phi = exp(tau) applied below.
    grad[p] += psi_phi - mu * digamma(a) - (1.0 - mu) * digamma(b) + mu * std::log(yi) +
               (1.0 - mu) * std::log1p(-yi);
  }
  grad[p] *= phi;
  return grad;
}

namespace {

// Central-difference Hessian of the analytic gradient; symmetrized.
Eigen::MatrixXd fd_hessian(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& theta) {
  const Eigen::Index m = theta.size();
  Eigen::MatrixXd H(m, m);
  const double eps13 = std::cbrt(std::numeric_limits<double>::epsilon());
  for (Eigen::Index j = 0; j < m; ++j) {
    double h = eps13 * (1.0 + std::abs(theta[j]));
    Eigen::VectorXd tp = theta, tm = theta;
    tp[j] += h;
    tm[j] -= h;
    H.col(j) = (beta_loglik_grad(X, y, tp) - beta_loglik_grad(X, y, tm)) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

Eigen::VectorXd start_values(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  const Eigen::Index p = X.cols();
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = logit(y[i]);
  Eigen::VectorXd beta = X.colPivHouseholderQr().solve(z);

  double dof = static_cast<double>(n > p ? n - p : 1);
  double sigma2 = (z - X * beta).squaredNorm() / dof;
  double phi = 10.0;
  if (sigma2 > 0.0) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double mu = std::clamp(logistic(X.row(i).dot(beta)), 1e-6, 1.0 - 1e-6);
      acc += 1.0 / (sigma2 * mu * (1.0 - mu));
    }
    phi = acc / static_cast<double>(n) - 1.0;
  }
  phi = std::clamp(phi, 0.1, 1e4);

  Eigen::VectorXd theta(p + 1);
  theta.head(p) = beta;
  theta[p] = std::log(phi);
  return theta;
}

}  // namespace

MleResult maximize_beta_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const FitOptions& options) {
  const Eigen::Index p = X.cols();
  const Eigen::Index m = p + 1;

  MleResult result;
  result.theta = start_values(X, y);

  auto eval = [&](const Eigen::VectorXd& t) { return beta_loglik(X, y, t); };
  auto eval_grad = [&](const Eigen::VectorXd& t) { return beta_loglik_grad(X, y, t); };

  double ll = eval(result.theta);
  Eigen::VectorXd grad = eval_grad(result.theta);
  result.ll_trace.push_back(ll);

  // BFGS on the inverse Hessian approximation. The first direction is plain
  // steepest ascent scaled down to a sane step; the standard s'y/y'y rescale
  // after the first update fixes the metric.
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(m, m) /
                         std::max(1.0, grad.lpNorm<Eigen::Infinity>());
  bool first_update = true;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() < options.grad_tol) break;
    Eigen::VectorXd dir = Hinv * grad;  // ascent direction
    double slope = dir.dot(grad);
    if (!(slope > 0.0)) {
      Hinv = Eigen::MatrixXd::Identity(m, m) / std::max(1.0, grad.lpNorm<Eigen::Infinity>());
      dir = Hinv * grad;
      slope = dir.dot(grad);
    }

    double t = 1.0;
    double ll_new = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd theta_new;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      theta_new = result.theta + t * dir;
      ll_new = eval(theta_new);
      if (std::isfinite(ll_new) && ll_new >= ll + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;

    Eigen::VectorXd grad_new = eval_grad(theta_new);
    Eigen::VectorXd s = theta_new - result.theta;
    Eigen::VectorXd dg = grad_new - grad;  // = -(y) in minimization notation
    double sy = -s.dot(dg);
    if (sy > 1e-12 * s.norm() * dg.norm()) {
      if (first_update) {
        Hinv = Eigen::MatrixXd::Identity(m, m) * (sy / dg.squaredNorm());
        first_update = false;
      }
      // Standard BFGS inverse update, written for ascent (y -> -dg).
      Eigen::VectorXd Hy = Hinv * (-dg);
      double yHy = (-dg).dot(Hy);
      Hinv += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
              (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }
    result.theta = theta_new;
    ll = ll_new;
    grad = grad_new;
    result.ll_trace.push_back(ll);
  }
  result.iterations = iter;

  // Newton polish: drives the gradient max-norm to ~polish_tol so that
  // coefficient tables are reproducible to more digits than the BFGS exit.
  for (int k = 0; k < 40; ++k) {
    grad = eval_grad(result.theta);
    if (grad.lpNorm<Eigen::Infinity>() <= options.polish_tol) break;
    Eigen::MatrixXd info = -fd_hessian(X, y, result.theta);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    Eigen::VectorXd step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      step = ldlt.solve(grad);
    } else {
      Eigen::MatrixXd ridged = info + 1e-6 * Eigen::MatrixXd::Identity(m, m);
      step = ridged.ldlt().solve(grad);
    }
    double t = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls) {
      Eigen::VectorXd cand = result.theta + t * step;
      double ll_new = eval(cand);
      if (std::isfinite(ll_new) && ll_new >= ll) {
        // Equal log-likelihood still helps when the step shrinks the gradient.
        bool better_grad =
            eval_grad(cand).lpNorm<Eigen::Infinity>() < grad.lpNorm<Eigen::Infinity>();
        if (ll_new > ll || better_grad) {
          result.theta = cand;
          ll = ll_new;
          result.ll_trace.push_back(ll);
          improved = true;
        }
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;
  }

  grad = eval_grad(result.theta);
  result.grad_max_norm = grad.lpNorm<Eigen::Infinity>();
  result.converged = result.grad_max_norm < options.grad_tol;
  result.loglik = eval(result.theta);

  result.observed_info = -fd_hessian(X, y, result.theta);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(result.observed_info);
  result.info_positive_definite = (ldlt.info() == Eigen::Success && ldlt.isPositive());
  if (result.info_positive_definite) {
    result.covariance = ldlt.solve(Eigen::MatrixXd::Identity(m, m));
  } else {
    // Degenerate information: fall back to a pseudo-inverse so callers can
    // still inspect the fit; the converged flag and warnings carry the news.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(result.observed_info);
    Eigen::VectorXd inv = es.eigenvalues();
    for (Eigen::Index i = 0; i < inv.size(); ++i)
      inv[i] = inv[i] > 1e-10 ? 1.0 / inv[i] : 0.0;
    result.covariance =
        es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  }
  return result;
}

}  // namespace dbb::bias
