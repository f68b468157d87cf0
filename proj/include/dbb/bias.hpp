#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbb/betareg.hpp"
#include "dbb/corpus.hpp"
#include "dbb/metrics.hpp"
#include "dbb/scores.hpp"

namespace dbb::bias {

// Maps raw scores into the open interval (0,1): clamp to [0,1], then
// y' = (y (N-1) + 0.5) / N with N the per-fit sample size.
std::vector<double> smooth_proportions(std::vector<double> y_raw);

// Sample Pearson correlation. Throws ArgumentError for length < 3, mismatched
// lengths, or constant input. Computed as sxy / sqrt(sxx * syy) so that exact
// linear relationships land on exactly +/-1.
double pearson(std::span<const double> xs, std::span<const double> ys);

enum class ModelKind { order_bias, party_bias, custom };

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  std::string stars;  // "" / "*" (p<0.05) / "**" (p<0.01)
};

struct RegressionFit {
  ModelKind kind = ModelKind::custom;
  std::string model;   // generator model tag
  std::string method;  // party fits only
  std::vector<Coefficient> coefficients;
  Coefficient precision;  // phi row, labelled "Precision"
  double phi = 0.0;
  double log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
  int n_obs = 0;
  double grad_max_norm = 0.0;
  bool info_positive_definite = false;
  Eigen::MatrixXd covariance_beta;      // beta block of the inverse observed information
  Eigen::VectorXd cov_beta_ln_phi;
  double var_ln_phi = 0.0;
  std::vector<double> ll_trace;
  std::vector<std::string> warnings;
  // Party fits: dummy-coding bookkeeping.
  std::string reference_party;
  std::vector<std::string> parties_kept;     // non-reference, in column order
  std::vector<std::string> parties_dropped;  // < min observations

  const Coefficient* find(const std::string& name) const;
};

// Core fit: beta regression by MLE with Wald inference. Throws ArgumentError
// on a rank-deficient design, naming the collinear columns.
RegressionFit fit_beta_regression(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const std::vector<std::string>& names,
                                  const FitOptions& options = {});

// Speaker-order bias model for one generator model, pooling all four methods
// with Default as the reference: logit(mu) over [1, x, x^2] plus method
// dummies and both interaction blocks, x = k/n uncentered. Emits exactly the
// 13 labelled rows (12 coefficients + Precision).
RegressionFit order_bias_model(const std::vector<scores::ScoreRow>& rows,
                               const FitOptions& options = {});

struct PartyBiasOptions {
  FitOptions fit;
  int min_party_obs = 5;  // non-reference parties below this are dropped
};

// Party-group bias model for one (generator model, method) slice: centered
// order terms plus party dummies against the largest-party reference.
RegressionFit party_bias_model(const std::vector<scores::ScoreRow>& rows,
                               const corpus::PartyDesign& design,
                               const PartyBiasOptions& options = {});

struct MarginalMean {
  std::string group;
  double mu_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Model-predicted mid-debate fidelity per party with 95% CI, computed on the
// linear-predictor scale (including the intercept-dummy covariance) and then
// mapped through the inverse logit. Refuses non-converged fits.
std::vector<MarginalMean> marginal_means(const RegressionFit& fit);

// Mean BERTScore precision of reconstructions against the debate summary
// text; high values mean reconstruction added little beyond the summary.
double reconstructor_precision_check(const std::string& debate_summary_text,
                                     const std::vector<std::string>& rendered_reconstructions,
                                     metrics::EmbeddingProvider& provider);

std::string fit_to_json(const RegressionFit& fit);

inline constexpr const char* kOrderBiasRowLabels[] = {
    "Intercept",
    "Linear speaker order",
    "Quadratic speaker order",
    "Hierarchical",
    "Grouped",
    "Prompted",
    "Order x Hierarchical",
    "Order x Grouped",
    "Order x Prompted",
    "Order^2 x Hierarchical",
    "Order^2 x Grouped",
    "Order^2 x Prompted",
};

}  // namespace dbb::bias
