#include "dbb/bias.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "dbb/errors.hpp"
#include "dbb/log.hpp"

using nlohmann::json;

namespace dbb::bias {

std::vector<double> smooth_proportions(std::vector<double> y_raw) {
  const double n = static_cast<double>(y_raw.size());
  for (double& y : y_raw) {
    y = std::clamp(y, 0.0, 1.0);
    y = (y * (n - 1.0) + 0.5) / n;
  }
  return y_raw;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ArgumentError("pearson: length mismatch");
  if (xs.size() < 3) throw ArgumentError("pearson: need at least 3 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mx;
    double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw ArgumentError("pearson: correlation undefined for constant input");
  return sxy / std::sqrt(sxx * syy);
}

namespace {

std::string stars_for(double p) {
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

void check_rank(const Eigen::MatrixXd& X, const std::vector<std::string>& names) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  Eigen::Index rank = qr.rank();
  if (rank >= X.cols()) return;
  // Pivot order: the columns chosen after `rank` are the dependent ones.
  auto perm = qr.colsPermutation().indices();
  std::string collinear;
  for (Eigen::Index i = rank; i < X.cols(); ++i) {
    if (!collinear.empty()) collinear += ", ";
    collinear += names[static_cast<size_t>(perm[i])];
  }
  throw ArgumentError("design matrix is rank-deficient; collinear columns: " + collinear);
}

}  // namespace

const Coefficient* RegressionFit::find(const std::string& name) const {
  for (const auto& c : coefficients)
    if (c.name == name) return &c;
  return nullptr;
}

RegressionFit fit_beta_regression(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const std::vector<std::string>& names,
                                  const FitOptions& options) {
  if (static_cast<size_t>(X.cols()) != names.size())
    throw ArgumentError("fit_beta_regression: one name per design column required");
  if (X.rows() != y.size()) throw ArgumentError("fit_beta_regression: X rows != y length");
  if (X.rows() < X.cols() + 1)
    throw ArgumentError("fit_beta_regression: fewer rows than free parameters");
  check_rank(X, names);

  RegressionFit fit;
  const Eigen::Index p = X.cols();
  long free_params = static_cast<long>(p) + 1;
  if (X.rows() < options.min_rows_per_param * free_params) {
    fit.warnings.push_back("only " + std::to_string(X.rows()) + " rows for " +
                           std::to_string(free_params) + " free parameters");
    log::warn("fit_beta_regression: " + fit.warnings.back());
  }

  MleResult mle = maximize_beta_loglik(X, y, options);
  fit.converged = mle.converged;
  fit.iterations = mle.iterations;
  fit.log_likelihood = mle.loglik;
  fit.n_obs = static_cast<int>(X.rows());
  fit.grad_max_norm = mle.grad_max_norm;
  fit.info_positive_definite = mle.info_positive_definite;
  fit.ll_trace = mle.ll_trace;
  if (!mle.converged) fit.warnings.push_back("optimizer did not reach gradient tolerance");
  if (!mle.info_positive_definite)
    fit.warnings.push_back("observed information is not positive definite");

  fit.covariance_beta = mle.covariance.topLeftCorner(p, p);
  fit.cov_beta_ln_phi = mle.covariance.topRightCorner(p, 1);
  fit.var_ln_phi = mle.covariance(p, p);

  for (Eigen::Index j = 0; j < p; ++j) {
    Coefficient c;
    c.name = names[static_cast<size_t>(j)];
    c.estimate = mle.theta[j];
    c.std_error = std::sqrt(std::max(0.0, fit.covariance_beta(j, j)));
    c.z = c.std_error > 0.0 ? c.estimate / c.std_error : 0.0;
    c.p_value = c.std_error > 0.0 ? wald_p_value(c.z) : 1.0;
    c.stars = stars_for(c.p_value);
    fit.coefficients.push_back(std::move(c));
  }

  fit.phi = std::exp(mle.theta[p]);
  fit.precision.name = "Precision";
  fit.precision.estimate = fit.phi;
  // Delta method from ln(phi) to phi.
  fit.precision.std_error = fit.phi * std::sqrt(std::max(0.0, fit.var_ln_phi));
  fit.precision.z =
      fit.precision.std_error > 0.0 ? fit.precision.estimate / fit.precision.std_error : 0.0;
  fit.precision.p_value =
      fit.precision.std_error > 0.0 ? wald_p_value(fit.precision.z) : 1.0;
  fit.precision.stars = stars_for(fit.precision.p_value);
  return fit;
}

RegressionFit order_bias_model(const std::vector<scores::ScoreRow>& rows,
                               const FitOptions& options) {
  if (rows.empty()) throw ArgumentError("order_bias_model: no rows");
  std::set<pipeline::Method> present;
  std::set<std::string> models;
  for (const auto& r : rows) {
    present.insert(r.method);
    models.insert(r.model);
  }
  for (pipeline::Method m : pipeline::kAllMethods) {
    if (!present.count(m))
      throw ArgumentError("order_bias_model: records missing method '" +
                          pipeline::method_name(m) + "'");
  }
  if (models.size() != 1)
    throw ArgumentError("order_bias_model: rows span more than one generator model");

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = 12;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, p);
  std::vector<double> y_raw(rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<size_t>(i)];
    double x = r.relative_order;  // k/n, uncentered
    double x2 = x * x;
    double h = r.method == pipeline::Method::Hierarchical ? 1.0 : 0.0;
    double g = r.method == pipeline::Method::Grouped ? 1.0 : 0.0;
    double pr = r.method == pipeline::Method::Prompted ? 1.0 : 0.0;
    X(i, 0) = 1.0;
    X(i, 1) = x;
    X(i, 2) = x2;
    X(i, 3) = h;
    X(i, 4) = g;
    X(i, 5) = pr;
    X(i, 6) = x * h;
    X(i, 7) = x * g;
    X(i, 8) = x * pr;
    X(i, 9) = x2 * h;
    X(i, 10) = x2 * g;
    X(i, 11) = x2 * pr;
    y_raw[static_cast<size_t>(i)] = r.f1;
  }
  auto y_smooth = smooth_proportions(std::move(y_raw));
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(y_smooth.data(),
                                                  static_cast<Eigen::Index>(y_smooth.size()));

  std::vector<std::string> names(std::begin(kOrderBiasRowLabels), std::end(kOrderBiasRowLabels));
  RegressionFit fit = fit_beta_regression(X, y, names, options);
  fit.kind = ModelKind::order_bias;
  fit.model = *models.begin();
  return fit;
}

RegressionFit party_bias_model(const std::vector<scores::ScoreRow>& rows,
                               const corpus::PartyDesign& design,
                               const PartyBiasOptions& options) {
  if (rows.empty()) throw ArgumentError("party_bias_model: no rows");
  std::set<std::string> models;
  std::set<pipeline::Method> methods;
  std::map<std::string, int> party_counts;
  for (const auto& r : rows) {
    models.insert(r.model);
    methods.insert(r.method);
    party_counts[r.party_group]++;
  }
  if (models.size() != 1 || methods.size() != 1)
    throw ArgumentError("party_bias_model: rows must cover exactly one (model, method) pair");

  std::vector<std::string> kept, dropped;
  for (const auto& party : design.columns) {
    int count = party_counts.count(party) ? party_counts.at(party) : 0;
    if (count < options.min_party_obs) {
      dropped.push_back(party);
      if (count > 0)
        log::warn("party_bias_model: dropping party '" + party + "' with only " +
                  std::to_string(count) + " observations");
    } else {
      kept.push_back(party);
    }
  }
  if (kept.empty())
    throw ArgumentError("party_bias_model: no non-reference party has enough observations");

  std::vector<const scores::ScoreRow*> used;
  for (const auto& r : rows) {
    if (std::find(dropped.begin(), dropped.end(), r.party_group) != dropped.end()) continue;
    used.push_back(&r);
  }

  const Eigen::Index n = static_cast<Eigen::Index>(used.size());
  const Eigen::Index p = 3 + static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, p);
  std::vector<double> y_raw(used.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = *used[static_cast<size_t>(i)];
    double xc = r.relative_order - 0.5;  // 0 = middle of the debate
    X(i, 0) = 1.0;
    X(i, 1) = xc;
    X(i, 2) = xc * xc;
    for (size_t j = 0; j < kept.size(); ++j)
      if (r.party_group == kept[j]) X(i, 3 + static_cast<Eigen::Index>(j)) = 1.0;
    y_raw[static_cast<size_t>(i)] = r.f1;
  }
  auto y_smooth = smooth_proportions(std::move(y_raw));
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(y_smooth.data(),
                                                  static_cast<Eigen::Index>(y_smooth.size()));

  std::vector<std::string> names = {"Intercept", "Centered order", "Centered order^2"};
  for (const auto& party : kept) names.push_back("Party: " + party);

  RegressionFit fit = fit_beta_regression(X, y, names, options.fit);
  fit.kind = ModelKind::party_bias;
  fit.model = *models.begin();
  fit.method = pipeline::method_name(*methods.begin());
  fit.reference_party = design.reference;
  fit.parties_kept = kept;
  fit.parties_dropped = dropped;
  for (const auto& d : dropped)
    fit.warnings.push_back("party '" + d + "' dropped (fewer than " +
                           std::to_string(options.min_party_obs) + " observations)");
  return fit;
}

std::vector<MarginalMean> marginal_means(const RegressionFit& fit) {
  if (fit.kind != ModelKind::party_bias)
    throw ArgumentError("marginal_means: requires a party-bias fit");
  if (!fit.converged)
    throw RefusedError("marginal_means: fit did not converge; refusing to report");

  const double z95 = 1.96;
  std::vector<MarginalMean> out;
  auto push = [&](const std::string& group, double eta, double var) {
    MarginalMean m;
    m.group = group;
    double se = std::sqrt(std::max(0.0, var));
    m.mu_hat = logistic(eta);
    m.ci_low = logistic(eta - z95 * se);
    m.ci_high = logistic(eta + z95 * se);
    out.push_back(m);
  };

  // At x = 0, x^2 = 0 only the intercept and the party dummy remain.
  double b0 = fit.coefficients[0].estimate;
  double v00 = fit.covariance_beta(0, 0);
  push(fit.reference_party, b0, v00);
  for (size_t j = 0; j < fit.parties_kept.size(); ++j) {
    Eigen::Index idx = 3 + static_cast<Eigen::Index>(j);
    double bg = fit.coefficients[static_cast<size_t>(idx)].estimate;
    double var = v00 + fit.covariance_beta(idx, idx) + 2.0 * fit.covariance_beta(0, idx);
    push(fit.parties_kept[j], b0 + bg, var);
  }
  return out;
}

double reconstructor_precision_check(const std::string& debate_summary_text,
                                     const std::vector<std::string>& rendered_reconstructions,
                                     metrics::EmbeddingProvider& provider) {
  if (rendered_reconstructions.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& rec : rendered_reconstructions)
    sum += metrics::bertscore(rec, debate_summary_text, provider).precision;
  return sum / static_cast<double>(rendered_reconstructions.size());
}

std::string fit_to_json(const RegressionFit& fit) {
  json j;
  j["kind"] = fit.kind == ModelKind::order_bias
                  ? "order-bias"
                  : (fit.kind == ModelKind::party_bias ? "party-bias" : "custom");
  j["model"] = fit.model;
  if (!fit.method.empty()) j["method"] = fit.method;
  j["n_obs"] = fit.n_obs;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["grad_max_norm"] = fit.grad_max_norm;
  j["log_likelihood"] = fit.log_likelihood;
  j["phi"] = fit.phi;
  j["coefficients"] = json::array();
  auto coef_row = [](const Coefficient& c) {
    return json{{"name", c.name},
                {"estimate", c.estimate},
                {"std_error", c.std_error},
                {"z", c.z},
                {"p_value", c.p_value},
                {"stars", c.stars}};
  };
  for (const auto& c : fit.coefficients) j["coefficients"].push_back(coef_row(c));
  j["coefficients"].push_back(coef_row(fit.precision));
  if (!fit.reference_party.empty()) {
    j["reference_party"] = fit.reference_party;
    j["parties_kept"] = fit.parties_kept;
    j["parties_dropped"] = fit.parties_dropped;
  }
  if (!fit.warnings.empty()) j["warnings"] = fit.warnings;
  return j.dump(2);
}

}  // namespace dbb::bias
