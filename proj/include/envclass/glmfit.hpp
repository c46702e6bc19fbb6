#pragma once

// Binomial GLM with logit link fitted by maximum likelihood (IRLS / Newton),
// plus correlation screening and AIC subset selection over the pedestrian
// features.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "envclass/cluster.hpp"
#include "envclass/featmat.hpp"

namespace envclass {

struct IrlsOptions {
  double score_tolerance = 1e-8;    // stop when max |gradient| falls below this
  std::size_t max_iterations = 100;
  double separation_bound = 1e4;    // |beta| beyond this => separation
  std::size_t max_halvings = 60;
};

struct GlmFit {
  std::vector<std::string> terms;  // "(Intercept)" first when present
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  std::vector<double> z_values;
  std::vector<double> p_values;
  double log_likelihood = 0.0;
  double aic = 0.0;  // 2 * terms.size() - 2 * log_likelihood
  std::size_t n = 0;
  std::size_t iterations = 0;
  double max_abs_score = 0.0;
  std::vector<double> loglik_trace;  // after every accepted step, starting at beta = 0

  std::vector<std::string> included_features;  // terms without the intercept
};

// Bernoulli log-likelihood of `beta` under the logit link.
double logistic_log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta);
Eigen::VectorXd logistic_score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta);

// `x` must already contain the intercept column if one is wanted; `terms`
// names its columns. Newton steps with step-halving on likelihood decrease.
// Throws ErrorKind::Separation when the fitted linear predictor separates the
// classes or |beta| exceeds the bound, ErrorKind::Rank for a constant
// non-intercept column or singular information, ErrorKind::Convergence when
// the iteration budget runs out.
GlmFit irls_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> terms,
                const IrlsOptions& opt = {});

// Two-sided standard-normal tail probability of a Wald z.
double wald_p(double z);

struct CorrelationScreen {
  std::vector<Feature> features;          // candidates with non-zero variance
  std::vector<Feature> constant_features;  // dropped before screening
  Eigen::MatrixXd correlation;            // Pearson, features x features
  double max_abs_r = 0.3;
  std::vector<std::vector<Feature>> admissible;  // every pair |r| < max_abs_r
};

CorrelationScreen correlation_screen(const FeatureMatrix& matrix, std::span<const Feature> candidates,
                                     double max_abs_r = 0.3);

struct SubsetFit {
  std::vector<Feature> features;
  std::optional<GlmFit> fit;
  std::string error;  // set when the fit failed
};

// Label encoding: A (unstructured) = 1, B (structured) = 0 by default.
struct SelectionOptions {
  std::vector<Feature> candidates{kPedestrianFeatures.begin(), kPedestrianFeatures.end()};
  double max_abs_r = 0.3;
  bool unstructured_is_one = true;
  IrlsOptions irls;
};

struct SelectionResult {
  GlmFit best;
  std::vector<Feature> best_features;
  CorrelationScreen screen;
  std::vector<SubsetFit> fits;  // in enumeration order
  bool unstructured_is_one = true;
  std::size_t rows_used = 0;
};

// Drops Unresolved rows, centers the candidate columns, fits every admissible
// subset and returns the least-AIC fit (ties: fewer features, then the
// lexicographically smaller feature list).
SelectionResult screen_and_select(const FeatureMatrix& raw, const std::vector<ClusterLabel>& labels,
                                  const SelectionOptions& opt = {});

std::string display_name(Feature f);

// Estimate / Std. Error / z value / Pr(>|z|) table of the non-intercept terms.
std::string format_glm_table(const GlmFit& fit, bool unstructured_is_one = true);
std::string glm_to_json(const SelectionResult& result);

}  // namespace envclass
