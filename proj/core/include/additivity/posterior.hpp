#pragma once

#include <span>
#include <string>
#include <vector>

#include "additivity/dataset.hpp"
#include "additivity/model.hpp"

namespace additivity {

// Stable logistic function, exact at 0, monotone, logistic(-x) = 1 - logistic(x).
double logistic(double x);

// log(1 + exp(x)) without overflow: x + log1p(exp(-x)) for x > 18,
// log1p(exp(x)) otherwise.
double log1pexp(double x);

// Bernoulli-logit posterior with independent normal priors, evaluated on a
// cached 0/1 design matrix. Immutable after construction; evaluation is pure,
// so concurrent chains may share one target.
//
// log p(theta | y) = sum_i [ y_i*lp_i - log1pexp(lp_i) ]
//                  + sum_j [ -0.5*((theta_j-mu_j)/sigma_j)^2
//                            - log(sigma_j) - 0.5*log(2*pi) ]
// with lp = D*theta. Prior normalization constants are included so values
// are comparable across implementations.
class LogDensityTarget {
 public:
  LogDensityTarget(const ModelSpec& spec, const Dataset& data);

  // A target with no observations: the posterior is exactly the prior.
  // Used by synthetic-target sampler tests.
  static LogDensityTarget prior_only(std::vector<std::string> param_names,
                                     std::vector<PriorSpec> priors,
                                     std::string model_name = "prior_only");

  std::size_t dim() const { return names_.size(); }
  std::size_t rows() const { return y_.size(); }
  const std::string& model_name() const { return model_name_; }
  const std::vector<std::string>& param_names() const { return names_; }
  const PriorSpec& prior(std::size_t j) const { return priors_[j]; }
  double design(std::size_t i, std::size_t j) const {
    return design_[i * dim() + j];
  }
  int outcome(std::size_t i) const { return y_[i]; }

  double linear_predictor(std::span<const double> theta, std::size_t i) const;

  // Entry i: y_i*lp_i - log1pexp(lp_i). Finite for |lp| up to ~700.
  std::vector<double> pointwise_log_lik(std::span<const double> theta) const;

  double log_posterior(std::span<const double> theta) const;

  // Component j: sum_i (y_i - logistic(lp_i))*D_ij - (theta_j-mu_j)/sigma_j^2.
  void grad_log_posterior(std::span<const double> theta,
                          std::span<double> grad) const;
  std::vector<double> grad_log_posterior(std::span<const double> theta) const;

 private:
  LogDensityTarget() = default;

  std::string model_name_;
  std::vector<std::string> names_;
  std::vector<PriorSpec> priors_;
  std::vector<double> design_;  // rows() x dim(), row-major
  std::vector<std::int8_t> y_;
};

}  // namespace additivity
