#include "additivity/posterior.hpp"

#include <cassert>
#include <cmath>
#include <numbers>

#include "additivity/errors.hpp"

namespace additivity {

double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

double log1pexp(double x) {
  if (x > 18.0) {
    return x + std::log1p(std::exp(-x));
  }
  return std::log1p(std::exp(x));
}

LogDensityTarget::LogDensityTarget(const ModelSpec& spec, const Dataset& data) {
  model_name_ = spec.name;
  names_ = spec.param_names;
  priors_.reserve(names_.size());
  for (const auto& name : names_) {
    auto it = spec.priors.find(name);
    if (it == spec.priors.end()) {
      throw ValidationError("model '" + spec.name + "': missing prior for '" +
                            name + "'");
    }
    priors_.push_back(it->second);
  }
  const std::size_t n = data.size();
  const std::size_t p = names_.size();
  design_.resize(n * p);
  y_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> d = compile_design(spec.predictor, data[i]);
    assert(d.size() == p);
    for (std::size_t j = 0; j < p; ++j) design_[i * p + j] = d[j];
    y_[i] = static_cast<std::int8_t>(data[i].flag(spec.outcome));
  }
}

LogDensityTarget LogDensityTarget::prior_only(
    std::vector<std::string> param_names, std::vector<PriorSpec> priors,
    std::string model_name) {
  if (param_names.size() != priors.size() || param_names.empty()) {
    throw ValidationError("prior_only target: need one prior per parameter");
  }
  for (const auto& prior : priors) {
    if (!(prior.sigma > 0.0)) {
      throw ValidationError("prior_only target: sigma must be positive");
    }
  }
  LogDensityTarget t;
  t.model_name_ = std::move(model_name);
  t.names_ = std::move(param_names);
  t.priors_ = std::move(priors);
  return t;
}

double LogDensityTarget::linear_predictor(std::span<const double> theta,
                                          std::size_t i) const {
  const std::size_t p = dim();
  const double* row = design_.data() + i * p;
  double lp = 0.0;
  for (std::size_t j = 0; j < p; ++j) lp += row[j] * theta[j];
  return lp;
}

std::vector<double> LogDensityTarget::pointwise_log_lik(
    std::span<const double> theta) const {
  std::vector<double> out(rows());
  for (std::size_t i = 0; i < rows(); ++i) {
    double lp = linear_predictor(theta, i);
    out[i] = y_[i] * lp - log1pexp(lp);
  }
  return out;
}

double LogDensityTarget::log_posterior(std::span<const double> theta) const {
  const std::size_t p = dim();
  double total = 0.0;
  for (std::size_t i = 0; i < rows(); ++i) {
    double lp = linear_predictor(theta, i);
    total += y_[i] * lp - log1pexp(lp);
  }
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (std::size_t j = 0; j < p; ++j) {
    double z = (theta[j] - priors_[j].mu) / priors_[j].sigma;
    total += -0.5 * z * z - std::log(priors_[j].sigma) - half_log_two_pi;
  }
  return total;
}

void LogDensityTarget::grad_log_posterior(std::span<const double> theta,
                                          std::span<double> grad) const {
  const std::size_t p = dim();
  for (std::size_t j = 0; j < p; ++j) {
    double sigma = priors_[j].sigma;
    grad[j] = -(theta[j] - priors_[j].mu) / (sigma * sigma);
  }
  for (std::size_t i = 0; i < rows(); ++i) {
    double lp = linear_predictor(theta, i);
    double resid = y_[i] - logistic(lp);
    const double* row = design_.data() + i * p;
    for (std::size_t j = 0; j < p; ++j) grad[j] += resid * row[j];
  }
}

std::vector<double> LogDensityTarget::grad_log_posterior(
    std::span<const double> theta) const {
  std::vector<double> g(dim());
  grad_log_posterior(theta, g);
  return g;
}

}  // namespace additivity
