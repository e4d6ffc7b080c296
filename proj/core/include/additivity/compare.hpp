#pragma once

#include <optional>
#include <string>
#include <vector>

#include "additivity/diagnostics.hpp"
#include "additivity/sampler.hpp"

namespace additivity {

// Widely applicable information criterion on the deviance scale.
//   lppd   = sum_i log( mean over draws of exp(loglik_i) )
//   p_waic = sum_i var over draws of loglik_i
//   waic   = -2 * (lppd - p_waic)
//   se     = sqrt( n * var_i(pointwise_i) )
// pointwise_i = -2 * (lppd_i - p_waic_i), kept for dSE between models.
struct WaicResult {
  double waic = 0.0;
  double lppd = 0.0;
  double p_waic = 0.0;
  double se = 0.0;
  std::vector<double> pointwise;
};

WaicResult waic(const ModelSpec& spec, const PosteriorSamples& samples,
                const Dataset& data);

struct ComparisonRow {
  std::string name;
  double waic = 0.0;
  double p_waic = 0.0;
  double d_waic = 0.0;
  double weight = 0.0;
  double se = 0.0;
  std::optional<double> d_se;  // absent on the top row
};

// Rows sorted ascending by WAIC; weights exp(-dWAIC/2), normalized;
// d_se computed from pointwise differences against the best model.
struct ComparisonTable {
  std::vector<ComparisonRow> rows;
};

struct NamedWaic {
  std::string name;
  WaicResult result;
};

// Requires every result to carry the same number of pointwise terms
// (same dataset, same row order); throws ValidationError otherwise.
ComparisonTable compare(const std::vector<NamedWaic>& results);

std::string render_comparison(const ComparisonTable& table);

}  // namespace additivity
