#pragma once

#include <string>
#include <vector>

#include "additivity/diagnostics.hpp"
#include "additivity/sampler.hpp"

namespace additivity {

// One refit of the model with a replacement prior on the target parameter.
struct PriorVariantResult {
  std::string label;  // e.g. "normal(-3,1)"
  PriorSpec prior;
  SummaryRow summary;           // for the target parameter
  DensityCurve density;         // kde of its draws, adjust=2
  double logistic_of_mean = 0;  // logistic(posterior mean)
  double mean_of_logistic = 0;  // posterior mean of logistic(draws)
};

struct PriorGridResult {
  std::string model;
  std::string param;
  std::vector<PriorVariantResult> variants;
  // shift[i][j] = value(variant j) - value(variant i)
  std::vector<std::vector<double>> mean_shift;
  std::vector<std::vector<double>> prob_shift;  // on logistic(mean)
};

std::string prior_label(const PriorSpec& prior);

// Refits the model once per prior variant, leaving every other prior
// untouched. Variant i runs with seed cfg.seed + i so Monte Carlo noise is
// independent across variants. Sampler failures are rethrown with the
// variant label attached.
PriorGridResult run_prior_grid(const ModelSpec& spec, const Dataset& data,
                               const SamplerConfig& cfg,
                               const std::string& param,
                               const std::vector<PriorSpec>& priors);

// Parses "normal(0,10),normal(0,50),normal(-3,1)".
std::vector<PriorSpec> parse_prior_list(std::string_view text);

// Parses the one-string grid form "param=bVC; priors=normal(0,10),...".
std::pair<std::string, std::vector<PriorSpec>> parse_grid_description(
    std::string_view text);

std::string render_shift_report(const PriorGridResult& grid);

}  // namespace additivity
