#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "additivity/dataset.hpp"
#include "additivity/model.hpp"
#include "additivity/sampler.hpp"

namespace additivity {

// Known data-generating process for synthetic datasets: a model, its true
// parameter values, and a covariate model (either a reference dataset whose
// rows are resampled whole, preserving flag correlations, or independent
// per-flag Bernoulli marginals, default 0.3).
struct GroundTruth {
  ModelSpec spec;
  std::map<std::string, double> theta_true;
  std::map<Flag, double> marginals;
  std::optional<Dataset> reference;

  std::vector<double> theta_vector() const;  // aligned with spec.param_names
};

// Draws n rows: covariates from the covariate model, then the outcome flag
// from Bernoulli(logistic(predictor)). Deterministic given the seed.
Dataset generate_dataset(const GroundTruth& gt, std::size_t n,
                         std::uint64_t seed);

struct RecoveryPolicy {
  int trials = 20;
  int min_hpdi_hits = 15;       // per parameter, 0.89 mass
  double max_posterior_z = 3.0;  // |posterior mean - truth| / posterior sd
};

struct RecoveryParamStat {
  std::string param;
  double truth = 0.0;
  int hpdi_hits = 0;
  double worst_z = 0.0;
  bool pass = false;
};

struct RecoveryReport {
  bool passed = false;
  int trials = 0;
  std::vector<RecoveryParamStat> params;
};

// Repeatedly generates data from gt and refits gt.spec. Trial t uses data
// seed cfg.seed + 7919*(t+1) and sampler seed cfg.seed + t. A parameter
// passes when its truth lands in the 0.89 HPDI at least min_hpdi_hits times
// and every trial keeps |mean - truth| within max_posterior_z posterior sds.
RecoveryReport recovery_test(const GroundTruth& gt, std::size_t n,
                             const SamplerConfig& cfg,
                             const RecoveryPolicy& policy);

std::string render_recovery_report(const RecoveryReport& report);

// key = value text block:
//   model = mC3            (builtin), or predictor = ... / outcome = C
//   <param> = <value>      one line per parameter
//   marginal.<FLAG> = p    optional covariate marginals
//   prior.<param> = normal(mu,sigma)   optional prior overrides
// Lines starting with '#' are comments.
GroundTruth load_truth_file(const std::filesystem::path& path);

}  // namespace additivity
