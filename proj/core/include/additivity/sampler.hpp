#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "additivity/posterior.hpp"

namespace additivity {

struct SamplerConfig {
  int chains = 4;
  int iters_per_chain = 2000;  // warmup included
  int warmup = 1000;
  double target_accept = 0.8;
  int leapfrog_steps = 32;  // per-iteration count drawn from {1..leapfrog_steps}
  std::uint64_t seed = 1;
  double init_step_size = 0.1;
  double max_step_size = 10.0;
  bool parallel_chains = true;

  int draws_per_chain() const { return iters_per_chain - warmup; }
  int total_draws() const { return chains * draws_per_chain(); }

  void validate() const;  // throws ValidationError
};

// Post-warmup draws of one chain, plus run statistics.
struct Chain {
  int chain_id = 0;
  std::size_t num_draws = 0;
  std::size_t dim = 0;
  std::vector<double> draws;  // num_draws x dim, row-major
  double accept_rate = 0.0;   // post-warmup acceptance fraction
  int divergence_count = 0;   // over the whole run, warmup included
  int post_warmup_divergences = 0;
  double adapted_step_size = 0.0;

  double at(std::size_t s, std::size_t j) const { return draws[s * dim + j]; }
};

class PosteriorSamples {
 public:
  PosteriorSamples(std::string model_name,
                   std::vector<std::string> param_names,
                   std::vector<Chain> chains);

  const std::string& model_name() const { return model_name_; }
  const std::vector<std::string>& param_names() const { return param_names_; }
  const std::vector<Chain>& chains() const { return chains_; }
  std::size_t dim() const { return param_names_.size(); }
  std::size_t draws_per_chain() const {
    return chains_.empty() ? 0 : chains_.front().num_draws;
  }
  std::size_t total_draws() const {
    return chains_.size() * draws_per_chain();
  }

  int param_index(std::string_view name) const;  // throws if unknown

  // Pooled draws of parameter j, ordered by chain_id then iteration.
  std::vector<double> pooled(std::size_t j) const;

  // Per-chain draw vectors of parameter j (input shape for ess/split_rhat).
  std::vector<std::vector<double>> param_chains(std::size_t j) const;

 private:
  std::string model_name_;
  std::vector<std::string> param_names_;
  std::vector<Chain> chains_;
};

// Gradient oracle: writes d(log p)/d(position) into grad.
using GradFn =
    std::function<void(std::span<const double>, std::span<double>)>;

// Symplectic leapfrog: half-step momentum, alternating full-step position
// and momentum updates, closing half-step momentum. Returns false (positions
// and momenta left mid-trajectory) when a non-finite gradient or position is
// encountered; callers treat that as a divergence.
bool leapfrog(std::span<double> position, std::span<double> momentum,
              double step, int steps, const GradFn& grad);

// Dual-averaging step-size controller driven toward a target acceptance
// probability during warmup; the averaged iterate is the frozen step size.
class DualAveraging {
 public:
  DualAveraging(double init_step, double target_accept, double max_step);

  void update(double accept_prob);
  double current_step() const;  // step for the next warmup iteration
  double adapted_step() const;  // averaged step, used after warmup

 private:
  double clamp(double log_step) const;

  double mu_;
  double log_step_;
  double log_avg_;
  double h_bar_ = 0.0;
  int count_ = 0;
  double target_;
  double max_step_;

  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
};

struct HmcState {
  std::vector<double> position;
  double log_post = 0.0;
};

struct HmcStepResult {
  bool accepted = false;
  bool divergent = false;
  double accept_prob = 0.0;  // min(1, exp(H_old - H_new)); 0 on divergence
};

// One HMC transition: fresh standard-normal momentum (identity mass matrix),
// `steps` leapfrog steps of size `step`, Metropolis correction. A proposal
// with non-finite energy or |dH| > 1000 counts as a divergence and is
// rejected. RNG consumption per call: dim normals, then one uniform.
HmcStepResult hmc_iteration(HmcState& state, const LogDensityTarget& target,
                            double step, int steps, std::mt19937_64& rng);

// Runs cfg.chains independent chains on the target. Each chain's RNG stream
// is derived from (cfg.seed, chain_id) only, so serial and concurrent
// execution produce identical draws. Chains start at positions drawn from
// Normal(0, min(0.1*sigma_prior, 2)) and adapt step size during warmup.
// Throws SamplerError (naming the model) if every warmup iteration of some
// chain diverged.
PosteriorSamples run_sampler(const LogDensityTarget& target,
                             const SamplerConfig& cfg);

PosteriorSamples run_sampler(const ModelSpec& spec, const Dataset& data,
                             const SamplerConfig& cfg);

}  // namespace additivity
