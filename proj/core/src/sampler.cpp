#include "additivity/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "additivity/errors.hpp"

namespace additivity {

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// SplitMix64; decorrelates the per-chain seeds derived from (seed, chain_id).
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 chain_rng(std::uint64_t seed, int chain_id) {
  const std::uint64_t stream = static_cast<std::uint64_t>(chain_id) + 1;
  return std::mt19937_64(mix64(seed ^ mix64(stream)));
}

struct ChainRun {
  Chain chain;
  int warmup_divergences = 0;
};

ChainRun run_chain(const LogDensityTarget& target, const SamplerConfig& cfg,
                   int chain_id) {
  const std::size_t p = target.dim();
  std::mt19937_64 rng = chain_rng(cfg.seed, chain_id);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> step_count(1, cfg.leapfrog_steps);

  HmcState state;
  state.position.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    double scale = std::min(0.1 * target.prior(j).sigma, 2.0);
    state.position[j] = scale * normal(rng);
  }
  state.log_post = target.log_posterior(state.position);

  DualAveraging adapt(cfg.init_step_size, cfg.target_accept,
                      cfg.max_step_size);

  ChainRun run;
  run.chain.chain_id = chain_id;
  run.chain.dim = p;
  run.chain.num_draws = static_cast<std::size_t>(cfg.draws_per_chain());
  run.chain.draws.reserve(run.chain.num_draws * p);

  int post_accepts = 0;
  for (int iter = 0; iter < cfg.iters_per_chain; ++iter) {
    const bool in_warmup = iter < cfg.warmup;
    const double step =
        in_warmup ? adapt.current_step() : adapt.adapted_step();
    const int steps = step_count(rng);

    HmcStepResult res = hmc_iteration(state, target, step, steps, rng);
    if (res.divergent) {
      ++run.chain.divergence_count;
      if (in_warmup) {
        ++run.warmup_divergences;
      } else {
        ++run.chain.post_warmup_divergences;
      }
    }
    if (in_warmup) {
      adapt.update(res.accept_prob);
    } else {
      if (res.accepted) ++post_accepts;
      run.chain.draws.insert(run.chain.draws.end(), state.position.begin(),
                             state.position.end());
    }
  }
  run.chain.accept_rate =
      cfg.draws_per_chain() > 0
          ? static_cast<double>(post_accepts) / cfg.draws_per_chain()
          : 0.0;
  run.chain.adapted_step_size = adapt.adapted_step();
  return run;
}

}  // namespace

void SamplerConfig::validate() const {
  if (chains < 1) throw ValidationError("sampler config: chains must be >= 1");
  if (warmup < 0 || warmup >= iters_per_chain) {
    throw ValidationError(
        "sampler config: warmup must satisfy 0 <= warmup < iters_per_chain");
  }
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw ValidationError("sampler config: target_accept must be in (0,1)");
  }
  if (leapfrog_steps < 1) {
    throw ValidationError("sampler config: leapfrog_steps must be >= 1");
  }
  if (!(init_step_size > 0.0) || !(max_step_size > 0.0) ||
      init_step_size > max_step_size) {
    throw ValidationError(
        "sampler config: need 0 < init_step_size <= max_step_size");
  }
}

PosteriorSamples::PosteriorSamples(std::string model_name,
                                   std::vector<std::string> param_names,
                                   std::vector<Chain> chains)
    : model_name_(std::move(model_name)),
      param_names_(std::move(param_names)),
      chains_(std::move(chains)) {
  if (chains_.empty()) {
    throw ValidationError("PosteriorSamples: no chains");
  }
  for (const auto& c : chains_) {
    if (c.dim != param_names_.size() ||
        c.num_draws != chains_.front().num_draws ||
        c.draws.size() != c.num_draws * c.dim) {
      throw ValidationError(
          "PosteriorSamples: chains disagree on shape");
    }
  }
  std::sort(chains_.begin(), chains_.end(),
            [](const Chain& a, const Chain& b) {
              return a.chain_id < b.chain_id;
            });
}

int PosteriorSamples::param_index(std::string_view name) const {
  for (std::size_t j = 0; j < param_names_.size(); ++j) {
    if (param_names_[j] == name) return static_cast<int>(j);
  }
  throw ValidationError("no parameter named '" + std::string(name) +
                        "' in samples of " + model_name_);
}

std::vector<double> PosteriorSamples::pooled(std::size_t j) const {
  std::vector<double> out;
  out.reserve(total_draws());
  for (const auto& c : chains_) {
    for (std::size_t s = 0; s < c.num_draws; ++s) out.push_back(c.at(s, j));
  }
  return out;
}

std::vector<std::vector<double>> PosteriorSamples::param_chains(
    std::size_t j) const {
  std::vector<std::vector<double>> out;
  out.reserve(chains_.size());
  for (const auto& c : chains_) {
    std::vector<double> v;
    v.reserve(c.num_draws);
    for (std::size_t s = 0; s < c.num_draws; ++s) v.push_back(c.at(s, j));
    out.push_back(std::move(v));
  }
  return out;
}

bool leapfrog(std::span<double> position, std::span<double> momentum,
              double step, int steps, const GradFn& grad) {
  const std::size_t p = position.size();
  std::vector<double> g(p);
  grad(position, g);
  if (!all_finite(g)) return false;
  for (std::size_t j = 0; j < p; ++j) momentum[j] += 0.5 * step * g[j];
  for (int s = 0; s < steps; ++s) {
    for (std::size_t j = 0; j < p; ++j) position[j] += step * momentum[j];
    if (!all_finite(position)) return false;
    grad(position, g);
    if (!all_finite(g)) return false;
    const double kick = (s + 1 == steps) ? 0.5 * step : step;
    for (std::size_t j = 0; j < p; ++j) momentum[j] += kick * g[j];
  }
  return all_finite(momentum);
}

DualAveraging::DualAveraging(double init_step, double target_accept,
                             double max_step)
    : mu_(std::log(10.0 * init_step)),
      log_step_(std::log(init_step)),
      log_avg_(std::log(init_step)),
      target_(target_accept),
      max_step_(max_step) {}

double DualAveraging::clamp(double log_step) const {
  double step = std::exp(log_step);
  return std::min(std::max(step, 1e-12), max_step_);
}

void DualAveraging::update(double accept_prob) {
  ++count_;
  const double m = static_cast<double>(count_);
  h_bar_ = (1.0 - 1.0 / (m + kT0)) * h_bar_ +
           (target_ - accept_prob) / (m + kT0);
  log_step_ = mu_ - std::sqrt(m) / kGamma * h_bar_;
  const double eta = std::pow(m, -kKappa);
  log_avg_ = eta * log_step_ + (1.0 - eta) * log_avg_;
}

double DualAveraging::current_step() const { return clamp(log_step_); }

double DualAveraging::adapted_step() const { return clamp(log_avg_); }

HmcStepResult hmc_iteration(HmcState& state, const LogDensityTarget& target,
                            double step, int steps, std::mt19937_64& rng) {
  const std::size_t p = target.dim();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<double> momentum(p);
  for (std::size_t j = 0; j < p; ++j) momentum[j] = normal(rng);

  double kinetic_old = 0.0;
  for (double r : momentum) kinetic_old += 0.5 * r * r;
  const double h_old = -state.log_post + kinetic_old;

  std::vector<double> position = state.position;
  GradFn grad = [&target](std::span<const double> q, std::span<double> g) {
    target.grad_log_posterior(q, g);
  };
  bool ok = leapfrog(position, momentum, step, steps, grad);

  HmcStepResult res;
  double h_new = std::numeric_limits<double>::infinity();
  double log_post_new = -std::numeric_limits<double>::infinity();
  if (ok) {
    log_post_new = target.log_posterior(position);
    double kinetic_new = 0.0;
    for (double r : momentum) kinetic_new += 0.5 * r * r;
    h_new = -log_post_new + kinetic_new;
  }
  const double delta_h = h_old - h_new;
  const bool divergent =
      !ok || !std::isfinite(h_new) || std::abs(delta_h) > 1000.0;

  const double u = uniform(rng);
  if (divergent) {
    res.divergent = true;
    res.accept_prob = 0.0;
    return res;
  }
  res.accept_prob = std::min(1.0, std::exp(delta_h));
  if (u < res.accept_prob) {
    state.position = std::move(position);
    state.log_post = log_post_new;
    res.accepted = true;
  }
  return res;
}

PosteriorSamples run_sampler(const LogDensityTarget& target,
                             const SamplerConfig& cfg) {
  cfg.validate();
  std::vector<ChainRun> runs(cfg.chains);
  if (cfg.parallel_chains && cfg.chains > 1) {
    std::vector<std::future<ChainRun>> futures;
    futures.reserve(cfg.chains);
    for (int c = 0; c < cfg.chains; ++c) {
      futures.push_back(std::async(std::launch::async, run_chain,
                                   std::cref(target), std::cref(cfg), c));
    }
    for (int c = 0; c < cfg.chains; ++c) runs[c] = futures[c].get();
  } else {
    for (int c = 0; c < cfg.chains; ++c) runs[c] = run_chain(target, cfg, c);
  }

  std::vector<Chain> chains;
  chains.reserve(cfg.chains);
  for (auto& run : runs) {
    if (run.warmup_divergences == cfg.warmup && cfg.warmup > 0) {
      throw SamplerError("sampler failed on model '" + target.model_name() +
                         "': chain " + std::to_string(run.chain.chain_id) +
                         " diverged on every warmup iteration");
    }
    chains.push_back(std::move(run.chain));
  }
  return PosteriorSamples(target.model_name(), target.param_names(),
                          std::move(chains));
}

PosteriorSamples run_sampler(const ModelSpec& spec, const Dataset& data,
                             const SamplerConfig& cfg) {
  LogDensityTarget target(spec, data);
  return run_sampler(target, cfg);
}

}  // namespace additivity
