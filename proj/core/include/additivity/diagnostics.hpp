#pragma once

#include <span>
#include <string>
#include <vector>

#include "additivity/sampler.hpp"

namespace additivity {

// One row of a posterior summary table. n_eff is capped at the total draw
// count and rhat is floored at 1.
struct SummaryRow {
  std::string param;
  double mean = 0.0;
  double sd = 0.0;
  double hpdi_low = 0.0;
  double hpdi_high = 0.0;  // mass 0.89
  double n_eff = 0.0;
  double rhat = 0.0;
  double mode = 0.0;    // argmax of kde(draws, adjust=2)
  double median = 0.0;
};

struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};

// Narrowest contiguous interval containing ceil(mass * n) sorted draws.
// Ties break toward the lowest start.
std::pair<double, double> hpdi(std::span<const double> draws, double mass);

// Autocorrelation of one sequence at lags 0..max_lag, on centered values
// with the biased 1/n normalization; lag 0 is exactly 1.
std::vector<double> autocorr(std::span<const double> draws, int max_lag);

// Split-chain effective sample size: each chain is halved, autocorrelations
// are combined across the split sequences, and the sum is truncated at the
// first non-positive pair (Geyer initial positive sequence). Capped at the
// total number of draws. Requires >= 2 chains of >= 8 draws each.
double ess(const std::vector<std::vector<double>>& chains);

// Split-chain potential scale reduction sqrt(var_plus / W), floored at 1.
// Same input requirements as ess().
double split_rhat(const std::vector<std::vector<double>>& chains);

struct ShrinkPoint {
  std::size_t draws_per_chain = 0;
  double rhat = 0.0;
};

// split_rhat computed on growing prefixes of the chains; for mixing chains
// the series decays toward 1.
std::vector<ShrinkPoint> shrink_trace(
    const std::vector<std::vector<double>>& chains,
    const std::vector<std::size_t>& schedule);

// Evenly spaced prefix lengths for shrink_trace (about `points` of them,
// each >= 8).
std::vector<std::size_t> default_shrink_schedule(std::size_t draws_per_chain,
                                                 std::size_t points = 20);

// Gaussian-kernel density estimate. Bandwidth is adjust times Silverman's
// rule 0.9 * min(sd, IQR/1.34) * n^(-1/5); the 512-point grid spans the data
// range plus three bandwidths each side. Throws DiagnosticError for
// zero-variance draws.
DensityCurve kde(std::span<const double> draws, double adjust);

// One SummaryRow per parameter over the pooled post-warmup draws.
// Requires >= 100 total draws. n_eff and rhat are NaN when the sample has
// fewer than 2 chains or chains shorter than 8 draws.
std::vector<SummaryRow> summarize(const PosteriorSamples& samples);

// Aligned text table in the usual reporting order:
// Mean StdDev lower 0.89 upper 0.89 n_eff Rhat.
std::string render_summary_table(const std::vector<SummaryRow>& rows);

}  // namespace additivity
