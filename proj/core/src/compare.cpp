#include "additivity/compare.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "additivity/errors.hpp"
#include "additivity/posterior.hpp"

namespace additivity {

namespace {

double variance_unbiased(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size() - 1);
}

}  // namespace

WaicResult waic(const ModelSpec& spec, const PosteriorSamples& samples,
                const Dataset& data) {
  if (samples.param_names() != spec.param_names) {
    throw ValidationError("waic: samples do not match model '" + spec.name +
                          "' (parameter mismatch)");
  }
  LogDensityTarget target(spec, data);
  const std::size_t n = data.size();
  const std::size_t s_total = samples.total_draws();
  if (s_total == 0) {
    throw ValidationError("waic: no draws");
  }

  // One pass over the draws with O(n) state: a rescaling running
  // log-sum-exp for lppd and Welford accumulators for the pointwise
  // variance, so the S x n log-likelihood matrix is never materialized.
  std::vector<double> max_ll(n, -std::numeric_limits<double>::infinity());
  std::vector<double> sum_exp(n, 0.0);  // scaled by exp(max_ll)
  std::vector<double> mean_ll(n, 0.0);
  std::vector<double> m2_ll(n, 0.0);
  std::vector<double> theta(samples.dim());
  std::size_t s = 0;
  for (const auto& chain : samples.chains()) {
    for (std::size_t d = 0; d < chain.num_draws; ++d, ++s) {
      for (std::size_t j = 0; j < samples.dim(); ++j) {
        theta[j] = chain.at(d, j);
      }
      std::vector<double> ll = target.pointwise_log_lik(theta);
      const double count = static_cast<double>(s + 1);
      for (std::size_t i = 0; i < n; ++i) {
        if (ll[i] > max_ll[i]) {
          sum_exp[i] *= std::exp(max_ll[i] - ll[i]);
          max_ll[i] = ll[i];
        }
        sum_exp[i] += std::exp(ll[i] - max_ll[i]);
        const double delta = ll[i] - mean_ll[i];
        mean_ll[i] += delta / count;
        m2_ll[i] += delta * (ll[i] - mean_ll[i]);
      }
    }
  }

  WaicResult out;
  out.pointwise.resize(n);
  const double s_count = static_cast<double>(s_total);
  for (std::size_t i = 0; i < n; ++i) {
    const double lppd_i = max_ll[i] + std::log(sum_exp[i] / s_count);
    const double var_ll = s_total > 1 ? m2_ll[i] / (s_count - 1.0) : 0.0;
    out.lppd += lppd_i;
    out.p_waic += var_ll;
    out.pointwise[i] = -2.0 * (lppd_i - var_ll);
  }
  out.waic = -2.0 * (out.lppd - out.p_waic);
  out.se = std::sqrt(static_cast<double>(n) * variance_unbiased(out.pointwise));
  return out;
}

ComparisonTable compare(const std::vector<NamedWaic>& results) {
  if (results.empty()) {
    throw ValidationError("compare: no models");
  }
  const std::size_t n = results.front().result.pointwise.size();
  for (const auto& r : results) {
    if (r.result.pointwise.size() != n) {
      throw ValidationError(
          "compare: incomparable models: '" + r.name +
          "' was evaluated on a different number of observations");
    }
  }

  std::vector<std::size_t> order(results.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (results[a].result.waic != results[b].result.waic) {
                       return results[a].result.waic < results[b].result.waic;
                     }
                     return results[a].name < results[b].name;
                   });

  const WaicResult& best = results[order.front()].result;
  ComparisonTable table;
  double weight_sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const auto& named = results[order[rank]];
    ComparisonRow row;
    row.name = named.name;
    row.waic = named.result.waic;
    row.p_waic = named.result.p_waic;
    row.se = named.result.se;
    row.d_waic = named.result.waic - best.waic;
    row.weight = std::exp(-0.5 * row.d_waic);
    weight_sum += row.weight;
    if (rank > 0) {
      std::vector<double> diff(n);
      for (std::size_t i = 0; i < n; ++i) {
        diff[i] = named.result.pointwise[i] - best.pointwise[i];
      }
      row.d_se = std::sqrt(static_cast<double>(n) * variance_unbiased(diff));
    }
    table.rows.push_back(std::move(row));
  }
  for (auto& row : table.rows) row.weight /= weight_sum;
  return table;
}

std::string render_comparison(const ComparisonTable& table) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-8s %8s %7s %7s %7s %7s %6s\n", "model",
                "WAIC", "pWAIC", "dWAIC", "weight", "SE", "dSE");
  out << buf;
  for (const auto& r : table.rows) {
    if (r.d_se) {
      std::snprintf(buf, sizeof(buf),
                    "%-8s %8.1f %7.1f %7.1f %7.2f %7.2f %6.2f\n",
                    r.name.c_str(), r.waic, r.p_waic, r.d_waic, r.weight, r.se,
                    *r.d_se);
    } else {
      std::snprintf(buf, sizeof(buf),
                    "%-8s %8.1f %7.1f %7.1f %7.2f %7.2f %6s\n",
                    r.name.c_str(), r.waic, r.p_waic, r.d_waic, r.weight, r.se,
                    "NA");
    }
    out << buf;
  }
  return out.str();
}

}  // namespace additivity
