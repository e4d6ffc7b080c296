#include "additivity/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "additivity/errors.hpp"

namespace additivity {

namespace {

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Unbiased sample variance.
double variance_of(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

// Halves of every chain, middle element dropped for odd lengths.
std::vector<std::span<const double>> split_sequences(
    const std::vector<std::vector<double>>& chains) {
  std::vector<std::span<const double>> seqs;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    seqs.emplace_back(c.data(), half);
    seqs.emplace_back(c.data() + (c.size() - half), half);
  }
  return seqs;
}

void require_splittable(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) {
    throw DiagnosticError(
        "diagnostic unavailable: at least 2 chains are required");
  }
  for (const auto& c : chains) {
    if (c.size() < 8) {
      throw DiagnosticError(
          "diagnostic unavailable: chains shorter than 8 draws");
    }
    if (c.size() != chains.front().size()) {
      throw DiagnosticError(
          "diagnostic unavailable: chains have unequal lengths");
    }
  }
}

struct SplitStats {
  std::size_t m = 0;  // number of split sequences
  std::size_t n = 0;  // draws per sequence
  std::vector<double> means;
  double w = 0.0;         // mean within-sequence variance (unbiased)
  double var_plus = 0.0;  // (n-1)/n * W + B/n
};

SplitStats split_stats(const std::vector<std::span<const double>>& seqs) {
  SplitStats st;
  st.m = seqs.size();
  st.n = seqs.front().size();
  st.means.reserve(st.m);
  double w_sum = 0.0;
  for (const auto& s : seqs) {
    double mu = mean_of(s);
    st.means.push_back(mu);
    w_sum += variance_of(s, mu);
  }
  st.w = w_sum / static_cast<double>(st.m);
  const double grand = mean_of(st.means);
  const double b_over_n = variance_of(st.means, grand);
  st.var_plus = st.w * static_cast<double>(st.n - 1) /
                    static_cast<double>(st.n) +
                b_over_n;
  return st;
}

// Mean over sequences of the biased (1/n) autocovariance at one lag.
double mean_autocov(const std::vector<std::span<const double>>& seqs,
                    const std::vector<double>& means, std::size_t lag) {
  double total = 0.0;
  for (std::size_t j = 0; j < seqs.size(); ++j) {
    const auto& s = seqs[j];
    const double mu = means[j];
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < s.size(); ++i) {
      acc += (s[i] - mu) * (s[i + lag] - mu);
    }
    total += acc / static_cast<double>(s.size());
  }
  return total / static_cast<double>(seqs.size());
}

}  // namespace

std::pair<double, double> hpdi(std::span<const double> draws, double mass) {
  if (draws.empty()) {
    throw DiagnosticError("hpdi: empty draw vector");
  }
  if (!(mass > 0.0 && mass < 1.0)) {
    throw DiagnosticError("hpdi: mass must be in (0,1)");
  }
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::size_t k = static_cast<std::size_t>(
      std::ceil(mass * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n);
  std::size_t best = 0;
  double best_width = sorted[k - 1] - sorted[0];
  for (std::size_t i = 1; i + k <= n; ++i) {
    double width = sorted[i + k - 1] - sorted[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {sorted[best], sorted[best + k - 1]};
}

std::vector<double> autocorr(std::span<const double> draws, int max_lag) {
  const std::size_t n = draws.size();
  if (max_lag < 0 || static_cast<std::size_t>(max_lag) >= n) {
    throw DiagnosticError("autocorr: max_lag must be below the draw count");
  }
  const double mu = mean_of(draws);
  double denom = 0.0;
  for (double x : draws) denom += (x - mu) * (x - mu);
  std::vector<double> rho(static_cast<std::size_t>(max_lag) + 1, 0.0);
  rho[0] = 1.0;
  if (denom == 0.0) {
    // Constant sequence: correlation is undefined; report zeros past lag 0.
    return rho;
  }
  for (int lag = 1; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) {
      acc += (draws[i] - mu) * (draws[i + lag] - mu);
    }
    rho[lag] = acc / denom;
  }
  return rho;
}

double ess(const std::vector<std::vector<double>>& chains) {
  require_splittable(chains);
  auto seqs = split_sequences(chains);
  SplitStats st = split_stats(seqs);
  const double total = static_cast<double>(st.m * st.n);
  if (st.var_plus <= 0.0 || st.w <= 0.0) {
    return total;  // zero-variance draws: no autocorrelation to correct for
  }

  // rho(0) = 1; rho(t) = 1 - (W - mean_acov(t)) / var_plus. Accumulate
  // Geyer pairs until the first non-positive one.
  double tau = -1.0;
  const std::size_t max_lag = st.n - 1;
  std::size_t t = 0;
  while (t + 1 <= max_lag) {
    double rho_even =
        (t == 0) ? 1.0
                 : 1.0 - (st.w - mean_autocov(seqs, st.means, t)) / st.var_plus;
    double rho_odd =
        1.0 - (st.w - mean_autocov(seqs, st.means, t + 1)) / st.var_plus;
    double pair = rho_even + rho_odd;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
    t += 2;
  }
  if (tau <= 0.0) return total;
  return std::min(total / tau, total);
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  require_splittable(chains);
  auto seqs = split_sequences(chains);
  SplitStats st = split_stats(seqs);
  if (st.w <= 0.0) {
    return 1.0;  // all sequences constant
  }
  return std::max(1.0, std::sqrt(st.var_plus / st.w));
}

std::vector<ShrinkPoint> shrink_trace(
    const std::vector<std::vector<double>>& chains,
    const std::vector<std::size_t>& schedule) {
  require_splittable(chains);
  std::vector<ShrinkPoint> out;
  out.reserve(schedule.size());
  for (std::size_t len : schedule) {
    if (len < 8 || len > chains.front().size()) {
      throw DiagnosticError(
          "shrink_trace: window lengths must be in [8, draws_per_chain]");
    }
    std::vector<std::vector<double>> prefix;
    prefix.reserve(chains.size());
    for (const auto& c : chains) {
      prefix.emplace_back(c.begin(), c.begin() + static_cast<long>(len));
    }
    out.push_back({len, split_rhat(prefix)});
  }
  return out;
}

std::vector<std::size_t> default_shrink_schedule(std::size_t draws_per_chain,
                                                 std::size_t points) {
  std::vector<std::size_t> schedule;
  if (draws_per_chain < 8 || points == 0) return schedule;
  for (std::size_t k = 1; k <= points; ++k) {
    std::size_t len = draws_per_chain * k / points;
    if (len < 8) len = 8;
    if (schedule.empty() || schedule.back() != len) schedule.push_back(len);
  }
  return schedule;
}

DensityCurve kde(std::span<const double> draws, double adjust) {
  if (draws.empty()) {
    throw DiagnosticError("kde: empty draw vector");
  }
  if (!(adjust > 0.0)) {
    throw DiagnosticError("kde: adjust must be positive");
  }
  const std::size_t n = draws.size();
  const double mu = mean_of(draws);
  const double sd = std::sqrt(variance_of(draws, mu));
  if (sd <= 0.0) {
    throw DiagnosticError("kde: degenerate density (zero-variance draws)");
  }
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    double pos = q * static_cast<double>(n - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, n - 1);
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double scale = std::min(sd, iqr / 1.34);
  if (scale <= 0.0) scale = sd;  // collapsed IQR with spread elsewhere
  const double bandwidth =
      adjust * 0.9 * scale * std::pow(static_cast<double>(n), -0.2);

  constexpr std::size_t kGridPoints = 512;
  const double lo = sorted.front() - 3.0 * bandwidth;
  const double hi = sorted.back() + 3.0 * bandwidth;
  DensityCurve curve;
  curve.bandwidth = bandwidth;
  curve.grid.resize(kGridPoints);
  curve.density.resize(kGridPoints);
  const double step = (hi - lo) / static_cast<double>(kGridPoints - 1);
  const double norm = 1.0 / (static_cast<double>(n) * bandwidth *
                             std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t g = 0; g < kGridPoints; ++g) {
    const double x = lo + step * static_cast<double>(g);
    double acc = 0.0;
    for (double v : sorted) {
      const double z = (x - v) / bandwidth;
      acc += std::exp(-0.5 * z * z);
    }
    curve.grid[g] = x;
    curve.density[g] = norm * acc;
  }
  return curve;
}

std::vector<SummaryRow> summarize(const PosteriorSamples& samples) {
  if (samples.total_draws() < 100) {
    throw DiagnosticError("summarize: need at least 100 pooled draws");
  }
  const bool diagnosable =
      samples.chains().size() >= 2 && samples.draws_per_chain() >= 8;

  std::vector<SummaryRow> rows;
  rows.reserve(samples.dim());
  for (std::size_t j = 0; j < samples.dim(); ++j) {
    SummaryRow row;
    row.param = samples.param_names()[j];
    std::vector<double> pooled = samples.pooled(j);
    row.mean = mean_of(pooled);
    row.sd = std::sqrt(variance_of(pooled, row.mean));
    auto [lo, hi] = hpdi(pooled, 0.89);
    row.hpdi_low = lo;
    row.hpdi_high = hi;
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    row.median = (n % 2 == 1)
                     ? sorted[n / 2]
                     : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    if (row.sd > 0.0) {
      DensityCurve d = kde(pooled, 2.0);
      std::size_t peak = static_cast<std::size_t>(
          std::max_element(d.density.begin(), d.density.end()) -
          d.density.begin());
      row.mode = d.grid[peak];
    } else {
      row.mode = row.mean;
    }
    if (diagnosable) {
      auto per_chain = samples.param_chains(j);
      row.n_eff = ess(per_chain);
      row.rhat = split_rhat(per_chain);
    } else {
      row.n_eff = std::numeric_limits<double>::quiet_NaN();
      row.rhat = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_summary_table(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-8s %8s %8s %12s %12s %8s %6s\n", "param",
                "Mean", "StdDev", "lower 0.89", "upper 0.89", "n_eff",
                "Rhat");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%-8s %8.2f %8.2f %12.2f %12.2f %8.0f %6.2f\n",
                  r.param.c_str(), r.mean, r.sd, r.hpdi_low, r.hpdi_high,
                  r.n_eff, r.rhat);
    out << buf;
  }
  return out.str();
}

}  // namespace additivity
