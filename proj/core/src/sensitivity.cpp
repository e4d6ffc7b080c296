#include "additivity/sensitivity.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

#include "additivity/errors.hpp"
#include "additivity/posterior.hpp"

namespace additivity {

namespace {

std::string strip_spaces(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

}  // namespace

std::string prior_label(const PriorSpec& prior) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "normal(%g,%g)", prior.mu, prior.sigma);
  return buf;
}

PriorGridResult run_prior_grid(const ModelSpec& spec, const Dataset& data,
                               const SamplerConfig& cfg,
                               const std::string& param,
                               const std::vector<PriorSpec>& priors) {
  if (priors.empty()) {
    throw ValidationError("prior grid: no prior variants given");
  }
  if (std::find(spec.param_names.begin(), spec.param_names.end(), param) ==
      spec.param_names.end()) {
    throw ValidationError("prior grid: model '" + spec.name +
                          "' has no parameter '" + param + "'");
  }

  PriorGridResult grid;
  grid.model = spec.name;
  grid.param = param;
  for (std::size_t v = 0; v < priors.size(); ++v) {
    ModelSpec variant_spec = spec.with_prior(param, priors[v]);
    SamplerConfig variant_cfg = cfg;
    variant_cfg.seed = cfg.seed + v;

    PriorVariantResult variant;
    variant.prior = priors[v];
    variant.label = prior_label(priors[v]);
    try {
      PosteriorSamples samples = run_sampler(variant_spec, data, variant_cfg);
      const std::size_t j =
          static_cast<std::size_t>(samples.param_index(param));
      std::vector<SummaryRow> rows = summarize(samples);
      variant.summary = rows[j];
      std::vector<double> draws = samples.pooled(j);
      variant.density = kde(draws, 2.0);
      variant.logistic_of_mean = logistic(variant.summary.mean);
      double acc = 0.0;
      for (double d : draws) acc += logistic(d);
      variant.mean_of_logistic = acc / static_cast<double>(draws.size());
    } catch (const SamplerError& e) {
      throw SamplerError("prior variant " + variant.label + ": " + e.what());
    }
    grid.variants.push_back(std::move(variant));
  }

  const std::size_t k = grid.variants.size();
  grid.mean_shift.assign(k, std::vector<double>(k, 0.0));
  grid.prob_shift.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      grid.mean_shift[i][j] =
          grid.variants[j].summary.mean - grid.variants[i].summary.mean;
      grid.prob_shift[i][j] = grid.variants[j].logistic_of_mean -
                              grid.variants[i].logistic_of_mean;
    }
  }
  return grid;
}

std::vector<PriorSpec> parse_prior_list(std::string_view text) {
  std::vector<PriorSpec> priors;
  std::string s = strip_spaces(text);
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t close = s.find(')', start);
    if (close == std::string::npos) {
      throw ValidationError("bad prior list '" + std::string(text) +
                            "': unterminated prior");
    }
    priors.push_back(parse_prior(s.substr(start, close - start + 1)));
    start = close + 1;
    if (start < s.size()) {
      if (s[start] != ',') {
        throw ValidationError("bad prior list '" + std::string(text) +
                              "': expected ',' between priors");
      }
      ++start;
    }
  }
  if (priors.empty()) {
    throw ValidationError("bad prior list '" + std::string(text) +
                          "': no priors");
  }
  return priors;
}

std::pair<std::string, std::vector<PriorSpec>> parse_grid_description(
    std::string_view text) {
  std::string param;
  std::vector<PriorSpec> priors;
  std::string s(text);
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t end = s.find(';', start);
    if (end == std::string::npos) end = s.size();
    std::string clause = s.substr(start, end - start);
    std::size_t eq = clause.find('=');
    if (eq != std::string::npos) {
      std::string key = strip_spaces(clause.substr(0, eq));
      std::string value = clause.substr(eq + 1);
      if (key == "param") {
        param = strip_spaces(value);
      } else if (key == "priors") {
        priors = parse_prior_list(value);
      } else if (!key.empty()) {
        throw ValidationError("bad grid description: unknown key '" + key +
                              "'");
      }
    } else if (!strip_spaces(clause).empty()) {
      throw ValidationError("bad grid description clause '" + clause + "'");
    }
    start = end + 1;
  }
  if (param.empty() || priors.empty()) {
    throw ValidationError(
        "bad grid description: expected \"param=<name>; priors=<list>\"");
  }
  return {param, priors};
}

std::string render_shift_report(const PriorGridResult& grid) {
  std::ostringstream out;
  char buf[200];
  out << "prior sensitivity for " << grid.model << " / " << grid.param
      << "\n";
  std::snprintf(buf, sizeof(buf), "%-16s %8s %8s %12s %12s %14s %14s\n",
                "prior", "mean", "sd", "lower 0.89", "upper 0.89",
                "logistic(mean)", "mean(logistic)");
  out << buf;
  for (const auto& v : grid.variants) {
    std::snprintf(buf, sizeof(buf),
                  "%-16s %8.3f %8.3f %12.3f %12.3f %14.4f %14.4f\n",
                  v.label.c_str(), v.summary.mean, v.summary.sd,
                  v.summary.hpdi_low, v.summary.hpdi_high, v.logistic_of_mean,
                  v.mean_of_logistic);
    out << buf;
  }
  out << "pairwise shifts (column minus row)\n";
  for (std::size_t i = 0; i < grid.variants.size(); ++i) {
    for (std::size_t j = 0; j < grid.variants.size(); ++j) {
      if (i == j) continue;
      std::snprintf(buf, sizeof(buf),
                    "  %s -> %s: mean %+.3f, logistic(mean) %+.4f\n",
                    grid.variants[i].label.c_str(),
                    grid.variants[j].label.c_str(), grid.mean_shift[i][j],
                    grid.prob_shift[i][j]);
      out << buf;
    }
  }
  return out.str();
}

}  // namespace additivity
