#include "additivity/oracle.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "additivity/diagnostics.hpp"
#include "additivity/errors.hpp"
#include "additivity/posterior.hpp"

namespace additivity {

namespace {

constexpr double kDefaultMarginal = 0.3;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<double> GroundTruth::theta_vector() const {
  std::vector<double> theta;
  theta.reserve(spec.param_names.size());
  for (const auto& name : spec.param_names) {
    auto it = theta_true.find(name);
    if (it == theta_true.end()) {
      throw ValidationError("ground truth: missing value for parameter '" +
                            name + "'");
    }
    theta.push_back(it->second);
  }
  if (theta_true.size() != spec.param_names.size()) {
    throw ValidationError(
        "ground truth: extra parameter values not in the model");
  }
  return theta;
}

Dataset generate_dataset(const GroundTruth& gt, std::size_t n,
                         std::uint64_t seed) {
  if (n < 1) {
    throw ValidationError("generate_dataset: n must be >= 1");
  }
  for (const auto& [flag, p] : gt.marginals) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError("generate_dataset: marginal for " +
                            std::string(flag_name(flag)) +
                            " outside [0,1]");
    }
  }
  std::vector<double> theta = gt.theta_vector();
  std::map<std::string, double> theta_map = gt.theta_true;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<StoryRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    StoryRecord rec;
    char id[32];
    std::snprintf(id, sizeof(id), "sim_%05zu", i + 1);
    rec.story_id = id;
    if (gt.reference) {
      const auto& ref = *gt.reference;
      std::uniform_int_distribution<std::size_t> pick(0, ref.size() - 1);
      rec.flags = ref[pick(rng)].flags;
      rec.story_id = id;  // keep synthetic ids even when resampling rows
    } else {
      for (Flag f : kAllFlags) {
        auto it = gt.marginals.find(f);
        double p = it == gt.marginals.end() ? kDefaultMarginal : it->second;
        rec.flags[static_cast<int>(f)] = unif(rng) < p ? 1 : 0;
      }
    }
    double lp = eval_predictor(gt.spec.predictor, theta_map, rec);
    rec.flags[static_cast<int>(gt.spec.outcome)] =
        unif(rng) < logistic(lp) ? 1 : 0;
    records.push_back(std::move(rec));
  }
  return Dataset(std::move(records));
}

RecoveryReport recovery_test(const GroundTruth& gt, std::size_t n,
                             const SamplerConfig& cfg,
                             const RecoveryPolicy& policy) {
  if (policy.trials < 1) {
    throw ValidationError("recovery_test: trials must be >= 1");
  }
  std::vector<double> truth = gt.theta_vector();
  const std::size_t p = truth.size();

  RecoveryReport report;
  report.trials = policy.trials;
  report.params.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    report.params[j].param = gt.spec.param_names[j];
    report.params[j].truth = truth[j];
  }

  for (int t = 0; t < policy.trials; ++t) {
    Dataset data = generate_dataset(
        gt, n, cfg.seed + 7919ULL * static_cast<std::uint64_t>(t + 1));
    SamplerConfig trial_cfg = cfg;
    trial_cfg.seed = cfg.seed + static_cast<std::uint64_t>(t);
    PosteriorSamples samples = run_sampler(gt.spec, data, trial_cfg);
    std::vector<SummaryRow> rows = summarize(samples);
    for (std::size_t j = 0; j < p; ++j) {
      const SummaryRow& row = rows[j];
      if (truth[j] >= row.hpdi_low && truth[j] <= row.hpdi_high) {
        ++report.params[j].hpdi_hits;
      }
      double z = row.sd > 0.0 ? std::abs(row.mean - truth[j]) / row.sd
                              : std::abs(row.mean - truth[j]);
      report.params[j].worst_z = std::max(report.params[j].worst_z, z);
    }
  }

  report.passed = true;
  for (auto& stat : report.params) {
    stat.pass = stat.hpdi_hits >= policy.min_hpdi_hits &&
                stat.worst_z < policy.max_posterior_z;
    if (!stat.pass) report.passed = false;
  }
  return report;
}

std::string render_recovery_report(const RecoveryReport& report) {
  std::ostringstream out;
  char buf[160];
  out << "parameter recovery over " << report.trials << " trials\n";
  std::snprintf(buf, sizeof(buf), "%-10s %8s %10s %8s %6s\n", "param",
                "truth", "hpdi_hits", "worst_z", "pass");
  out << buf;
  for (const auto& s : report.params) {
    std::snprintf(buf, sizeof(buf), "%-10s %8.3f %6d/%-3d %8.2f %6s\n",
                  s.param.c_str(), s.truth, s.hpdi_hits, report.trials,
                  s.worst_z, s.pass ? "yes" : "no");
    out << buf;
  }
  out << (report.passed ? "RECOVERY PASS\n" : "RECOVERY FAIL\n");
  return out.str();
}

GroundTruth load_truth_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open truth file: " + path.string());
  }
  std::string model_name, predictor_text, outcome_text, custom_name;
  std::map<std::string, double> values;
  std::map<Flag, double> marginals;
  std::map<std::string, PriorSpec> priors;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    std::size_t eq = sv.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("truth file line " + std::to_string(line_no) +
                            ": expected key = value");
    }
    std::string key(trim(sv.substr(0, eq)));
    std::string value(trim(sv.substr(eq + 1)));
    if (key == "model") {
      model_name = value;
    } else if (key == "predictor") {
      predictor_text = value;
    } else if (key == "outcome") {
      outcome_text = value;
    } else if (key == "name") {
      custom_name = value;
    } else if (key.rfind("marginal.", 0) == 0) {
      auto flag = flag_from_name(key.substr(9));
      if (!flag) {
        throw ValidationError("truth file line " + std::to_string(line_no) +
                              ": unknown flag in '" + key + "'");
      }
      marginals[*flag] = std::stod(value);
    } else if (key.rfind("prior.", 0) == 0) {
      priors[key.substr(6)] = parse_prior(value);
    } else {
      try {
        values[key] = std::stod(value);
      } catch (const std::exception&) {
        throw ValidationError("truth file line " + std::to_string(line_no) +
                              ": non-numeric value for '" + key + "'");
      }
    }
  }

  GroundTruth gt;
  if (!model_name.empty()) {
    gt.spec = builtin_model(model_name);
  } else if (!predictor_text.empty() && !outcome_text.empty()) {
    auto outcome = flag_from_name(outcome_text);
    if (!outcome) {
      throw ValidationError("truth file: bad outcome '" + outcome_text + "'");
    }
    gt.spec = ModelSpec::make(
        custom_name.empty() ? "custom" : custom_name, *outcome,
        predictor_text);
  } else {
    throw ValidationError(
        "truth file: need either model = <builtin> or predictor = ... with "
        "outcome = ...");
  }
  for (const auto& [pname, prior] : priors) {
    gt.spec = gt.spec.with_prior(pname, prior);
  }
  gt.theta_true = std::move(values);
  gt.marginals = std::move(marginals);
  gt.theta_vector();  // validates coverage of all parameters
  return gt;
}

}  // namespace additivity
