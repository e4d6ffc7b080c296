// Command-line front-end: validate / fit / compare / sensitivity /
// simulate / plotdata / rerun over the additivity_core engine.
//
// Exit codes: 0 ok, 2 validation error, 3 sampler failure, 4 I/O error.

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "additivity/compare.hpp"
#include "additivity/dataset.hpp"
#include "additivity/diagnostics.hpp"
#include "additivity/errors.hpp"
#include "additivity/manifest.hpp"
#include "additivity/model.hpp"
#include "additivity/oracle.hpp"
#include "additivity/posterior.hpp"
#include "additivity/sampler.hpp"
#include "additivity/sensitivity.hpp"
#include "additivity/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace additivity;

struct Options {
  std::string data;
  std::string model;
  std::string models_csv;
  std::string model_file;
  std::string predictor;
  std::string outcome;
  std::string custom_name = "custom";
  std::vector<std::string> prior_overrides;
  std::string param;
  std::string priors_text;
  std::string grid_text;
  std::string truth;
  std::size_t sim_n = 345;
  std::string ref;
  std::string sim_out = "simulated.csv";
  std::string manifest_path;
  std::vector<std::string> crosstabs;
  std::string out_dir = ".";
  bool json_output = false;
  bool serial = false;
  SamplerConfig cfg;
};

std::string fmt(double v, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path.string());
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
}

fs::path ensure_dir(const std::string& out_dir) {
  fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create out dir: " + dir.string());
  return dir;
}

Dataset load_data_file(const std::string& path) {
  if (path.empty()) {
    throw ValidationError("--data is required for this command");
  }
  std::vector<std::string> warnings;
  Dataset ds = load_dataset(path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return ds;
}

std::vector<std::string> split_list(const std::string& text, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t pos = text.find(delim, start);
    if (pos == std::string::npos) pos = text.size();
    std::string item = text.substr(start, pos - start);
    while (!item.empty() && std::isspace((unsigned char)item.front()))
      item.erase(item.begin());
    while (!item.empty() && std::isspace((unsigned char)item.back()))
      item.pop_back();
    if (!item.empty()) out.push_back(item);
    if (pos == text.size()) break;
    start = pos + 1;
  }
  return out;
}

ModelSpec find_named_model(const std::string& name,
                           const std::string& model_file) {
  if (!model_file.empty()) {
    for (const auto& m : load_model_file(model_file)) {
      if (m.name == name) return m;
    }
    throw ValidationError("model '" + name + "' not found in " + model_file);
  }
  return builtin_model(name);
}

ModelSpec resolve_single_model(const Options& opts) {
  ModelSpec spec;
  if (!opts.predictor.empty()) {
    if (opts.outcome.empty()) {
      throw ValidationError("--predictor requires --outcome");
    }
    auto flag = flag_from_name(opts.outcome);
    if (!flag) {
      throw ValidationError("bad outcome '" + opts.outcome + "'");
    }
    spec = ModelSpec::make(opts.custom_name, *flag, opts.predictor);
  } else if (!opts.model.empty()) {
    spec = find_named_model(opts.model, opts.model_file);
  } else {
    throw ValidationError(
        "select a model with --model or give --predictor/--outcome");
  }
  for (const auto& text : opts.prior_overrides) {
    auto [name, prior] = parse_prior_override(text);
    spec = spec.with_prior(name, prior);
  }
  return spec;
}

std::vector<ModelSpec> resolve_model_list(const Options& opts) {
  std::vector<std::string> names = split_list(opts.models_csv, ',');
  if (names.empty()) {
    throw ValidationError("--models requires at least one model name");
  }
  std::vector<ModelSpec> specs;
  specs.reserve(names.size());
  for (const auto& n : names) {
    specs.push_back(find_named_model(n, opts.model_file));
  }
  return specs;
}

// ---------------------------------------------------------------------------
// Manifest plumbing: full model definitions are stored inline so any run can
// be reproduced without the original model file.

std::string priors_string(const ModelSpec& spec) {
  std::string out;
  for (const auto& name : spec.param_names) {
    const PriorSpec& p = spec.priors.at(name);
    if (!out.empty()) out += ';';
    out += name + "~normal(" + fmt(p.mu) + "," + fmt(p.sigma) + ")";
  }
  return out;
}

void manifest_store_models(RunManifest& m,
                           const std::vector<ModelSpec>& specs) {
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const std::string key = "model." + std::to_string(i) + ".";
    m.models.push_back(specs[i].name);
    m.extra[key + "name"] = specs[i].name;
    m.extra[key + "outcome"] = std::string(flag_name(specs[i].outcome));
    m.extra[key + "predictor"] = to_string(specs[i].predictor);
    m.extra[key + "priors"] = priors_string(specs[i]);
  }
}

std::vector<ModelSpec> manifest_load_models(const RunManifest& m) {
  std::vector<ModelSpec> specs;
  for (std::size_t i = 0;; ++i) {
    const std::string key = "model." + std::to_string(i) + ".";
    auto it = m.extra.find(key + "name");
    if (it == m.extra.end()) break;
    auto outcome = flag_from_name(m.extra.at(key + "outcome"));
    if (!outcome) {
      throw ValidationError("manifest: bad outcome for model " + it->second);
    }
    std::map<std::string, PriorSpec> overrides;
    for (const auto& item :
         split_list(m.extra.at(key + "priors"), ';')) {
      auto [pname, prior] = parse_prior_override(item);
      overrides[pname] = prior;
    }
    specs.push_back(ModelSpec::make(it->second, *outcome,
                                    m.extra.at(key + "predictor"),
                                    overrides));
  }
  if (specs.empty()) {
    throw ValidationError("manifest: no model definitions recorded");
  }
  return specs;
}

RunManifest make_manifest(const std::string& command,
                          const SamplerConfig& cfg,
                          const std::string& dataset_path) {
  RunManifest m;
  m.command = command;
  m.config = cfg;
  m.engine_version = std::string(kEngineVersion);
  m.created_utc = utc_timestamp();
  if (!dataset_path.empty()) {
    m.dataset_path = dataset_path;
    m.dataset_hash = file_hash_hex(dataset_path);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Output writers shared by the commands and by rerun.

void write_summary_files(const fs::path& dir, const std::string& model,
                         const PosteriorSamples& samples,
                         const std::vector<SummaryRow>& rows,
                         bool json_mode) {
  std::string header =
      "model " + model + "  (draws=" + std::to_string(samples.total_draws()) +
      ", chains=" + std::to_string(samples.chains().size()) + ")\n";
  write_text_file(dir / (model + "_summary.txt"),
                  header + render_summary_table(rows));
  if (json_mode) {
    json doc;
    doc["model"] = model;
    doc["draws"] = samples.total_draws();
    doc["chains"] = samples.chains().size();
    doc["params"] = json::array();
    for (const auto& r : rows) {
      doc["params"].push_back({{"param", r.param},
                               {"mean", r.mean},
                               {"sd", r.sd},
                               {"hpdi_low", r.hpdi_low},
                               {"hpdi_high", r.hpdi_high},
                               {"n_eff", r.n_eff},
                               {"rhat", r.rhat},
                               {"mode", r.mode},
                               {"median", r.median}});
    }
    write_text_file(dir / (model + "_summary.json"), doc.dump(2) + "\n");
  } else {
    std::string csv =
        "param,mean,sd,hpdi_low,hpdi_high,n_eff,rhat,mode,median\n";
    for (const auto& r : rows) {
      csv += r.param + ',' + fmt(r.mean, "%.10g") + ',' + fmt(r.sd, "%.10g") +
             ',' + fmt(r.hpdi_low, "%.10g") + ',' +
             fmt(r.hpdi_high, "%.10g") + ',' + fmt(r.n_eff, "%.10g") + ',' +
             fmt(r.rhat, "%.10g") + ',' + fmt(r.mode, "%.10g") + ',' +
             fmt(r.median, "%.10g") + '\n';
    }
    write_text_file(dir / (model + "_summary.csv"), csv);
  }
}

void write_draws_csv(const fs::path& path, const PosteriorSamples& samples) {
  std::string out = "chain,iter";
  for (const auto& p : samples.param_names()) out += ',' + p;
  out += '\n';
  for (const auto& chain : samples.chains()) {
    for (std::size_t s = 0; s < chain.num_draws; ++s) {
      out += std::to_string(chain.chain_id) + ',' + std::to_string(s + 1);
      for (std::size_t j = 0; j < chain.dim; ++j) {
        out += ',' + fmt(chain.at(s, j));
      }
      out += '\n';
    }
  }
  write_text_file(path, out);
}

void write_comparison_files(const fs::path& dir, const ComparisonTable& table,
                            bool json_mode) {
  write_text_file(dir / "compare.txt", render_comparison(table));
  if (json_mode) {
    json doc = json::array();
    for (const auto& r : table.rows) {
      json row = {{"model", r.name},    {"waic", r.waic},
                  {"p_waic", r.p_waic}, {"d_waic", r.d_waic},
                  {"weight", r.weight}, {"se", r.se}};
      if (r.d_se) row["d_se"] = *r.d_se;
      doc.push_back(row);
    }
    write_text_file(dir / "compare.json", doc.dump(2) + "\n");
  } else {
    std::string csv = "model,waic,p_waic,d_waic,weight,se,d_se\n";
    for (const auto& r : table.rows) {
      csv += r.name + ',' + fmt(r.waic, "%.10g") + ',' +
             fmt(r.p_waic, "%.10g") + ',' + fmt(r.d_waic, "%.10g") + ',' +
             fmt(r.weight, "%.10g") + ',' + fmt(r.se, "%.10g") + ',' +
             (r.d_se ? fmt(*r.d_se, "%.10g") : std::string()) + '\n';
    }
    write_text_file(dir / "compare.csv", csv);
  }
}

void write_series_csv(const fs::path& path, const std::string& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::string out = header + '\n';
  for (const auto& row : rows) {
    std::string line;
    for (const auto& cell : row) {
      if (!line.empty()) line += ',';
      line += cell;
    }
    out += line + '\n';
  }
  write_text_file(path, out);
}

// JSON twin of write_series_csv: {"columns": [...], "rows": [[...], ...]}.
void write_series_json(const fs::path& path, const std::string& header,
                       const std::vector<std::vector<std::string>>& rows) {
  json doc;
  std::vector<std::string> columns;
  std::size_t start = 0;
  while (start <= header.size()) {
    std::size_t pos = header.find(',', start);
    if (pos == std::string::npos) pos = header.size();
    columns.push_back(header.substr(start, pos - start));
    if (pos == header.size()) break;
    start = pos + 1;
  }
  doc["columns"] = columns;
  doc["rows"] = json::array();
  for (const auto& row : rows) {
    json r = json::array();
    for (std::size_t i = 0; i < row.size(); ++i) {
      // Numeric columns stay numeric in the JSON form.
      char* end = nullptr;
      double v = std::strtod(row[i].c_str(), &end);
      if (end != row[i].c_str() && *end == '\0') {
        r.push_back(v);
      } else {
        r.push_back(row[i]);
      }
    }
    doc["rows"].push_back(std::move(r));
  }
  write_text_file(path, doc.dump(2) + "\n");
}

void write_series(const fs::path& dir, const std::string& stem,
                  const std::string& header,
                  const std::vector<std::vector<std::string>>& rows,
                  bool json_mode) {
  if (json_mode) {
    write_series_json(dir / (stem + ".json"), header, rows);
  } else {
    write_series_csv(dir / (stem + ".csv"), header, rows);
  }
}

// ---------------------------------------------------------------------------
// Command cores. Each emit_* produces the command's artifacts from resolved
// inputs; rerun calls the same code path with inputs recovered from a
// manifest, so replayed outputs are byte-identical.

void emit_fit(const ModelSpec& spec, const Dataset& ds,
              const SamplerConfig& cfg, const fs::path& dir, bool json_mode,
              bool quiet) {
  PosteriorSamples samples = run_sampler(spec, ds, cfg);
  std::vector<SummaryRow> rows = summarize(samples);
  if (!quiet) {
    std::cout << "model " << spec.name << " (N=" << ds.size() << ")\n"
              << render_summary_table(rows);
    for (const auto& chain : samples.chains()) {
      std::printf(
          "chain %d: accept %.2f, divergences %d (post-warmup %d), "
          "step size %.4f\n",
          chain.chain_id, chain.accept_rate, chain.divergence_count,
          chain.post_warmup_divergences, chain.adapted_step_size);
    }
  }
  write_summary_files(dir, spec.name, samples, rows, json_mode);
  write_draws_csv(dir / (spec.name + "_draws.csv"), samples);
}

ComparisonTable emit_compare(const std::vector<ModelSpec>& specs,
                             const Dataset& ds, const SamplerConfig& cfg,
                             const fs::path& dir, bool json_mode) {
  std::vector<NamedWaic> results;
  results.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    SamplerConfig model_cfg = cfg;
    model_cfg.seed = cfg.seed + i;  // per-model seeds derived from the base
    PosteriorSamples samples = run_sampler(specs[i], ds, model_cfg);
    results.push_back({specs[i].name, waic(specs[i], samples, ds)});
  }
  ComparisonTable table = compare(results);
  write_comparison_files(dir, table, json_mode);
  return table;
}

PriorGridResult emit_sensitivity(const ModelSpec& spec, const Dataset& ds,
                                 const SamplerConfig& cfg,
                                 const std::string& param,
                                 const std::vector<PriorSpec>& priors,
                                 const fs::path& dir, bool json_mode) {
  PriorGridResult grid = run_prior_grid(spec, ds, cfg, param, priors);
  const std::string stem = spec.name + "_" + param + "_prior";
  if (json_mode) {
    json doc;
    doc["model"] = grid.model;
    doc["param"] = grid.param;
    doc["variants"] = json::array();
    for (const auto& v : grid.variants) {
      doc["variants"].push_back(
          {{"label", v.label},
           {"mu", v.prior.mu},
           {"sigma", v.prior.sigma},
           {"mean", v.summary.mean},
           {"sd", v.summary.sd},
           {"hpdi_low", v.summary.hpdi_low},
           {"hpdi_high", v.summary.hpdi_high},
           {"logistic_of_mean", v.logistic_of_mean},
           {"mean_of_logistic", v.mean_of_logistic},
           {"density",
            {{"grid", v.density.grid},
             {"density", v.density.density},
             {"bandwidth", v.density.bandwidth}}}});
    }
    doc["mean_shift"] = grid.mean_shift;
    doc["prob_shift"] = grid.prob_shift;
    write_text_file(dir / (stem + "_grid.json"), doc.dump(2) + "\n");
  } else {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t v = 0; v < grid.variants.size(); ++v) {
      const auto& variant = grid.variants[v];
      for (std::size_t g = 0; g < variant.density.grid.size(); ++g) {
        rows.push_back({std::to_string(v), variant.label,
                        fmt(variant.density.grid[g]),
                        fmt(variant.density.density[g])});
      }
    }
    write_series_csv(dir / (stem + "_grid.csv"),
                     "variant,label,grid,density", rows);
  }
  write_text_file(dir / (stem + "_report.txt"), render_shift_report(grid));
  return grid;
}

void emit_plotdata(const ModelSpec& spec, const Dataset& ds,
                   const SamplerConfig& cfg, const fs::path& dir,
                   bool json_mode) {
  PosteriorSamples samples = run_sampler(spec, ds, cfg);
  const std::size_t draws = samples.draws_per_chain();
  const int max_lag = static_cast<int>(std::min<std::size_t>(60, draws - 1));

  for (std::size_t j = 0; j < samples.dim(); ++j) {
    const std::string& param = samples.param_names()[j];
    const std::string stem = spec.name + "_" + param + "_";
    auto chains = samples.param_chains(j);

    std::vector<std::vector<std::string>> trace_rows;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      for (std::size_t s = 0; s < chains[c].size(); ++s) {
        trace_rows.push_back({std::to_string(samples.chains()[c].chain_id),
                              std::to_string(s + 1), fmt(chains[c][s])});
      }
    }
    write_series(dir, stem + "trace", "chain,iter,value", trace_rows,
                 json_mode);

    std::vector<std::vector<std::string>> ac_rows;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      std::vector<double> rho = autocorr(chains[c], max_lag);
      for (std::size_t lag = 0; lag < rho.size(); ++lag) {
        ac_rows.push_back({std::to_string(samples.chains()[c].chain_id),
                           std::to_string(lag), fmt(rho[lag])});
      }
    }
    write_series(dir, stem + "autocorr", "chain,lag,value", ac_rows,
                 json_mode);

    std::vector<std::vector<std::string>> shrink_rows;
    for (const auto& pt :
         shrink_trace(chains, default_shrink_schedule(draws))) {
      shrink_rows.push_back(
          {std::to_string(pt.draws_per_chain), fmt(pt.rhat)});
    }
    write_series(dir, stem + "shrink", "draws_per_chain,rhat", shrink_rows,
                 json_mode);

    DensityCurve density = kde(samples.pooled(j), 2.0);
    std::vector<std::vector<std::string>> density_rows;
    for (std::size_t g = 0; g < density.grid.size(); ++g) {
      density_rows.push_back(
          {fmt(density.grid[g]), fmt(density.density[g])});
    }
    write_series(dir, stem + "density", "grid,density", density_rows,
                 json_mode);
  }
}

fs::path emit_simulate(const GroundTruth& gt, std::size_t n,
                       std::uint64_t seed, const fs::path& dir,
                       const std::string& out_name) {
  Dataset ds = generate_dataset(gt, n, seed);
  fs::path out_path = dir / out_name;
  write_dataset(ds, out_path);
  return out_path;
}

// ---------------------------------------------------------------------------
// Subcommands

void run_validate(const Options& opts) {
  Dataset ds = load_data_file(opts.data);
  std::cout << "rows: " << ds.size() << "\n";
  std::cout << "flag counts (value 1):\n";
  for (Flag f : kAllFlags) {
    long count = 0;
    for (const auto& r : ds.records()) count += r.flag(f);
    std::printf("  %-4s %6ld  (%.3f)\n", std::string(flag_name(f)).c_str(),
                count, static_cast<double>(count) / ds.size());
  }
  for (const auto& pair : opts.crosstabs) {
    std::vector<std::string> flags = split_list(pair, ',');
    if (flags.size() != 2) {
      throw ValidationError("--crosstab expects two flag names, got '" +
                            pair + "'");
    }
    std::cout << render_crosstab(cross_tabulate(ds, flags[0], flags[1]));
  }
  std::cout << "ok\n";
}

void run_fit(const Options& opts) {
  Dataset ds = load_data_file(opts.data);
  ModelSpec spec = resolve_single_model(opts);
  SamplerConfig cfg = opts.cfg;
  cfg.parallel_chains = !opts.serial;

  fs::path dir = ensure_dir(opts.out_dir);
  emit_fit(spec, ds, cfg, dir, opts.json_output, /*quiet=*/false);

  RunManifest m = make_manifest("fit", cfg, opts.data);
  manifest_store_models(m, {spec});
  write_manifest(m, dir / (spec.name + "_manifest.json"));
}

void run_compare(const Options& opts) {
  Dataset ds = load_data_file(opts.data);
  std::vector<ModelSpec> specs = resolve_model_list(opts);
  SamplerConfig cfg = opts.cfg;
  cfg.parallel_chains = !opts.serial;

  fs::path dir = ensure_dir(opts.out_dir);
  ComparisonTable table =
      emit_compare(specs, ds, cfg, dir, opts.json_output);
  std::cout << render_comparison(table);

  RunManifest m = make_manifest("compare", cfg, opts.data);
  manifest_store_models(m, specs);
  write_manifest(m, dir / "compare_manifest.json");
}

void run_sensitivity(const Options& opts) {
  Dataset ds = load_data_file(opts.data);
  ModelSpec spec = resolve_single_model(opts);
  SamplerConfig cfg = opts.cfg;
  cfg.parallel_chains = !opts.serial;

  std::string param = opts.param;
  std::vector<PriorSpec> priors;
  if (!opts.grid_text.empty()) {
    auto [p, list] = parse_grid_description(opts.grid_text);
    param = p;
    priors = list;
  } else {
    if (param.empty() || opts.priors_text.empty()) {
      throw ValidationError(
          "sensitivity needs --param and --priors (or --grid)");
    }
    priors = parse_prior_list(opts.priors_text);
  }

  fs::path dir = ensure_dir(opts.out_dir);
  PriorGridResult grid =
      emit_sensitivity(spec, ds, cfg, param, priors, dir, opts.json_output);
  std::cout << render_shift_report(grid);

  RunManifest m = make_manifest("sensitivity", cfg, opts.data);
  manifest_store_models(m, {spec});
  m.extra["param"] = param;
  std::string prior_list;
  for (const auto& p : priors) {
    if (!prior_list.empty()) prior_list += ',';
    prior_list += prior_label(p);
  }
  m.extra["priors"] = prior_list;
  write_manifest(m,
                 dir / (spec.name + "_" + param + "_prior_manifest.json"));
}

void run_simulate(const Options& opts) {
  if (opts.truth.empty()) {
    throw ValidationError("simulate requires --truth <file>");
  }
  GroundTruth gt = load_truth_file(opts.truth);
  if (!opts.ref.empty()) {
    std::vector<std::string> warnings;
    gt.reference = load_dataset(opts.ref, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  }

  fs::path dir = ensure_dir(opts.out_dir);
  fs::path out_path =
      emit_simulate(gt, opts.sim_n, opts.cfg.seed, dir, opts.sim_out);
  std::cout << "wrote " << opts.sim_n << " rows from model " << gt.spec.name
            << " to " << out_path.string() << "\n";

  RunManifest m = make_manifest("simulate", opts.cfg, "");
  manifest_store_models(m, {gt.spec});
  m.dataset_path = out_path.string();
  m.dataset_hash = file_hash_hex(out_path);
  m.extra["truth_path"] = opts.truth;
  m.extra["truth_hash"] = file_hash_hex(opts.truth);
  m.extra["n"] = std::to_string(opts.sim_n);
  m.extra["sim_out"] = opts.sim_out;
  if (!opts.ref.empty()) {
    m.extra["ref_path"] = opts.ref;
    m.extra["ref_hash"] = file_hash_hex(opts.ref);
  }
  fs::path manifest_path = out_path;
  manifest_path.replace_extension();
  write_manifest(m, manifest_path.string() + "_manifest.json");
}

void run_plotdata(const Options& opts) {
  Dataset ds = load_data_file(opts.data);
  ModelSpec spec = resolve_single_model(opts);
  SamplerConfig cfg = opts.cfg;
  cfg.parallel_chains = !opts.serial;

  fs::path dir = ensure_dir(opts.out_dir);
  emit_plotdata(spec, ds, cfg, dir, opts.json_output);
  std::cout << "wrote trace/autocorr/shrink/density series for model "
            << spec.name << " under " << dir.string() << "\n";

  RunManifest m = make_manifest("plotdata", cfg, opts.data);
  manifest_store_models(m, {spec});
  write_manifest(m, dir / (spec.name + "_plotdata_manifest.json"));
}

void run_rerun(const Options& opts) {
  RunManifest m = load_manifest(opts.manifest_path);
  fs::path dir = ensure_dir(opts.out_dir);

  if (m.command == "simulate") {
    const std::string truth_path = m.extra.at("truth_path");
    if (file_hash_hex(truth_path) != m.extra.at("truth_hash")) {
      throw ValidationError("rerun: truth file " + truth_path +
                            " changed since the recorded run");
    }
    GroundTruth gt = load_truth_file(truth_path);
    if (m.extra.count("ref_path")) {
      const std::string ref = m.extra.at("ref_path");
      if (file_hash_hex(ref) != m.extra.at("ref_hash")) {
        throw ValidationError("rerun: reference dataset " + ref +
                              " changed since the recorded run");
      }
      gt.reference = load_dataset(ref);
    }
    fs::path out_path =
        emit_simulate(gt, std::stoull(m.extra.at("n")), m.config.seed, dir,
                      m.extra.at("sim_out"));
    RunManifest replayed = m;
    replayed.created_utc = utc_timestamp();
    replayed.dataset_path = out_path.string();
    replayed.dataset_hash = file_hash_hex(out_path);
    fs::path manifest_path = out_path;
    manifest_path.replace_extension();
    write_manifest(replayed, manifest_path.string() + "_manifest.json");
    std::cout << "reproduced simulate -> " << out_path.string() << "\n";
    return;
  }

  if (m.dataset_path.empty()) {
    throw ValidationError("rerun: manifest records no dataset");
  }
  std::string current = file_hash_hex(m.dataset_path);
  if (current != m.dataset_hash) {
    throw ValidationError("rerun: dataset " + m.dataset_path +
                          " hash changed (was " + m.dataset_hash + ", now " +
                          current + ")");
  }
  Dataset ds = load_data_file(m.dataset_path);
  std::vector<ModelSpec> specs = manifest_load_models(m);

  // The replayed run carries the same manifest forward (fresh timestamp),
  // so the replay directory is itself reproducible.
  RunManifest replayed = m;
  replayed.created_utc = utc_timestamp();

  if (m.command == "fit") {
    emit_fit(specs[0], ds, m.config, dir, opts.json_output, /*quiet=*/true);
    write_manifest(replayed, dir / (specs[0].name + "_manifest.json"));
    std::cout << "reproduced fit of " << specs[0].name << "\n";
  } else if (m.command == "compare") {
    emit_compare(specs, ds, m.config, dir, opts.json_output);
    write_manifest(replayed, dir / "compare_manifest.json");
    std::cout << "reproduced comparison of " << specs.size() << " models\n";
  } else if (m.command == "sensitivity") {
    const std::string param = m.extra.at("param");
    emit_sensitivity(specs[0], ds, m.config, param,
                     parse_prior_list(m.extra.at("priors")), dir,
                     opts.json_output);
    write_manifest(replayed, dir / (specs[0].name + "_" + param +
                                    "_prior_manifest.json"));
    std::cout << "reproduced prior grid for " << specs[0].name << "\n";
  } else if (m.command == "plotdata") {
    emit_plotdata(specs[0], ds, m.config, dir, opts.json_output);
    write_manifest(replayed,
                   dir / (specs[0].name + "_plotdata_manifest.json"));
    std::cout << "reproduced plot data for " << specs[0].name << "\n";
  } else {
    throw ValidationError("rerun: unsupported command '" + m.command + "'");
  }
}

std::uint64_t seed_from_env_or(std::uint64_t fallback) {
  const char* env = std::getenv("ADDITIVITY_SEED");
  if (!env || !*env) return fallback;
  char* end = nullptr;
  unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') {
    throw ValidationError("ADDITIVITY_SEED is not a valid integer: " +
                          std::string(env));
  }
  return static_cast<std::uint64_t>(v);
}

void add_sampler_options(CLI::App* cmd, Options& opts) {
  cmd->add_option("--chains", opts.cfg.chains, "number of chains");
  cmd->add_option("--iters", opts.cfg.iters_per_chain,
                  "iterations per chain, warmup included");
  cmd->add_option("--warmup", opts.cfg.warmup,
                  "warmup iterations per chain");
  cmd->add_option("--seed", opts.cfg.seed, "base RNG seed");
  cmd->add_option("--target-accept", opts.cfg.target_accept,
                  "dual-averaging target acceptance probability");
  cmd->add_option("--leapfrog-steps", opts.cfg.leapfrog_steps,
                  "max leapfrog steps per iteration (jittered from 1)");
  cmd->add_flag("--serial", opts.serial, "run chains serially");
}

void add_output_options(CLI::App* cmd, Options& opts) {
  cmd->add_option("--out-dir", opts.out_dir, "output directory");
  cmd->add_flag("--json", opts.json_output,
                "structured outputs as JSON instead of delimited text");
}

void add_model_options(CLI::App* cmd, Options& opts) {
  cmd->add_option("--model", opts.model, "builtin or model-file model name");
  cmd->add_option("--model-file", opts.model_file, "JSON model file");
  cmd->add_option("--predictor", opts.predictor,
                  "inline predictor expression");
  cmd->add_option("--outcome", opts.outcome, "outcome flag for --predictor");
  cmd->add_option("--name", opts.custom_name, "name for the inline model");
  cmd->add_option("--prior", opts.prior_overrides,
                  "prior override name~normal(mu,sigma); repeatable");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Bayesian inference engine for binary story-annotation tables: "
      "Bernoulli-logit models fitted by Hamiltonian Monte Carlo, with WAIC "
      "comparison, convergence diagnostics and prior-sensitivity analysis"};
  app.require_subcommand(1);

  Options opts;
  try {
    opts.cfg.seed = seed_from_env_or(1);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  auto* validate = app.add_subcommand("validate", "check a dataset file");
  validate->add_option("--data", opts.data, "dataset file")->required();
  validate->add_option("--crosstab", opts.crosstabs,
                       "2x2 table for a flag pair, e.g. \"VT,VC\"; "
                       "repeatable");

  auto* fit = app.add_subcommand("fit", "fit one model and summarize it");
  fit->add_option("--data", opts.data, "dataset file")->required();
  add_model_options(fit, opts);
  add_sampler_options(fit, opts);
  add_output_options(fit, opts);

  auto* cmp = app.add_subcommand(
      "compare", "fit several models and rank them by WAIC");
  cmp->add_option("--data", opts.data, "dataset file")->required();
  cmp->add_option("--models", opts.models_csv, "comma-separated model names")
      ->required();
  cmp->add_option("--model-file", opts.model_file, "JSON model file");
  add_sampler_options(cmp, opts);
  add_output_options(cmp, opts);

  auto* sens = app.add_subcommand(
      "sensitivity", "refit under a grid of priors for one parameter");
  sens->add_option("--data", opts.data, "dataset file")->required();
  add_model_options(sens, opts);
  sens->add_option("--param", opts.param, "parameter to vary");
  sens->add_option("--priors", opts.priors_text,
                   "comma-separated prior list, e.g. "
                   "\"normal(0,10),normal(0,50),normal(-3,1)\"");
  sens->add_option("--grid", opts.grid_text,
                   "one-string grid form \"param=bVC; priors=...\"");
  add_sampler_options(sens, opts);
  add_output_options(sens, opts);

  auto* sim =
      app.add_subcommand("simulate", "generate a dataset from a known truth");
  sim->add_option("--truth", opts.truth, "key=value truth file")->required();
  sim->add_option("--n", opts.sim_n, "number of rows");
  sim->add_option("--seed", opts.cfg.seed, "generation seed");
  sim->add_option("--ref", opts.ref,
                  "reference dataset whose covariate rows are resampled");
  sim->add_option("--out", opts.sim_out, "output file name");
  add_output_options(sim, opts);

  auto* plot = app.add_subcommand(
      "plotdata", "emit trace/autocorr/shrink/density series per parameter");
  plot->add_option("--data", opts.data, "dataset file")->required();
  add_model_options(plot, opts);
  add_sampler_options(plot, opts);
  add_output_options(plot, opts);

  auto* rerun =
      app.add_subcommand("rerun", "reproduce a run from its manifest");
  rerun->add_option("--manifest", opts.manifest_path, "manifest file")
      ->required();
  add_output_options(rerun, opts);

  validate->callback([&] { run_validate(opts); });
  fit->callback([&] { run_fit(opts); });
  cmp->callback([&] { run_compare(opts); });
  sens->callback([&] { run_sensitivity(opts); });
  sim->callback([&] { run_simulate(opts); });
  plot->callback([&] { run_plotdata(opts); });
  rerun->callback([&] { run_rerun(opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const SamplerError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DiagnosticError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
