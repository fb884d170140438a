// stcar: fit spatio-temporal CAR models with adaptive boundary smoothing,
// simulate benchmark datasets, run scenario studies, and re-summarize
// persisted runs.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stcar/diagnostics.hpp"
#include "stcar/error.hpp"
#include "stcar/io.hpp"
#include "stcar/model.hpp"
#include "stcar/sampler.hpp"
#include "stcar/simulate.hpp"
#include "stcar/version.hpp"

namespace {

using namespace stcar;

struct CommonOpts {
  std::string data, adjacency, edge_adjacency;
  std::string model = "adaptive";
  int n_sample = 10000, burnin = 5000, thin = 1;
  std::uint64_t seed = 1;
  double prior_var_beta = 10000.0;
  std::string prior_tau2 = "0.001,0.001";
  std::string prior_zeta2 = "0.001,0.001";
  double mu = 15.0, epsilon = 1e-7, v_bound = 15.0;
  int v_block_size = 10;
  std::string out;
  std::string format = "csv";
  int chains = 1, workers = 1;
  bool overwrite = false;
  bool dump_precision = false;
  std::string config;
};

std::pair<double, double> parse_pair(const std::string& v,
                                     const std::string& flag) {
  const auto comma = v.find(',');
  if (comma == std::string::npos)
    throw_value(flag + ": expected 'a,b', got '" + v + "'");
  try {
    return {std::stod(v.substr(0, comma)), std::stod(v.substr(comma + 1))};
  } catch (const std::exception&) {
    throw_value(flag + ": non-numeric value '" + v + "'");
  }
}

// config file value applies only when the flag was not given on the line
void apply_config(const CLI::App& cmd, CommonOpts& o) {
  if (o.config.empty()) return;
  const auto kv = read_config_file(o.config);
  auto set_if_default = [&](const std::string& key, auto& field) {
    const auto it = kv.find(key);
    if (it == kv.end()) return;
    const CLI::Option* opt = cmd.get_option_no_throw("--" + key);
    if (opt != nullptr && opt->count() > 0) return;  // flag wins
    std::istringstream is(it->second);
    is >> field;
    if (is.fail())
      throw_value("config key '" + key + "': bad value '" + it->second + "'");
  };
  set_if_default("data", o.data);
  set_if_default("adjacency", o.adjacency);
  set_if_default("edge-adjacency", o.edge_adjacency);
  set_if_default("model", o.model);
  set_if_default("n-sample", o.n_sample);
  set_if_default("burnin", o.burnin);
  set_if_default("thin", o.thin);
  set_if_default("seed", o.seed);
  set_if_default("prior-var-beta", o.prior_var_beta);
  set_if_default("prior-tau2", o.prior_tau2);
  set_if_default("prior-zeta2", o.prior_zeta2);
  set_if_default("mu", o.mu);
  set_if_default("epsilon", o.epsilon);
  set_if_default("v-bound", o.v_bound);
  set_if_default("v-block-size", o.v_block_size);
  set_if_default("out", o.out);
  set_if_default("format", o.format);
  set_if_default("chains", o.chains);
  set_if_default("workers", o.workers);
}

ModelSpec make_spec(const CommonOpts& o) {
  ModelSpec spec;
  spec.variant = variant_from_name(o.model);
  spec.prior_var_beta = o.prior_var_beta;
  std::tie(spec.tau2_shape, spec.tau2_scale) =
      parse_pair(o.prior_tau2, "--prior-tau2");
  std::tie(spec.zeta2_shape, spec.zeta2_scale) =
      parse_pair(o.prior_zeta2, "--prior-zeta2");
  spec.mu = o.mu;
  spec.epsilon = o.epsilon;
  spec.v_bound = o.v_bound;
  spec.validate();
  return spec;
}

ChainConfig make_chain_config(const CommonOpts& o) {
  ChainConfig cfg;
  cfg.n_sample = o.n_sample;
  cfg.burnin = o.burnin;
  cfg.thin = o.thin;
  cfg.v_block_size = o.v_block_size;
  cfg.rng_seed = o.seed;
  cfg.validate();
  return cfg;
}

void add_chain_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--model", o.model,
                  "global | adaptive | adaptive-clustered");
  cmd->add_option("--n-sample", o.n_sample, "total chain length");
  cmd->add_option("--burnin", o.burnin, "discarded initial iterations");
  cmd->add_option("--thin", o.thin, "keep every thin-th draw");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--prior-var-beta", o.prior_var_beta,
                  "normal prior variance of the covariate effects");
  cmd->add_option("--prior-tau2", o.prior_tau2,
                  "inverse-gamma shape,scale for tau2");
  cmd->add_option("--prior-zeta2", o.prior_zeta2,
                  "inverse-gamma shape,scale for zeta2");
  cmd->add_option("--mu", o.mu, "prior mean of the logit boundary weights");
  cmd->add_option("--epsilon", o.epsilon, "precision ridge");
  cmd->add_option("--v-bound", o.v_bound, "truncation of the logit weights");
  cmd->add_option("--v-block-size", o.v_block_size,
                  "boundary-weight block size");
  cmd->add_option("--config", o.config, "INI config; flags take precedence");
}

void print_fit_summary(const FitReport& rep, const McmcSamples& samples,
                       const std::optional<BoundaryReport>& boundary) {
  std::cout << "model: " << variant_name(samples.variant) << "\n";
  std::cout << "kept draws: " << samples.n_kept << "\n";
  std::cout << "DIC: " << rep.dic << "  pD: " << rep.pd
            << "  mean deviance: " << rep.mean_deviance << "\n";
  std::cout << "acceptance rates:";
  for (const auto& [family, rate] : rep.acceptance_rates)
    std::cout << "  " << family << "=" << rate;
  std::cout << "\n";
  for (const auto& name : {"tau2", "alpha", "zeta2", "rho"}) {
    const auto it = rep.params.find(name);
    if (it == rep.params.end()) continue;
    std::cout << name << ": median " << it->second.median << "  95% ["
              << it->second.lo95 << ", " << it->second.hi95 << "]\n";
  }
  if (boundary) {
    int n75 = 0, n99 = 0;
    for (int e = 0; e < boundary->count(); ++e) {
      n75 += boundary->flag75[e];
      n99 += boundary->flag99[e];
    }
    std::cout << "boundaries: " << n75 << " of " << boundary->count()
              << " borders at p>0.75, " << n99 << " at p>0.99\n";
  }
}

int cmd_fit(CommonOpts& o) {
  const fs::path out(o.out);
  prepare_output_dir(out, o.overwrite);
  const ModelSpec spec = make_spec(o);
  ChainConfig cfg = make_chain_config(o);

  AreaGraph graph = read_adjacency(o.adjacency);
  if (!graph.connected)
    std::cerr << "warning: adjacency graph is disconnected; the epsilon "
                 "ridge keeps the precision invertible\n";
  Dataset d = read_dataset_csv(o.data, std::move(graph));
  const EdgeSet es = build_edge_set(d.graph);
  std::optional<EdgeGraph> eg;
  std::vector<fs::path> inputs{o.data, o.adjacency};
  if (!o.edge_adjacency.empty()) {
    eg = read_edge_adjacency(o.edge_adjacency, es.count());
    inputs.push_back(o.edge_adjacency);
  }
  const Provenance prov{kVersion, o.seed, digest_files(inputs)};

  // keep a self-contained copy of the inputs so summarize needs no paths
  write_dataset_csv(out / "data.csv", d, prov);
  write_adjacency_csv(out / "adjacency.csv", d.graph, prov);

  const SampleFormat format = sample_format_from_name(o.format);
  for (int c = 0; c < o.chains; ++c) {
    ChainConfig ccfg = cfg;
    ccfg.rng_seed = (o.chains == 1) ? o.seed : derive_seed(o.seed, c);
    const fs::path chain_dir =
        (o.chains == 1) ? out
                        : out / ("chain_" + std::string(c < 10 ? "0" : "") +
                                 std::to_string(c));
    if (o.chains > 1) prepare_output_dir(chain_dir, o.overwrite);

    Chain chain(d, spec, ccfg, eg);
    if (o.dump_precision)
      write_matrix_market(chain_dir / "precision_init.mtx",
                          chain.spatial_precision());
    const McmcSamples samples = chain.run();

    const Provenance cprov{kVersion, ccfg.rng_seed, prov.inputs_digest};
    RunManifest manifest;
    manifest.version = kVersion;
    manifest.seed = ccfg.rng_seed;
    manifest.inputs_digest = prov.inputs_digest;
    manifest.variant = spec.variant;
    manifest.format = format;
    manifest.n_kept = samples.n_kept;
    manifest.n_areas = samples.n_areas;
    manifest.n_periods = samples.n_periods;
    manifest.n_covariates = samples.n_covariates;
    manifest.n_edges = samples.n_edges;
    manifest.mu = spec.mu;
    manifest.epsilon = spec.epsilon;
    manifest.acceptance = samples.acceptance;
    write_manifest(chain_dir / "manifest.json", manifest);
    write_samples(chain_dir, samples, format, cprov);

    const FitReport rep = summarize_fit(samples, d);
    write_fit_report_csv(chain_dir / "fit_report.csv", rep, cprov);
    write_fit_report_json(chain_dir / "fit_report.json", rep, cprov);
    write_risk_summary_csv(chain_dir / "risk_summary.csv", rep, d.n_areas,
                           d.n_periods, cprov);
    std::optional<BoundaryReport> boundary;
    if (samples.has_w()) {
      boundary = step_change_probs(samples, es);
      write_boundary_report_csv(chain_dir / "boundary_report.csv", *boundary,
                                cprov);
    }
    if (o.chains > 1) std::cout << "--- chain " << c << " ---\n";
    print_fit_summary(rep, samples, boundary);
  }
  return 0;
}

int cmd_simulate(const std::string& scenario_path,
                 std::optional<std::uint64_t> seed_override, CommonOpts& o) {
  const fs::path out(o.out);
  prepare_output_dir(out, o.overwrite);
  NamedScenario ns = read_named_scenario(scenario_path);
  if (seed_override) ns.scenario.seed = *seed_override;
  const Provenance prov{kVersion, ns.scenario.seed,
                        digest_files({scenario_path})};
  const auto [d, truth] = generate_dataset(ns.scenario, ns.scenario.seed);
  write_dataset_csv(out / "data.csv", d, prov);
  write_adjacency_csv(out / "adjacency.csv", d.graph, prov);
  {
    AtomicFile f(out / "true_risk.csv");
    f.write(provenance_line(prov));
    f.write("area,time,risk\n");
    for (int a = 0; a < d.n_areas; ++a)
      for (int j = 0; j < d.n_periods; ++j)
        f.write(std::to_string(a) + "," + std::to_string(j) + "," +
                format_double(
                    truth.risk[static_cast<std::size_t>(j) * d.n_areas + a]) +
                "\n");
    f.commit();
  }
  {
    const EdgeSet es = build_edge_set(d.graph);
    AtomicFile f(out / "true_boundaries.csv");
    f.write(provenance_line(prov));
    f.write("edge_i,edge_k\n");
    for (int e = 0; e < es.count(); ++e)
      if (truth.boundary[e])
        f.write(std::to_string(es.edges[e].first) + "," +
                std::to_string(es.edges[e].second) + "\n");
    f.commit();
  }
  std::cout << "scenario '" << ns.name << "': wrote " << d.n_areas
            << " areas x " << d.n_periods << " periods to " << out << "\n";
  return 0;
}

int cmd_study(const std::vector<std::string>& scenario_paths,
              const std::string& models_csv, int replicates_override,
              CommonOpts& o) {
  const fs::path out(o.out);
  prepare_output_dir(out, o.overwrite);
  std::vector<NamedScenario> scenarios;
  std::vector<fs::path> inputs;
  for (const auto& p : scenario_paths) {
    scenarios.push_back(read_named_scenario(p));
    if (replicates_override > 0)
      scenarios.back().scenario.replicates = replicates_override;
    inputs.push_back(p);
  }
  std::vector<ModelVariant> models;
  {
    std::istringstream is(models_csv);
    std::string tok;
    while (std::getline(is, tok, ','))
      if (!tok.empty()) models.push_back(variant_from_name(tok));
  }
  if (models.empty()) throw_value("--models: no models given");
  const ChainConfig cfg = make_chain_config(o);
  const Provenance prov{kVersion, scenarios.front().scenario.seed,
                        digest_files(inputs)};
  const StudyResult res = run_study(scenarios, models, cfg, o.workers);
  write_study_tables(out, res, prov);
  for (const auto& row : res.rows) {
    std::cout << row.scenario << " / " << row.model << ": rmse "
              << row.rmse_median << ", DIC " << row.dic_median << ", pD "
              << row.pd_median << ", coverage " << row.coverage_median;
    if (row.has_boundary_metric)
      std::cout << ", " << (row.boundary_metric_is_auc ? "AUC" : "SPF") << " "
                << row.boundary_median;
    std::cout << " (" << row.n_ok << " replicates)\n";
  }
  return 0;
}

int cmd_summarize(const std::string& run_dir, const std::string& truth_path,
                  CommonOpts& o) {
  const fs::path run(run_dir);
  const fs::path out(o.out);
  prepare_output_dir(out, o.overwrite);
  const RunManifest manifest = read_manifest(run / "manifest.json");
  const McmcSamples samples = read_samples(run);
  AreaGraph graph = read_adjacency(run / "adjacency.csv");
  Dataset d = read_dataset_csv(run / "data.csv", std::move(graph));
  const EdgeSet es = build_edge_set(d.graph);
  const Provenance prov = manifest.provenance();

  // compute everything first so a failure never leaves partial output
  const FitReport rep = summarize_fit(samples, d);
  std::optional<BoundaryReport> boundary;
  std::optional<RocCurve> roc;
  if (samples.has_w()) {
    boundary = step_change_probs(samples, es);
    if (!truth_path.empty()) {
      const CsvTable t = read_csv(truth_path);
      const int ci = t.require("edge_i");
      const int ck = t.require("edge_k");
      std::vector<char> label(es.count(), 0);
      for (const auto& row : t.rows) {
        const int e = es.find(static_cast<int>(row[ci]),
                              static_cast<int>(row[ck]));
        if (e < 0)
          throw_value(truth_path + ": pair is not a border of the graph");
        label[e] = 1;
      }
      roc = roc_auc(boundary->mean_w, label);
    }
  }

  write_fit_report_csv(out / "fit_report.csv", rep, prov);
  write_fit_report_json(out / "fit_report.json", rep, prov);
  write_risk_summary_csv(out / "risk_summary.csv", rep, d.n_areas,
                         d.n_periods, prov);
  if (boundary) {
    write_boundary_report_csv(out / "boundary_report.csv", *boundary, prov);
    // induced prior density curves at the posterior zeta plus stock values
    std::vector<double> zetas{2.0, 5.0, 10.0, 20.0};
    if (!samples.zeta2.empty()) {
      std::vector<double> z2(samples.zeta2);
      zetas.insert(zetas.begin(), std::sqrt(quantile(z2, 0.5)));
    }
    write_prior_curve_csv(out / "prior_curve.csv", zetas, manifest.mu, 200,
                          prov);
    if (roc) write_roc_csv(out / "roc.csv", *roc, prov);
  }
  print_fit_summary(rep, samples, boundary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatio-temporal CAR models with adaptive boundary smoothing"};
  app.set_version_flag("--version", stcar::kVersion);
  app.require_subcommand(1);
  CommonOpts o;

  CLI::App* fit = app.add_subcommand("fit", "fit a model to a count panel");
  fit->add_option("--data", o.data, "data CSV (area,time,observed,expected,...)");
  fit->add_option("--adjacency", o.adjacency, "adjacency CSV (edge list or 0/1 matrix)");
  fit->add_option("--edge-adjacency", o.edge_adjacency,
                  "optional border adjacency CSV (edge_a,edge_b)");
  add_chain_flags(fit, o);
  fit->add_option("--out", o.out, "output directory")->required();
  fit->add_option("--format", o.format, "sample format: csv | bin");
  fit->add_option("--chains", o.chains, "independent chains (derived seeds)");
  fit->add_flag("--overwrite", o.overwrite, "reuse a non-empty output dir");
  fit->add_flag("--dump-precision", o.dump_precision,
                "dump the initial precision in matrix-market form");

  std::string scenario_path;
  CLI::App* simulate =
      app.add_subcommand("simulate", "generate a synthetic dataset");
  simulate->add_option("--scenario", scenario_path, "scenario file")->required();
  simulate->add_option("--seed", o.seed, "override the scenario seed");
  simulate->add_option("--out", o.out, "output directory")->required();
  simulate->add_flag("--overwrite", o.overwrite, "reuse a non-empty output dir");

  std::vector<std::string> scenario_paths;
  std::string models_csv = "global,adaptive";
  int replicates_override = 0;
  CLI::App* study = app.add_subcommand(
      "study", "scenario x replicate x model simulation study");
  study->add_option("--scenario", scenario_paths, "scenario file(s)")
      ->required();
  study->add_option("--models", models_csv,
                    "comma list of global|adaptive|adaptive-clustered");
  study->add_option("--replicates", replicates_override,
                    "override scenario replicate counts");
  add_chain_flags(study, o);
  study->add_option("--workers", o.workers, "parallel replicate workers");
  study->add_option("--out", o.out, "output directory")->required();
  study->add_flag("--overwrite", o.overwrite, "reuse a non-empty output dir");

  std::string run_dir, truth_path;
  CLI::App* summarize = app.add_subcommand(
      "summarize", "recompute reports from a persisted fit");
  summarize->add_option("--run", run_dir, "fit output directory")->required();
  summarize->add_option("--true-boundaries", truth_path,
                        "true boundary CSV for ROC export");
  summarize->add_option("--out", o.out, "output directory")->required();
  summarize->add_flag("--overwrite", o.overwrite,
                      "reuse a non-empty output dir");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) {
      apply_config(*fit, o);
      if (o.data.empty()) stcar::throw_schema("fit: --data is required");
      if (o.adjacency.empty())
        stcar::throw_schema("fit: --adjacency is required");
      return cmd_fit(o);
    }
    if (simulate->parsed()) {
      std::optional<std::uint64_t> seed_override;
      if (simulate->get_option("--seed")->count() > 0) seed_override = o.seed;
      return cmd_simulate(scenario_path, seed_override, o);
    }
    if (study->parsed()) {
      apply_config(*study, o);
      return cmd_study(scenario_paths, models_csv, replicates_override, o);
    }
    if (summarize->parsed())
      return cmd_summarize(run_dir, truth_path, o);
  } catch (const stcar::Error& ex) {
    std::cerr << "error[" << stcar::error_class_name(ex.error_class())
              << "]: " << ex.what() << "\n";
    return ex.exit_code();
  } catch (const std::exception& ex) {
    std::cerr << "error[internal]: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
