#include "stcar/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <thread>

#include "stcar/diagnostics.hpp"
#include "stcar/error.hpp"

namespace stcar {

void Scenario::validate() const {
  if (periods < 1) throw_value("scenario: T must be >= 1");
  if (risk_ratio < 1.0) throw_value("scenario: A must be >= 1");
  if (!(expected_size > 0.0)) throw_value("scenario: E must be > 0");
  if (nrow < 2 || ncol < 2) throw_value("scenario: lattice must be >= 2x2");
  if (noise_sd < 0.0) throw_value("scenario: noise_sd must be >= 0");
  if (field_tau2 < 0.0) throw_value("scenario: field_tau2 must be >= 0");
  if (!(eps_sim > 0.0)) throw_value("scenario: eps_sim must be > 0");
  if (replicates < 1) throw_value("scenario: replicates must be >= 1");
  for (const auto& b : high_blocks)
    if (b.r0 < 0 || b.c0 < 0 || b.r0 > b.r1 || b.c0 > b.c1 || b.r1 >= nrow ||
        b.c1 >= ncol)
      throw_value("scenario: high block outside the lattice");
  if (risk_ratio > 1.0 && high_blocks.empty())
    throw_value("scenario: A > 1 requires a nonempty high region");
}

AreaGraph Scenario::make_graph() const { return build_lattice(nrow, ncol); }

std::vector<char> Scenario::high_region() const {
  std::vector<char> high(static_cast<std::size_t>(nrow) * ncol, 0);
  if (risk_ratio == 1.0) return high;  // no step changes in the A=1 scenario
  for (const auto& b : high_blocks)
    for (int r = b.r0; r <= b.r1; ++r)
      for (int c = b.c0; c <= b.c1; ++c) high[r * ncol + c] = 1;
  return high;
}

Scenario default_scenario() {
  Scenario sc;
  sc.high_blocks = {{1, 3, 1, 3}, {6, 8, 6, 8}};
  return sc;
}

std::vector<double> sample_smooth_field(const AreaGraph& g, double tau2,
                                        double eps_sim, Rng& rng) {
  const int n = g.n_areas;
  std::vector<double> z(n);
  for (auto& v : z) v = rng.normal();
  if (tau2 == 0.0) return std::vector<double>(n, 0.0);
  const SparseSymMatrix q = leroux_precision(g, 1.0, eps_sim);
  const CholeskyFactor f = factorize(q);
  std::vector<double> x = f.unwhiten(z);
  const double sd = std::sqrt(tau2);
  double mean = 0.0;
  for (auto& v : x) {
    v *= sd;
    mean += v;
  }
  mean /= n;
  for (auto& v : x) v -= mean;
  return x;
}

TruthBundle make_true_risk(const Scenario& sc, const AreaGraph& g,
                           const EdgeSet& es, Rng& rng) {
  const int n = g.n_areas, T = sc.periods;
  const std::vector<char> high = sc.high_region();
  const std::vector<double> field =
      sample_smooth_field(g, sc.field_tau2, sc.eps_sim, rng);
  const double step = std::log(sc.risk_ratio);
  TruthBundle truth;
  truth.risk.resize(static_cast<std::size_t>(n) * T);
  for (int j = 0; j < T; ++j)
    for (int i = 0; i < n; ++i) {
      const double noise = sc.noise_sd > 0.0 ? sc.noise_sd * rng.normal() : 0.0;
      truth.risk[static_cast<std::size_t>(j) * n + i] =
          std::exp(field[i] + step * (high[i] ? 1.0 : 0.0) + noise);
    }
  truth.boundary.resize(es.count());
  for (int e = 0; e < es.count(); ++e) {
    const auto [i, k] = es.edges[e];
    truth.boundary[e] = (high[i] != high[k]) ? 1 : 0;
  }
  return truth;
}

std::pair<Dataset, TruthBundle> generate_dataset(const Scenario& sc,
                                                 std::uint64_t seed) {
  sc.validate();
  AreaGraph g = sc.make_graph();
  const EdgeSet es = build_edge_set(g);
  Rng rng(seed);
  TruthBundle truth = make_true_risk(sc, g, es, rng);
  const int cells = g.n_areas * sc.periods;
  std::vector<double> y(cells), e(cells, sc.expected_size);
  for (int c = 0; c < cells; ++c)
    y[c] = static_cast<double>(rng.poisson(sc.expected_size * truth.risk[c]));
  Dataset d = make_dataset(g.n_areas, sc.periods, std::move(y), std::move(e),
                           {}, 0, std::move(g));
  return {std::move(d), std::move(truth)};
}

std::uint64_t replicate_data_seed(const Scenario& sc, int replicate) {
  return derive_seed(sc.seed, static_cast<std::uint64_t>(replicate));
}

std::uint64_t replicate_chain_seed(const Scenario& sc, int replicate,
                                   int model_index) {
  return derive_seed(replicate_data_seed(sc, replicate),
                     1000 + static_cast<std::uint64_t>(model_index));
}

ReplicateScore score_fit(const McmcSamples& samples, const Dataset& d,
                         const TruthBundle& truth, const EdgeSet& es) {
  ReplicateScore score;
  const FitReport rep = summarize_fit(samples, d);
  score.rmse = rmse(rep.risk_median, truth.risk);
  score.dic = rep.dic;
  score.pd = rep.pd;
  score.coverage = coverage95(samples, d, truth.risk);
  if (samples.has_w()) {
    const BoundaryReport br = step_change_probs(samples, es);
    const bool any_true =
        std::find(truth.boundary.begin(), truth.boundary.end(), char(1)) !=
        truth.boundary.end();
    score.has_boundary_metric = true;
    if (any_true) {
      score.boundary_metric_is_auc = true;
      score.boundary_metric = roc_auc(br.mean_w, truth.boundary).auc;
    } else {
      score.boundary_metric_is_auc = false;
      score.boundary_metric = specificity_at(br.mean_w, truth.boundary, 0.5);
    }
  }
  score.ok = true;
  return score;
}

namespace {

struct Task {
  int scenario_index;
  int replicate;
};

}  // namespace

StudyResult run_study(const std::vector<NamedScenario>& scenarios,
                      const std::vector<ModelVariant>& models,
                      const ChainConfig& base_cfg, int n_workers) {
  if (scenarios.empty() || models.empty())
    throw_value("run_study: need at least one scenario and one model");
  for (const auto& ns : scenarios) ns.scenario.validate();

  std::vector<Task> tasks;
  for (int s = 0; s < static_cast<int>(scenarios.size()); ++s)
    for (int r = 0; r < scenarios[s].scenario.replicates; ++r)
      tasks.push_back({s, r});

  // slot per (task, model), deterministic regardless of scheduling
  const int n_models = static_cast<int>(models.size());
  std::vector<StudyReplicate> detail(tasks.size() * n_models);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const Task& task = tasks[t];
      const NamedScenario& ns = scenarios[task.scenario_index];
      const std::uint64_t dseed = replicate_data_seed(ns.scenario, task.replicate);
      Dataset d;
      TruthBundle truth;
      bool data_ok = true;
      std::string data_err;
      try {
        auto pair = generate_dataset(ns.scenario, dseed);
        d = std::move(pair.first);
        truth = std::move(pair.second);
      } catch (const std::exception& ex) {
        data_ok = false;
        data_err = ex.what();
      }
      const EdgeSet es = data_ok ? build_edge_set(d.graph) : EdgeSet{};
      for (int m = 0; m < n_models; ++m) {
        StudyReplicate& out = detail[t * n_models + m];
        out.scenario = ns.name;
        out.model = variant_name(models[m]);
        out.replicate = task.replicate;
        out.data_seed = dseed;
        out.chain_seed = replicate_chain_seed(ns.scenario, task.replicate, m);
        if (!data_ok) {
          out.score.ok = false;
          out.score.error = data_err;
          continue;
        }
        try {
          ModelSpec spec;
          spec.variant = models[m];
          ChainConfig cfg = base_cfg;
          cfg.rng_seed = out.chain_seed;
          const McmcSamples samples = run_chain(d, spec, cfg);
          out.score = score_fit(samples, d, truth, es);
        } catch (const std::exception& ex) {
          out.score.ok = false;
          out.score.error = ex.what();
        }
      }
    }
  };

  const int workers = std::max(
      1, std::min<int>(n_workers, static_cast<int>(tasks.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  StudyResult result;
  result.replicates = std::move(detail);
  for (const auto& rep : result.replicates)
    if (!rep.score.ok)
      std::cerr << "warning: replicate " << rep.replicate << " of scenario '"
                << rep.scenario << "' model '" << rep.model
                << "' failed: " << rep.score.error << "\n";

  for (const auto& ns : scenarios)
    for (int m = 0; m < n_models; ++m) {
      StudyRow row;
      row.scenario = ns.name;
      row.model = variant_name(models[m]);
      std::vector<double> v_rmse, v_dic, v_pd, v_cov, v_bnd;
      bool metric_is_auc = true, has_metric = false;
      for (const auto& rep : result.replicates) {
        if (rep.scenario != ns.name || rep.model != row.model ||
            !rep.score.ok)
          continue;
        v_rmse.push_back(rep.score.rmse);
        v_dic.push_back(rep.score.dic);
        v_pd.push_back(rep.score.pd);
        v_cov.push_back(rep.score.coverage);
        if (rep.score.has_boundary_metric) {
          has_metric = true;
          metric_is_auc = rep.score.boundary_metric_is_auc;
          v_bnd.push_back(rep.score.boundary_metric);
        }
      }
      row.n_ok = static_cast<int>(v_rmse.size());
      if (row.n_ok > 0) {
        row.rmse_median = quantile(v_rmse, 0.5);
        row.rmse_q10 = quantile(v_rmse, 0.10);
        row.dic_median = quantile(v_dic, 0.5);
        row.dic_q10 = quantile(v_dic, 0.10);
        row.pd_median = quantile(v_pd, 0.5);
        row.pd_q10 = quantile(v_pd, 0.10);
        row.coverage_median = quantile(v_cov, 0.5);
        row.coverage_q10 = quantile(v_cov, 0.10);
        if (has_metric) {
          row.has_boundary_metric = true;
          row.boundary_metric_is_auc = metric_is_auc;
          row.boundary_median = quantile(v_bnd, 0.5);
          row.boundary_q10 = quantile(v_bnd, 0.10);
        }
      }
      result.rows.push_back(std::move(row));
    }
  return result;
}

}  // namespace stcar
