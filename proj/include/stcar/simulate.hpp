#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stcar/model.hpp"
#include "stcar/rng.hpp"
#include "stcar/sampler.hpp"

namespace stcar {

// inclusive cell ranges on the lattice carrying the elevated risk
struct HighBlock {
  int r0 = 0, r1 = 0, c0 = 0, c1 = 0;
};

// One simulation scenario: lattice geometry, elevated-risk level A over the
// high blocks, expected-count magnitude E, field and noise settings.
struct Scenario {
  int periods = 5;             // T
  double risk_ratio = 1.5;     // A
  double expected_size = 75.0; // E
  int nrow = 10, ncol = 10;
  std::vector<HighBlock> high_blocks;
  double noise_sd = 0.05;    // per-cell log-risk noise
  double field_tau2 = 0.05;  // variance of the shared smooth field
  double eps_sim = 1e-4;     // ridge of the generating precision
  int replicates = 5;
  std::uint64_t seed = 1;

  void validate() const;
  AreaGraph make_graph() const;
  std::vector<char> high_region() const;  // per-area indicator
};

// Table-style defaults: T=5, A=1.5, E=75 on a 10x10 lattice with two 3x3
// high blocks in opposite quadrants.
Scenario default_scenario();

struct TruthBundle {
  std::vector<double> risk;    // N*T, time-major
  std::vector<char> boundary;  // per canonical edge: true step change
};

// Draw from N(0, tau2 * Q(W, eps)^{-1}) with unit weights, then centre to
// mean zero (surrogate for the improper intrinsic field).
std::vector<double> sample_smooth_field(const AreaGraph& g, double tau2,
                                        double eps_sim, Rng& rng);

// One smooth field shared across periods, elevated by log(A) over the high
// region, plus iid per-cell noise. Boundaries are the cut edges of the
// high region.
TruthBundle make_true_risk(const Scenario& sc, const AreaGraph& g,
                           const EdgeSet& es, Rng& rng);

std::pair<Dataset, TruthBundle> generate_dataset(const Scenario& sc,
                                                 std::uint64_t seed);

struct ReplicateScore {
  bool ok = false;
  std::string error;
  double rmse = 0.0, dic = 0.0, pd = 0.0, coverage = 0.0;
  bool has_boundary_metric = false;
  bool boundary_metric_is_auc = true;
  double boundary_metric = 0.0;  // AUC, or specificity when no true boundaries
};

struct StudyRow {
  std::string scenario;
  std::string model;
  int n_ok = 0;
  double rmse_median = 0.0, rmse_q10 = 0.0;
  double dic_median = 0.0, dic_q10 = 0.0;
  double pd_median = 0.0, pd_q10 = 0.0;
  double coverage_median = 0.0, coverage_q10 = 0.0;
  bool has_boundary_metric = false;
  bool boundary_metric_is_auc = true;
  double boundary_median = 0.0, boundary_q10 = 0.0;
};

struct StudyReplicate {
  std::string scenario;
  std::string model;
  int replicate = 0;
  std::uint64_t data_seed = 0, chain_seed = 0;
  ReplicateScore score;
};

struct StudyResult {
  std::vector<StudyRow> rows;              // one per scenario x model
  std::vector<StudyReplicate> replicates;  // full detail for the manifest
};

struct NamedScenario {
  std::string name;
  Scenario scenario;
};

// deterministic seeds per replicate and model
std::uint64_t replicate_data_seed(const Scenario& sc, int replicate);
std::uint64_t replicate_chain_seed(const Scenario& sc, int replicate,
                                   int model_index);

// Score a single fitted replicate against the truth.
ReplicateScore score_fit(const McmcSamples& samples, const Dataset& d,
                         const TruthBundle& truth, const EdgeSet& es);

// Full scenario x replicate x model sweep. Failures are recorded and
// excluded from aggregation, never fatal. Replicates run across n_workers
// threads; output is a pure function of the inputs.
StudyResult run_study(const std::vector<NamedScenario>& scenarios,
                      const std::vector<ModelVariant>& models,
                      const ChainConfig& base_cfg, int n_workers = 1);

}  // namespace stcar
