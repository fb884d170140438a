#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stcar/model.hpp"
#include "stcar/rng.hpp"
#include "stcar/sparse.hpp"

namespace stcar {

struct ProposalScales {
  double beta = 0.01;
  double phi = 1.0;  // multiplies the conditional prior sd of each cell
  double alpha = 0.05;
  double v = 0.5;
  double rho = 0.05;
};

struct ChainConfig {
  int n_sample = 10000;
  int burnin = 5000;
  int thin = 1;
  int v_block_size = 10;
  ProposalScales scales;
  int adapt_interval = 100;       // proposal adaptation window (burn-in only)
  double target_scalar = 0.44;    // target acceptance, scalar updates
  double target_block = 0.25;     // target acceptance, block updates
  std::uint64_t rng_seed = 1;
  bool check_stuck = true;  // abort on 0%/100% acceptance windows after burn-in

  int n_kept() const { return (n_sample - burnin) / thin; }
  void validate() const;
};

struct AcceptanceStats {
  long long attempts = 0;
  long long accepts = 0;
  double rate() const {
    return attempts == 0 ? 0.0 : static_cast<double>(accepts) / attempts;
  }
};

// Retained post-burn-in draws, one row per kept iteration.
struct McmcSamples {
  int n_kept = 0;
  int n_areas = 0, n_periods = 0, n_covariates = 0, n_edges = 0;
  ModelVariant variant = ModelVariant::AdaptiveIndependent;
  std::vector<double> beta;      // n_kept x p
  std::vector<double> tau2;      // n_kept
  std::vector<double> alpha;     // n_kept
  std::vector<double> zeta2;     // n_kept, adaptive variants only (else empty)
  std::vector<double> rho;       // n_kept, GlobalAR and AdaptiveClustered
  std::vector<double> w;         // n_kept x N_W, adaptive variants only
  std::vector<double> phi;       // n_kept x (N*T)
  std::vector<double> deviance;  // n_kept
  std::map<std::string, AcceptanceStats> acceptance;
  ProposalScales final_scales;

  bool has_w() const { return !w.empty(); }
  int n_cells() const { return n_areas * n_periods; }
};

// Metropolis-within-Gibbs kernel over (beta, phi, tau2, alpha, v blocks,
// zeta2, rho). One Chain owns all mutable state of one trajectory; nothing
// is shared between chains except the immutable dataset and graphs.
class Chain {
 public:
  Chain(const Dataset& d, const ModelSpec& spec, const ChainConfig& cfg,
        std::optional<EdgeGraph> edge_adjacency = std::nullopt);

  // one full kernel cycle in the fixed update order
  void sweep();
  McmcSamples run();

  const ParameterState& state() const { return state_; }
  const Dataset& data() const { return data_; }
  const EdgeSet& edge_set() const { return edges_; }
  const EdgeGraph& edge_graph() const { return edge_graph_; }
  const SparseSymMatrix& spatial_precision() const { return q_; }
  const CholeskyFactor& spatial_factor() const { return factor_; }
  const SparseSymMatrix& boundary_precision() const { return q_edge_; }

  // replaces the full parameter state and rebuilds every dependent structure
  void set_state(const ParameterState& s);
  // replaces the observed counts (Geweke-style successive-conditional tests)
  void replace_counts(std::vector<double> y);
  // test hook: replaces the Poisson likelihood in the beta update by an
  // arbitrary function of the full linear predictor
  void set_loglik_hook(std::function<double(std::span<const double>)> hook);

  // Incremental log acceptance ratios, exposed so tests can verify them
  // against full-joint recomputation. They leave the chain untouched.
  double beta_log_ratio(std::span<const double> proposal) const;
  double phi_cell_log_ratio(int area, int period, double proposal) const;
  double alpha_log_ratio(double proposal) const;
  double rho_log_ratio(double proposal) const;
  struct VBlockProposal {
    double log_ratio;
    bool in_bounds;
    SparseSymMatrix q;
    CholeskyFactor factor;
  };
  VBlockProposal v_block_log_ratio(std::span<const int> block,
                                   std::span<const double> v_proposal) const;

  // conjugate full-conditional (shape, scale) pairs of the variance draws
  std::pair<double, double> tau2_conditional() const;
  std::pair<double, double> zeta2_conditional() const;

  Rng& rng() { return rng_; }

 private:
  Dataset data_;
  ModelSpec spec_;
  ChainConfig cfg_;
  EdgeSet edges_;
  EdgeGraph edge_graph_;
  ParameterState state_;
  Rng rng_;

  SparseSymMatrix q_;       // current spatial precision
  CholeskyFactor factor_;   // current factor of q_
  SparseSymMatrix q_edge_;  // boundary prior precision (adaptive variants)
  CholeskyFactor factor_edge_;
  std::vector<double> eta_x_;  // X*beta, time-major
  // per-area (neighbor, value slot) view into q_, pattern-stable
  std::vector<std::vector<std::pair<int, int>>> rows_;
  std::function<double(std::span<const double>)> loglik_hook_;

  int effective_block_size_ = 10;
  ProposalScales scales_;
  std::map<std::string, AcceptanceStats> window_, total_;
  std::map<std::string, double> adapt_log_scale_;
  int adapt_step_ = 0;

  bool adaptive() const {
    return spec_.variant != ModelVariant::GlobalAR;
  }
  void rebuild_spatial();
  void rebuild_boundary();
  void rebuild_eta_x();
  double hooked_loglik(std::span<const double> beta) const;
  void update_beta();
  void update_phi();
  void update_tau2();
  void update_alpha();
  void update_v_blocks();
  void update_zeta2();
  void update_rho();
  void record(McmcSamples& out, int row);
  void adapt_scales();
  void check_stuck_window();
  void bump(const std::string& family, bool accepted);
};

// Fit entry point: deterministic function of (data, spec, config).
McmcSamples run_chain(const Dataset& d, const ModelSpec& spec,
                      const ChainConfig& cfg,
                      std::optional<EdgeGraph> edge_adjacency = std::nullopt);

}  // namespace stcar
