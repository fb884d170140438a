#pragma once

#include <span>
#include <string>
#include <vector>

#include "stcar/graph.hpp"
#include "stcar/sparse.hpp"

namespace stcar {

// Count panel over N areas and T periods plus the adjacency graph. All
// N*T-length fields (counts, offsets, design rows, random effects) are
// time-major: cell (area i, period j) sits at index j*N + i.
struct Dataset {
  int n_areas = 0;
  int n_periods = 0;
  int n_covariates = 0;
  std::vector<double> counts;    // Y, nonnegative integers
  std::vector<double> expected;  // E, strictly positive
  std::vector<double> design;    // X, (N*T) x p row-major; empty when p = 0
  AreaGraph graph;

  int n_cells() const { return n_areas * n_periods; }
  double x_at(int cell, int r) const {
    return design[static_cast<std::size_t>(cell) * n_covariates + r];
  }
};

Dataset make_dataset(int n_areas, int n_periods, std::vector<double> counts,
                     std::vector<double> expected, std::vector<double> design,
                     int n_covariates, AreaGraph graph);

enum class ModelVariant {
  GlobalAR,             // binary W, Leroux spatial precision, rho estimated
  AdaptiveIndependent,  // estimated W, independent boundary prior (rho = 0)
  AdaptiveClustered,    // estimated W, clustered boundary prior (rho estimated)
};

const char* variant_name(ModelVariant v);
ModelVariant variant_from_name(const std::string& name);

struct ModelSpec {
  ModelVariant variant = ModelVariant::AdaptiveIndependent;
  double prior_var_beta = 10000.0;
  double tau2_shape = 0.001, tau2_scale = 0.001;
  double zeta2_shape = 0.001, zeta2_scale = 0.001;
  double mu = 15.0;        // prior mean of the logit boundary weights
  double epsilon = 1e-7;   // diagonal ridge keeping precisions invertible
  double v_bound = 15.0;   // truncation of the logit weights

  void validate() const;
};

// Full parameter vector of one chain. w_plus is the elementwise inverse
// logit of v_plus and is kept in lockstep via sync_weights().
struct ParameterState {
  std::vector<double> beta;
  std::vector<double> phi;  // time-major N*T
  double tau2 = 1.0;
  double alpha = 0.5;
  std::vector<double> v_plus;
  std::vector<double> w_plus;
  double zeta2 = 10.0;
  double rho = 0.0;  // GlobalAR: Leroux spatial rho; AdaptiveClustered: Eq-prior rho
  double mu = 15.0;

  void sync_weights();
};

double logit(double w);
double logit_inv(double v);

// Poisson log-likelihood sum_ij [ Y*(log E + eta) - E*exp(eta) - log(Y!) ]
// with eta = x'beta + phi. The log-factorial constant can be dropped for
// ratio-only uses; it is included by default so deviances are exact.
double poisson_log_likelihood(const Dataset& d, std::span<const double> beta,
                              std::span<const double> phi,
                              bool include_lgamma = true);

// eta = X beta (no random effects), time-major
std::vector<double> linear_predictor(const Dataset& d,
                                     std::span<const double> beta);

// Boundary-weight prior exponent:
//   -(1/2 zeta2) [ rho * sum_{adjacent borders}(v_a - v_b)^2
//                  + (1-rho) * sum (v_e - mu)^2 ]
double boundary_prior_exponent(std::span<const double> v, double zeta2,
                               double rho, double mu, const EdgeGraph& eg);

// Leroux precision over the border graph with the ridge folded in; this is
// the precision actually used by the sampler so rho and zeta2 updates have a
// proper density to work against.
SparseSymMatrix edge_precision(const EdgeGraph& eg, double rho, double eps);

// Normalized Gaussian log-density of v with precision Qe/zeta2 and mean mu.
double boundary_prior_log_density(std::span<const double> v, double zeta2,
                                  double mu, const SparseSymMatrix& qe,
                                  const CholeskyFactor& f);

// Induced prior density of a boundary weight w under the logit-normal
// transform, up to a constant: exp(-(logit(w)-mu)^2/(2 zeta^2)) / (w(1-w)).
double log_weight_prior_density(double w, double mu, double zeta);

// Density curve over an even interior grid, scaled to max 1 for plotting.
std::vector<std::pair<double, double>> weight_prior_curve(double mu,
                                                          double zeta,
                                                          int n_grid);

// rho*w_ik / sqrt((rho*deg_i + 1-rho)(rho*deg_k + 1-rho)) for the binary
// graph; the theoretical partial autocorrelation of the Leroux field.
double leroux_partial_correlation(int i, int k, double rho,
                                  const AreaGraph& g);

// Indirect standardization: E_cell = sum_r population[cell][r] * rate[r].
// populations is n_cells x q row-major. A zero expected value is an error.
std::vector<double> expected_counts(std::span<const double> populations,
                                    int n_cells,
                                    std::span<const double> rates);

}  // namespace stcar
