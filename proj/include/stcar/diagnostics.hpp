#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stcar/model.hpp"
#include "stcar/sampler.hpp"

namespace stcar {

// Per-border posterior summary of the boundary weights: the posterior mean
// of w, the step-change probability P(w < 0.5 | Y), and threshold flags.
struct BoundaryReport {
  std::vector<std::pair<int, int>> edges;
  std::vector<double> mean_w;
  std::vector<double> p_ik;
  std::vector<char> flag75, flag99;

  int count() const { return static_cast<int>(edges.size()); }
};

BoundaryReport step_change_probs(const McmcSamples& samples,
                                 const EdgeSet& es);

// indices of edges with p_ik strictly above the threshold
std::vector<int> classify_boundaries(const BoundaryReport& report,
                                     double threshold);

struct ParamSummary {
  double median = 0.0, lo95 = 0.0, hi95 = 0.0;
};

struct FitReport {
  double dic = 0.0, pd = 0.0, mean_deviance = 0.0;
  // keyed "beta0", ..., "tau2", "alpha", "zeta2", "rho" as present
  std::map<std::string, ParamSummary> params;
  std::vector<double> risk_median, risk_lo95, risk_hi95;  // per cell
  std::map<std::string, double> acceptance_rates;
};

// deviance-based fit measures; pD uses the deviance at the posterior mean
// of the linear predictor
std::pair<double, double> dic_pd(const McmcSamples& samples, const Dataset& d);

FitReport summarize_fit(const McmcSamples& samples, const Dataset& d);

double rmse(std::span<const double> fitted, std::span<const double> truth);

// fraction of cells whose equal-tailed 95% risk interval covers the truth
double coverage95(const McmcSamples& samples, const Dataset& d,
                  std::span<const double> true_risk);

struct RocCurve {
  std::vector<double> threshold, sensitivity, specificity;
  double auc = 0.0;
};

// Sweep p* over {0, 0.01, ..., 1}; an edge is declared a step change when
// its posterior mean weight is below p*. Requires both classes present.
RocCurve roc_auc(std::span<const double> mean_w,
                 const std::vector<char>& true_boundary);

// specificity of the single-threshold rule (declare when mean weight < p*),
// for scenarios without true boundaries
double specificity_at(std::span<const double> mean_w,
                      const std::vector<char>& true_boundary, double p_star);

// Moran's I with a one-sided (greater) permutation p-value
std::pair<double, double> morans_i(std::span<const double> values,
                                   const AreaGraph& g, int n_perm,
                                   std::uint64_t seed);

// standardized incidence ratios Y/E per cell, time-major
std::vector<double> sir(const Dataset& d);
// across-time mean SIR per area
std::vector<double> sir_time_mean(const Dataset& d);

// shared helpers
double quantile(std::vector<double> sorted_or_not, double p);

}  // namespace stcar
