#include "stcar/model.hpp"

#include <algorithm>
#include <cmath>

#include "stcar/error.hpp"

namespace stcar {

Dataset make_dataset(int n_areas, int n_periods, std::vector<double> counts,
                     std::vector<double> expected, std::vector<double> design,
                     int n_covariates, AreaGraph graph) {
  if (n_areas < 1 || n_periods < 1)
    throw_value("dataset: need at least one area and one period");
  if (graph.n_areas != n_areas)
    throw_schema("dataset: graph has " + std::to_string(graph.n_areas) +
                 " areas, data has " + std::to_string(n_areas));
  const std::size_t cells = static_cast<std::size_t>(n_areas) * n_periods;
  if (counts.size() != cells || expected.size() != cells)
    throw_schema("dataset: counts/expected length != N*T");
  if (design.size() != cells * static_cast<std::size_t>(n_covariates))
    throw_schema("dataset: design matrix size != N*T*p");
  for (std::size_t c = 0; c < cells; ++c) {
    if (!(expected[c] > 0.0))
      throw_value("dataset: expected count must be > 0 at cell " +
                  std::to_string(c));
    if (counts[c] < 0.0 || counts[c] != std::floor(counts[c]))
      throw_value("dataset: counts must be nonnegative integers (cell " +
                  std::to_string(c) + ")");
  }
  Dataset d;
  d.n_areas = n_areas;
  d.n_periods = n_periods;
  d.n_covariates = n_covariates;
  d.counts = std::move(counts);
  d.expected = std::move(expected);
  d.design = std::move(design);
  d.graph = std::move(graph);
  return d;
}

const char* variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::GlobalAR: return "global";
    case ModelVariant::AdaptiveIndependent: return "adaptive";
    case ModelVariant::AdaptiveClustered: return "adaptive-clustered";
  }
  return "?";
}

ModelVariant variant_from_name(const std::string& name) {
  if (name == "global") return ModelVariant::GlobalAR;
  if (name == "adaptive") return ModelVariant::AdaptiveIndependent;
  if (name == "adaptive-clustered") return ModelVariant::AdaptiveClustered;
  throw_value("unknown model variant '" + name +
              "' (expected global|adaptive|adaptive-clustered)");
}

void ModelSpec::validate() const {
  if (prior_var_beta <= 0.0) throw_value("prior_var_beta must be > 0");
  if (tau2_shape <= 0.0 || tau2_scale <= 0.0)
    throw_value("tau2 prior shape/scale must be > 0");
  if (zeta2_shape <= 0.0 || zeta2_scale <= 0.0)
    throw_value("zeta2 prior shape/scale must be > 0");
  if (epsilon <= 0.0) throw_value("epsilon must be > 0");
  if (v_bound <= 0.0) throw_value("v truncation bound must be > 0");
}

void ParameterState::sync_weights() {
  w_plus.resize(v_plus.size());
  for (std::size_t e = 0; e < v_plus.size(); ++e)
    w_plus[e] = logit_inv(v_plus[e]);
}

double logit(double w) {
  if (!(w > 0.0) || !(w < 1.0)) throw_value("logit: argument outside (0,1)");
  return std::log(w / (1.0 - w));
}

double logit_inv(double v) {
  if (!std::isfinite(v)) throw_value("logit_inv: non-finite argument");
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

double poisson_log_likelihood(const Dataset& d, std::span<const double> beta,
                              std::span<const double> phi,
                              bool include_lgamma) {
  const int cells = d.n_cells();
  if (static_cast<int>(phi.size()) != cells)
    throw_value("log_likelihood: phi length != N*T");
  if (static_cast<int>(beta.size()) != d.n_covariates)
    throw_value("log_likelihood: beta length != p");
  double total = 0.0;
  for (int c = 0; c < cells; ++c) {
    double eta = phi[c];
    for (int r = 0; r < d.n_covariates; ++r) eta += d.x_at(c, r) * beta[r];
    if (std::abs(eta) > 700.0)
      throw_numerical("log_likelihood: linear predictor overflow at cell " +
                      std::to_string(c));
    total += d.counts[c] * (std::log(d.expected[c]) + eta) -
             d.expected[c] * std::exp(eta);
    if (include_lgamma) total -= std::lgamma(d.counts[c] + 1.0);
  }
  return total;
}

std::vector<double> linear_predictor(const Dataset& d,
                                     std::span<const double> beta) {
  std::vector<double> eta(d.n_cells(), 0.0);
  for (int c = 0; c < d.n_cells(); ++c)
    for (int r = 0; r < d.n_covariates; ++r)
      eta[c] += d.x_at(c, r) * beta[r];
  return eta;
}

double boundary_prior_exponent(std::span<const double> v, double zeta2,
                               double rho, double mu, const EdgeGraph& eg) {
  if (static_cast<int>(v.size()) != eg.n_edges)
    throw_value("boundary prior: v length != edge count");
  if (zeta2 <= 0.0) throw_value("boundary prior: zeta2 must be > 0");
  if (rho < 0.0 || rho > 1.0) throw_value("boundary prior: rho outside [0,1]");
  double pair_term = 0.0;
  for (int e = 0; e < eg.n_edges; ++e)
    for (int f : eg.neighbors[e])
      if (f > e) pair_term += (v[e] - v[f]) * (v[e] - v[f]);
  double mean_term = 0.0;
  for (double ve : v) mean_term += (ve - mu) * (ve - mu);
  return -(rho * pair_term + (1.0 - rho) * mean_term) / (2.0 * zeta2);
}

SparseSymMatrix edge_precision(const EdgeGraph& eg, double rho, double eps) {
  // ridge scaled by rho: exact independence at rho = 0, ridged intrinsic
  // Laplacian at rho = 1
  return leroux_precision(eg.as_area_graph(), rho, rho * eps);
}

double boundary_prior_log_density(std::span<const double> v, double zeta2,
                                  double mu, const SparseSymMatrix& qe,
                                  const CholeskyFactor& f) {
  const int ne = qe.n;
  if (static_cast<int>(v.size()) != ne)
    throw_value("boundary prior: v length != edge count");
  std::vector<double> centered(v.begin(), v.end());
  for (auto& x : centered) x -= mu;
  constexpr double kLog2Pi = 1.8378770664093454836;
  return -0.5 * ne * (kLog2Pi + std::log(zeta2)) + 0.5 * f.log_det() -
         0.5 * qe.quad_form(centered) / zeta2;
}

double log_weight_prior_density(double w, double mu, double zeta) {
  const double v = logit(w);
  return -(v - mu) * (v - mu) / (2.0 * zeta * zeta) - std::log(w) -
         std::log1p(-w);
}

std::vector<std::pair<double, double>> weight_prior_curve(double mu,
                                                          double zeta,
                                                          int n_grid) {
  if (n_grid < 2) throw_value("weight_prior_curve: grid too small");
  std::vector<std::pair<double, double>> out;
  out.reserve(n_grid);
  double max_log = -1e300;
  for (int k = 1; k <= n_grid; ++k) {
    const double w = static_cast<double>(k) / (n_grid + 1);
    const double ld = log_weight_prior_density(w, mu, zeta);
    max_log = std::max(max_log, ld);
    out.emplace_back(w, ld);
  }
  for (auto& [w, d] : out) d = std::exp(d - max_log);
  return out;
}

double leroux_partial_correlation(int i, int k, double rho,
                                  const AreaGraph& g) {
  if (rho < 0.0 || rho > 1.0)
    throw_value("partial correlation: rho outside [0,1]");
  const double w = g.adjacent(i, k) ? 1.0 : 0.0;
  const double di = rho * g.degree(i) + (1.0 - rho);
  const double dk = rho * g.degree(k) + (1.0 - rho);
  return rho * w / std::sqrt(di * dk);
}

std::vector<double> expected_counts(std::span<const double> populations,
                                    int n_cells,
                                    std::span<const double> rates) {
  if (n_cells < 1) throw_value("expected_counts: need at least one cell");
  if (rates.empty()) throw_value("expected_counts: need at least one stratum");
  const std::size_t q = rates.size();
  if (populations.size() != static_cast<std::size_t>(n_cells) * q)
    throw_value("expected_counts: populations size != n_cells * strata");
  for (double r : rates)
    if (r < 0.0 || r > 1.0)
      throw_value("expected_counts: rate outside [0,1]");
  for (double p : populations)
    if (p < 0.0) throw_value("expected_counts: negative population");
  std::vector<double> e(n_cells, 0.0);
  for (int c = 0; c < n_cells; ++c) {
    for (std::size_t r = 0; r < q; ++r)
      e[c] += populations[c * q + r] * rates[r];
    if (!(e[c] > 0.0))
      throw_value("zero expected count at cell " + std::to_string(c));
  }
  return e;
}

}  // namespace stcar
