#include "stcar/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "stcar/error.hpp"
#include "stcar/rng.hpp"

namespace stcar {

double quantile(std::vector<double> x, double p) {
  if (x.empty()) throw_value("quantile: empty sample");
  std::sort(x.begin(), x.end());
  const double h = (x.size() - 1) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - lo) * (x[hi] - x[lo]);
}

BoundaryReport step_change_probs(const McmcSamples& samples,
                                 const EdgeSet& es) {
  if (!samples.has_w())
    throw_value("model has no estimated boundaries");
  if (es.count() != samples.n_edges)
    throw_value("edge set does not match the samples");
  BoundaryReport r;
  r.edges = es.edges;
  const int ne = samples.n_edges;
  r.mean_w.assign(ne, 0.0);
  r.p_ik.assign(ne, 0.0);
  for (int t = 0; t < samples.n_kept; ++t)
    for (int e = 0; e < ne; ++e) {
      const double w = samples.w[static_cast<std::size_t>(t) * ne + e];
      r.mean_w[e] += w;
      if (w < 0.5) r.p_ik[e] += 1.0;
    }
  for (int e = 0; e < ne; ++e) {
    r.mean_w[e] /= samples.n_kept;
    r.p_ik[e] /= samples.n_kept;
  }
  r.flag75.resize(ne);
  r.flag99.resize(ne);
  for (int e = 0; e < ne; ++e) {
    r.flag75[e] = r.p_ik[e] > 0.75 ? 1 : 0;
    r.flag99[e] = r.p_ik[e] > 0.99 ? 1 : 0;
  }
  return r;
}

std::vector<int> classify_boundaries(const BoundaryReport& report,
                                     double threshold) {
  if (!(threshold > 0.0) || !(threshold < 1.0))
    throw_value("classify_boundaries: threshold outside (0,1)");
  std::vector<int> out;
  for (int e = 0; e < report.count(); ++e)
    if (report.p_ik[e] > threshold) out.push_back(e);
  return out;
}

namespace {

double loglik_from_eta(const Dataset& d, std::span<const double> eta) {
  double total = 0.0;
  for (int c = 0; c < d.n_cells(); ++c) {
    if (std::abs(eta[c]) > 700.0)
      throw_numerical("dic: linear predictor overflow");
    total += d.counts[c] * (std::log(d.expected[c]) + eta[c]) -
             d.expected[c] * std::exp(eta[c]) -
             std::lgamma(d.counts[c] + 1.0);
  }
  return total;
}

}  // namespace

std::pair<double, double> dic_pd(const McmcSamples& samples,
                                 const Dataset& d) {
  if (samples.n_kept < 10) throw_value("dic: fewer than 10 retained draws");
  double dbar = 0.0;
  for (double dev : samples.deviance) dbar += dev;
  dbar /= samples.n_kept;

  // posterior mean of the linear predictor: eta is linear in (beta, phi)
  const int cells = samples.n_cells();
  const int p = samples.n_covariates;
  std::vector<double> beta_bar(p, 0.0);
  for (int t = 0; t < samples.n_kept; ++t)
    for (int r = 0; r < p; ++r)
      beta_bar[r] += samples.beta[static_cast<std::size_t>(t) * p + r];
  for (auto& b : beta_bar) b /= samples.n_kept;
  std::vector<double> eta_bar = linear_predictor(d, beta_bar);
  for (int c = 0; c < cells; ++c) {
    double phi_bar = 0.0;
    for (int t = 0; t < samples.n_kept; ++t)
      phi_bar += samples.phi[static_cast<std::size_t>(t) * cells + c];
    eta_bar[c] += phi_bar / samples.n_kept;
  }
  const double d_hat = -2.0 * loglik_from_eta(d, eta_bar);
  const double pd = dbar - d_hat;
  return {dbar + pd, pd};
}

FitReport summarize_fit(const McmcSamples& samples, const Dataset& d) {
  FitReport rep;
  const auto [dic, pd] = dic_pd(samples, d);
  rep.dic = dic;
  rep.pd = pd;
  double dbar = 0.0;
  for (double dev : samples.deviance) dbar += dev;
  rep.mean_deviance = dbar / samples.n_kept;

  auto summary = [](std::vector<double> draws) {
    ParamSummary s;
    s.median = quantile(draws, 0.5);
    s.lo95 = quantile(draws, 0.025);
    s.hi95 = quantile(std::move(draws), 0.975);
    return s;
  };
  const int p = samples.n_covariates;
  for (int r = 0; r < p; ++r) {
    std::vector<double> col(samples.n_kept);
    for (int t = 0; t < samples.n_kept; ++t)
      col[t] = samples.beta[static_cast<std::size_t>(t) * p + r];
    rep.params["beta" + std::to_string(r)] = summary(std::move(col));
  }
  rep.params["tau2"] = summary(samples.tau2);
  rep.params["alpha"] = summary(samples.alpha);
  if (!samples.zeta2.empty()) rep.params["zeta2"] = summary(samples.zeta2);
  if (!samples.rho.empty()) rep.params["rho"] = summary(samples.rho);

  // per-cell fitted risk exp(x'beta + phi), summarized by median and the
  // equal-tailed 95% interval
  const int cells = samples.n_cells();
  rep.risk_median.resize(cells);
  rep.risk_lo95.resize(cells);
  rep.risk_hi95.resize(cells);
  std::vector<double> draws(samples.n_kept);
  for (int c = 0; c < cells; ++c) {
    for (int t = 0; t < samples.n_kept; ++t) {
      double eta = samples.phi[static_cast<std::size_t>(t) * cells + c];
      for (int r = 0; r < p; ++r)
        eta += d.x_at(c, r) * samples.beta[static_cast<std::size_t>(t) * p + r];
      draws[t] = std::exp(eta);
    }
    rep.risk_median[c] = quantile(draws, 0.5);
    rep.risk_lo95[c] = quantile(draws, 0.025);
    rep.risk_hi95[c] = quantile(draws, 0.975);
  }
  for (const auto& [family, stats] : samples.acceptance)
    rep.acceptance_rates[family] = stats.rate();
  return rep;
}

double rmse(std::span<const double> fitted, std::span<const double> truth) {
  if (fitted.size() != truth.size() || fitted.empty())
    throw_value("rmse: shape mismatch");
  double s = 0.0;
  for (std::size_t c = 0; c < fitted.size(); ++c)
    s += (fitted[c] - truth[c]) * (fitted[c] - truth[c]);
  return std::sqrt(s / fitted.size());
}

double coverage95(const McmcSamples& samples, const Dataset& d,
                  std::span<const double> true_risk) {
  const int cells = samples.n_cells();
  if (static_cast<int>(true_risk.size()) != cells)
    throw_value("coverage: shape mismatch");
  const int p = samples.n_covariates;
  std::vector<double> draws(samples.n_kept);
  int covered = 0;
  for (int c = 0; c < cells; ++c) {
    for (int t = 0; t < samples.n_kept; ++t) {
      double eta = samples.phi[static_cast<std::size_t>(t) * cells + c];
      for (int r = 0; r < p; ++r)
        eta += d.x_at(c, r) * samples.beta[static_cast<std::size_t>(t) * p + r];
      draws[t] = std::exp(eta);
    }
    const double lo = quantile(draws, 0.025);
    const double hi = quantile(draws, 0.975);
    if (true_risk[c] >= lo && true_risk[c] <= hi) ++covered;
  }
  return static_cast<double>(covered) / cells;
}

RocCurve roc_auc(std::span<const double> mean_w,
                 const std::vector<char>& true_boundary) {
  if (mean_w.size() != true_boundary.size() || mean_w.empty())
    throw_value("roc: shape mismatch");
  int positives = 0, negatives = 0;
  for (char b : true_boundary) (b ? positives : negatives)++;
  if (positives == 0 || negatives == 0)
    throw_value("roc: need both boundary and non-boundary edges "
                "(report specificity for boundary-free scenarios)");
  RocCurve curve;
  for (int k = 0; k <= 100; ++k) {
    const double p_star = k / 100.0;
    int tp = 0, tn = 0;
    for (std::size_t e = 0; e < mean_w.size(); ++e) {
      const bool declared = mean_w[e] < p_star;
      if (true_boundary[e] && declared) ++tp;
      if (!true_boundary[e] && !declared) ++tn;
    }
    curve.threshold.push_back(p_star);
    curve.sensitivity.push_back(static_cast<double>(tp) / positives);
    curve.specificity.push_back(static_cast<double>(tn) / negatives);
  }
  // trapezoid over (FPR, TPR); both are nondecreasing along the sweep
  double auc = 0.0;
  for (std::size_t k = 0; k + 1 < curve.threshold.size(); ++k) {
    const double fpr0 = 1.0 - curve.specificity[k];
    const double fpr1 = 1.0 - curve.specificity[k + 1];
    auc += 0.5 * (curve.sensitivity[k] + curve.sensitivity[k + 1]) *
           (fpr1 - fpr0);
  }
  curve.auc = auc;
  return curve;
}

double specificity_at(std::span<const double> mean_w,
                      const std::vector<char>& true_boundary, double p_star) {
  if (mean_w.size() != true_boundary.size() || mean_w.empty())
    throw_value("specificity: shape mismatch");
  int tn = 0, negatives = 0;
  for (std::size_t e = 0; e < mean_w.size(); ++e) {
    if (true_boundary[e]) continue;
    ++negatives;
    if (!(mean_w[e] < p_star)) ++tn;
  }
  if (negatives == 0) throw_value("specificity: no non-boundary edges");
  return static_cast<double>(tn) / negatives;
}

std::pair<double, double> morans_i(std::span<const double> values,
                                   const AreaGraph& g, int n_perm,
                                   std::uint64_t seed) {
  const int n = g.n_areas;
  if (static_cast<int>(values.size()) != n)
    throw_value("morans_i: length mismatch");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  std::vector<double> z(values.begin(), values.end());
  for (auto& v : z) v -= mean;
  double z2 = 0.0;
  for (double v : z) z2 += v * v;
  if (z2 == 0.0) throw_value("morans_i: constant input");
  const double total_w = static_cast<double>(g.total_adjacency());

  auto stat = [&](const std::vector<double>& zz) {
    double cross = 0.0;
    for (int i = 0; i < n; ++i)
      for (int k : g.neighbors[i]) cross += zz[i] * zz[k];
    return (n / total_w) * (cross / z2);
  };
  const double observed = stat(z);
  if (n_perm <= 0) return {observed, 1.0};

  Rng rng(seed);
  int geq = 0;
  std::vector<double> zp(z);
  for (int t = 0; t < n_perm; ++t) {
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.raw() % (i + 1));
      std::swap(zp[i], zp[j]);
    }
    if (stat(zp) >= observed) ++geq;
  }
  return {observed, static_cast<double>(1 + geq) / (n_perm + 1)};
}

std::vector<double> sir(const Dataset& d) {
  std::vector<double> out(d.n_cells());
  for (int c = 0; c < d.n_cells(); ++c) out[c] = d.counts[c] / d.expected[c];
  return out;
}

std::vector<double> sir_time_mean(const Dataset& d) {
  const auto s = sir(d);
  std::vector<double> out(d.n_areas, 0.0);
  for (int j = 0; j < d.n_periods; ++j)
    for (int i = 0; i < d.n_areas; ++i)
      out[i] += s[static_cast<std::size_t>(j) * d.n_areas + i];
  for (auto& v : out) v /= d.n_periods;
  return out;
}

}  // namespace stcar
