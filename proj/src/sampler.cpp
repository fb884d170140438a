#include "stcar/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stcar/error.hpp"

namespace stcar {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kAlphaMax = 1.0 - 1e-9;  // keep alpha inside [0,1)

double reflect(double x, double lo, double hi) {
  while (x < lo || x > hi) {
    if (x < lo) x = 2.0 * lo - x;
    if (x > hi) x = 2.0 * hi - x;
  }
  return x;
}

double sample_variance(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  double m = 0.0;
  for (double v : x) m += v;
  m /= x.size();
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / (x.size() - 1);
}

}  // namespace

void ChainConfig::validate() const {
  if (n_sample <= 0) throw_value("chain: n_sample must be > 0");
  if (burnin < 0 || burnin >= n_sample)
    throw_value("chain: burnin must lie in [0, n_sample)");
  if (thin < 1) throw_value("chain: thin must be >= 1");
  if (n_kept() < 10)
    throw_value("chain: (n_sample - burnin)/thin must leave >= 10 draws");
  if (v_block_size < 1) throw_value("chain: v_block_size must be >= 1");
  if (adapt_interval < 1) throw_value("chain: adapt_interval must be >= 1");
}

Chain::Chain(const Dataset& d, const ModelSpec& spec, const ChainConfig& cfg,
             std::optional<EdgeGraph> edge_adjacency)
    : data_(d), spec_(spec), cfg_(cfg), rng_(cfg.rng_seed) {
  spec_.validate();
  cfg_.validate();
  edges_ = build_edge_set(data_.graph);
  edge_graph_ = edge_adjacency ? std::move(*edge_adjacency)
                               : build_edge_graph(edges_);
  if (edge_graph_.n_edges != edges_.count())
    throw_value("chain: edge adjacency covers " +
                std::to_string(edge_graph_.n_edges) + " edges, graph has " +
                std::to_string(edges_.count()));
  effective_block_size_ = std::min(cfg_.v_block_size, edges_.count());
  scales_ = cfg_.scales;

  // deterministic data-driven start
  const int cells = data_.n_cells();
  ParameterState s;
  s.beta.assign(data_.n_covariates, 0.0);
  s.phi.resize(cells);
  for (int c = 0; c < cells; ++c) {
    const double ratio = (data_.counts[c] + 0.5) / data_.expected[c];
    s.phi[c] = std::clamp(std::log(ratio), -10.0, 10.0);
  }
  s.tau2 = std::max(0.01, sample_variance(s.phi));
  s.alpha = 0.5;
  s.mu = spec_.mu;
  s.zeta2 = 10.0;
  if (adaptive()) {
    // Weights start at the logit origin (w = 0.5), where the likelihood is
    // most responsive in v, so the data can sort each border early. Near
    // the truncation bound dw/dv vanishes and the boundary weights freeze.
    s.v_plus.assign(edges_.count(), 0.0);
    // zeta2 consistent with that spread, so the prior starts loose instead
    // of clamping every v to mu
    s.zeta2 = std::max(1.0, spec_.mu * spec_.mu);
    s.rho = (spec_.variant == ModelVariant::AdaptiveClustered) ? 0.5 : 0.0;
  } else {
    s.rho = 0.5;  // Leroux spatial rho
  }
  s.sync_weights();
  set_state(s);
}

void Chain::set_state(const ParameterState& s) {
  if (static_cast<int>(s.beta.size()) != data_.n_covariates)
    throw_value("set_state: beta length != p");
  if (static_cast<int>(s.phi.size()) != data_.n_cells())
    throw_value("set_state: phi length != N*T");
  if (adaptive() && static_cast<int>(s.v_plus.size()) != edges_.count())
    throw_value("set_state: v length != edge count");
  state_ = s;
  state_.sync_weights();
  rebuild_spatial();
  rebuild_boundary();
  rebuild_eta_x();
}

void Chain::replace_counts(std::vector<double> y) {
  if (y.size() != data_.counts.size())
    throw_value("replace_counts: length mismatch");
  data_.counts = std::move(y);
}

void Chain::set_loglik_hook(
    std::function<double(std::span<const double>)> hook) {
  loglik_hook_ = std::move(hook);
}

void Chain::rebuild_spatial() {
  if (adaptive())
    q_ = adaptive_precision(data_.graph, edges_, state_.w_plus, spec_.epsilon);
  else
    q_ = leroux_precision(data_.graph, state_.rho, state_.rho * spec_.epsilon);
  factor_ = factorize(q_);
  rows_.assign(data_.n_areas, {});
  for (int c = 0; c < q_.n; ++c)
    for (int t = q_.colptr[c]; t < q_.colptr[c + 1]; ++t) {
      rows_[q_.rowind[t]].emplace_back(c, t);
      rows_[c].emplace_back(q_.rowind[t], t);
    }
}

void Chain::rebuild_boundary() {
  if (!adaptive()) return;
  const double rho_edge =
      (spec_.variant == ModelVariant::AdaptiveClustered) ? state_.rho : 0.0;
  q_edge_ = edge_precision(edge_graph_, rho_edge, spec_.epsilon);
  factor_edge_ = factorize(q_edge_);
}

void Chain::rebuild_eta_x() { eta_x_ = linear_predictor(data_, state_.beta); }

double Chain::hooked_loglik(std::span<const double> beta) const {
  std::vector<double> eta = linear_predictor(data_, beta);
  for (int c = 0; c < data_.n_cells(); ++c) eta[c] += state_.phi[c];
  if (loglik_hook_) return loglik_hook_(eta);
  double total = 0.0;
  for (int c = 0; c < data_.n_cells(); ++c) {
    if (std::abs(eta[c]) > 700.0) return kNegInf;
    total += data_.counts[c] * eta[c] - data_.expected[c] * std::exp(eta[c]);
  }
  return total;
}

double Chain::beta_log_ratio(std::span<const double> proposal) const {
  const double like = hooked_loglik(proposal) - hooked_loglik(state_.beta);
  double prior = 0.0;
  for (int r = 0; r < data_.n_covariates; ++r)
    prior += (state_.beta[r] * state_.beta[r] -
              proposal[r] * proposal[r]) /
             (2.0 * spec_.prior_var_beta);
  return like + prior;
}

double Chain::phi_cell_log_ratio(int area, int period, double proposal) const {
  const int n = data_.n_areas;
  const int cell = period * n + area;
  const TemporalPrecision z = ar1_precision(state_.alpha, data_.n_periods);
  const double di = q_.diag[area];
  const double zjj = z.diag(period);

  // (P phi)_cell restricted to the nonzero Kronecker slices j-1, j, j+1
  double s = 0.0;
  for (int l = std::max(0, period - 1);
       l <= std::min(data_.n_periods - 1, period + 1); ++l) {
    const double zjl = (l == period) ? zjj : z.offdiag();
    double qphi = di * state_.phi[static_cast<std::size_t>(l) * n + area];
    for (const auto& [k, slot] : rows_[area])
      qphi += q_.values[slot] * state_.phi[static_cast<std::size_t>(l) * n + k];
    s += zjl * qphi;
  }
  const double cond_prec = zjj * di / state_.tau2;
  const double cond_mean = state_.phi[cell] - s / (zjj * di);

  const double eta_new = eta_x_[cell] + proposal;
  if (std::abs(eta_new) > 700.0) return kNegInf;
  const double cur = state_.phi[cell];
  const double like =
      data_.counts[cell] * (proposal - cur) -
      data_.expected[cell] * std::exp(eta_x_[cell]) *
          (std::exp(proposal) - std::exp(cur));
  const double prior =
      -0.5 * cond_prec * ((proposal - cond_mean) * (proposal - cond_mean) -
                          (cur - cond_mean) * (cur - cond_mean));
  return like + prior;
}

double Chain::alpha_log_ratio(double proposal) const {
  const TemporalPrecision z_cur = ar1_precision(state_.alpha, data_.n_periods);
  const TemporalPrecision z_new = ar1_precision(proposal, data_.n_periods);
  const double quad_cur = st_quad_form(state_.phi, z_cur, q_);
  const double quad_new = st_quad_form(state_.phi, z_new, q_);
  // |Z| = 1 for both, so only the quadratic form moves
  return -(quad_new - quad_cur) / (2.0 * state_.tau2);
}

double Chain::rho_log_ratio(double proposal) const {
  if (proposal < 0.0 || proposal > 1.0) return kNegInf;
  if (spec_.variant == ModelVariant::GlobalAR) {
    const SparseSymMatrix q_new =
        leroux_precision(data_.graph, proposal, proposal * spec_.epsilon);
    const CholeskyFactor f_new = refactorize_full(factor_, q_new);
    const TemporalPrecision z = ar1_precision(state_.alpha, data_.n_periods);
    const double dquad =
        st_quad_form(state_.phi, z, q_new) - st_quad_form(state_.phi, z, q_);
    return 0.5 * data_.n_periods * (f_new.log_det() - factor_.log_det()) -
           dquad / (2.0 * state_.tau2);
  }
  if (spec_.variant == ModelVariant::AdaptiveClustered) {
    const SparseSymMatrix qe_new =
        edge_precision(edge_graph_, proposal, spec_.epsilon);
    const CholeskyFactor fe_new = refactorize_full(factor_edge_, qe_new);
    std::vector<double> centered(state_.v_plus);
    for (auto& x : centered) x -= state_.mu;
    const double dquad =
        qe_new.quad_form(centered) - q_edge_.quad_form(centered);
    return 0.5 * (fe_new.log_det() - factor_edge_.log_det()) -
           dquad / (2.0 * state_.zeta2);
  }
  throw_value("rho update is not defined for the independent adaptive model");
}

Chain::VBlockProposal Chain::v_block_log_ratio(
    std::span<const int> block, std::span<const double> v_proposal) const {
  VBlockProposal out{kNegInf, true, {}, {}};
  for (double v : v_proposal)
    if (std::abs(v) > spec_.v_bound) {
      out.in_bounds = false;
      return out;
    }
  std::vector<double> w_new(state_.w_plus);
  std::vector<double> v_new(state_.v_plus);
  std::vector<std::pair<int, int>> changed;
  changed.reserve(block.size());
  for (std::size_t b = 0; b < block.size(); ++b) {
    const int e = block[b];
    v_new[e] = v_proposal[b];
    w_new[e] = logit_inv(v_proposal[b]);
    changed.push_back(edges_.edges[e]);
  }
  out.q = adaptive_precision(data_.graph, edges_, w_new, spec_.epsilon);
  out.factor = refactorize_edges(factor_, out.q, changed);

  const TemporalPrecision z = ar1_precision(state_.alpha, data_.n_periods);
  const double dquad =
      st_quad_form(state_.phi, z, out.q) - st_quad_form(state_.phi, z, q_);
  const double dlogdet = out.factor.log_det() - factor_.log_det();

  std::vector<double> c_new(v_new), c_cur(state_.v_plus);
  for (auto& x : c_new) x -= state_.mu;
  for (auto& x : c_cur) x -= state_.mu;
  const double dprior = -(q_edge_.quad_form(c_new) - q_edge_.quad_form(c_cur)) /
                        (2.0 * state_.zeta2);

  out.log_ratio = 0.5 * data_.n_periods * dlogdet -
                  dquad / (2.0 * state_.tau2) + dprior;
  return out;
}

std::pair<double, double> Chain::tau2_conditional() const {
  const TemporalPrecision z = ar1_precision(state_.alpha, data_.n_periods);
  const double quad = st_quad_form(state_.phi, z, q_);
  return {spec_.tau2_shape + 0.5 * data_.n_cells(),
          spec_.tau2_scale + 0.5 * quad};
}

std::pair<double, double> Chain::zeta2_conditional() const {
  std::vector<double> centered(state_.v_plus);
  for (auto& x : centered) x -= state_.mu;
  return {spec_.zeta2_shape + 0.5 * edges_.count(),
          spec_.zeta2_scale + 0.5 * q_edge_.quad_form(centered)};
}

void Chain::bump(const std::string& family, bool accepted) {
  auto& w = window_[family];
  ++w.attempts;
  auto& t = total_[family];
  ++t.attempts;
  if (accepted) {
    ++w.accepts;
    ++t.accepts;
  }
}

void Chain::update_beta() {
  if (data_.n_covariates == 0 || scales_.beta <= 0.0) return;
  std::vector<double> prop(state_.beta);
  for (auto& b : prop) b += scales_.beta * rng_.normal();
  const double ratio = beta_log_ratio(prop);
  const bool accept = std::log(rng_.uniform()) < ratio;
  if (accept) {
    state_.beta = std::move(prop);
    rebuild_eta_x();
  }
  bump("beta", accept);
}

void Chain::update_phi() {
  if (scales_.phi <= 0.0) return;
  const TemporalPrecision z = ar1_precision(state_.alpha, data_.n_periods);
  const int n = data_.n_areas;
  for (int j = 0; j < data_.n_periods; ++j)
    for (int i = 0; i < n; ++i) {
      const double cond_sd =
          std::sqrt(state_.tau2 / (z.diag(j) * q_.diag[i]));
      const double prop =
          state_.phi[static_cast<std::size_t>(j) * n + i] +
          scales_.phi * cond_sd * rng_.normal();
      const double ratio = phi_cell_log_ratio(i, j, prop);
      const bool accept = std::log(rng_.uniform()) < ratio;
      if (accept) state_.phi[static_cast<std::size_t>(j) * n + i] = prop;
      bump("phi", accept);
    }
}

void Chain::update_tau2() {
  const auto [shape, scale] = tau2_conditional();
  state_.tau2 = rng_.inverse_gamma(shape, scale);
}

void Chain::update_alpha() {
  if (scales_.alpha <= 0.0) return;
  const double prop =
      reflect(state_.alpha + scales_.alpha * rng_.normal(), 0.0, kAlphaMax);
  const double ratio = alpha_log_ratio(prop);
  const bool accept = std::log(rng_.uniform()) < ratio;
  if (accept) state_.alpha = prop;
  bump("alpha", accept);
}

void Chain::update_v_blocks() {
  if (scales_.v <= 0.0) return;
  const int ne = edges_.count();
  std::vector<int> block;
  std::vector<double> v_prop;
  for (int start = 0; start < ne; start += effective_block_size_) {
    const int len = std::min(effective_block_size_, ne - start);
    block.resize(len);
    v_prop.resize(len);
    for (int b = 0; b < len; ++b) {
      block[b] = start + b;
      v_prop[b] = state_.v_plus[start + b] + scales_.v * rng_.normal();
    }
    VBlockProposal p = v_block_log_ratio(block, v_prop);
    bool accept = false;
    if (p.in_bounds) accept = std::log(rng_.uniform()) < p.log_ratio;
    if (accept) {
      for (int b = 0; b < len; ++b) {
        state_.v_plus[block[b]] = v_prop[b];
        state_.w_plus[block[b]] = logit_inv(v_prop[b]);
      }
      q_ = std::move(p.q);
      factor_ = std::move(p.factor);
    }
    bump("v", accept);
  }
}

void Chain::update_zeta2() {
  const auto [shape, scale] = zeta2_conditional();
  state_.zeta2 = rng_.inverse_gamma(shape, scale);
}

void Chain::update_rho() {
  if (scales_.rho <= 0.0) return;
  const double prop =
      reflect(state_.rho + scales_.rho * rng_.normal(), 0.0, 1.0);
  const double ratio = rho_log_ratio(prop);
  const bool accept = std::log(rng_.uniform()) < ratio;
  if (accept) {
    state_.rho = prop;
    if (spec_.variant == ModelVariant::GlobalAR) {
      q_ = leroux_precision(data_.graph, state_.rho,
                            state_.rho * spec_.epsilon);
      factor_ = refactorize_full(factor_, q_);
    } else {
      q_edge_ = edge_precision(edge_graph_, state_.rho, spec_.epsilon);
      factor_edge_ = refactorize_full(factor_edge_, q_edge_);
    }
  }
  bump("rho", accept);
}

void Chain::sweep() {
  update_beta();
  update_phi();
  update_tau2();
  update_alpha();
  if (adaptive()) {
    update_v_blocks();
    update_zeta2();
    if (spec_.variant == ModelVariant::AdaptiveClustered) update_rho();
  } else {
    update_rho();
  }
}

void Chain::adapt_scales() {
  ++adapt_step_;
  const double gain = 1.0 / std::sqrt(static_cast<double>(adapt_step_));
  auto tune = [&](const std::string& family, double& scale, double target) {
    const auto it = window_.find(family);
    if (it == window_.end() || it->second.attempts == 0 || scale <= 0.0)
      return;
    scale *= std::exp(gain * (it->second.rate() - target));
    scale = std::clamp(scale, 1e-8, 1e6);
  };
  tune("beta", scales_.beta, cfg_.target_block);
  tune("phi", scales_.phi, cfg_.target_scalar);
  tune("alpha", scales_.alpha, cfg_.target_scalar);
  tune("v", scales_.v, cfg_.target_block);
  tune("rho", scales_.rho, cfg_.target_scalar);
  window_.clear();
}

void Chain::check_stuck_window() {
  for (const auto& [family, stats] : window_) {
    if (stats.attempts < 200) continue;
    if (stats.accepts == 0 || stats.accepts == stats.attempts)
      throw_numerical("sampler stuck after burn-in: family '" + family +
                      "' acceptance " + std::to_string(stats.rate()) +
                      " over " + std::to_string(stats.attempts) +
                      " attempts");
  }
  window_.clear();
}

void Chain::record(McmcSamples& out, int row) {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw_numerical(std::string("draw outside support: ") + what);
  };
  check(state_.tau2 > 0.0 && std::isfinite(state_.tau2), "tau2");
  check(state_.alpha >= 0.0 && state_.alpha <= 1.0, "alpha");
  for (int r = 0; r < data_.n_covariates; ++r)
    out.beta[static_cast<std::size_t>(row) * data_.n_covariates + r] =
        state_.beta[r];
  out.tau2[row] = state_.tau2;
  out.alpha[row] = state_.alpha;
  if (adaptive()) {
    check(state_.zeta2 > 0.0 && std::isfinite(state_.zeta2), "zeta2");
    out.zeta2[row] = state_.zeta2;
    const int ne = edges_.count();
    for (int e = 0; e < ne; ++e) {
      check(state_.w_plus[e] > 0.0 && state_.w_plus[e] < 1.0, "w");
      out.w[static_cast<std::size_t>(row) * ne + e] = state_.w_plus[e];
    }
  }
  if (spec_.variant != ModelVariant::AdaptiveIndependent) {
    check(state_.rho >= 0.0 && state_.rho <= 1.0, "rho");
    out.rho[row] = state_.rho;
  }
  const int cells = data_.n_cells();
  for (int c = 0; c < cells; ++c)
    out.phi[static_cast<std::size_t>(row) * cells + c] = state_.phi[c];
  out.deviance[row] =
      -2.0 * poisson_log_likelihood(data_, state_.beta, state_.phi, true);
}

McmcSamples Chain::run() {
  const int keep = cfg_.n_kept();
  McmcSamples out;
  out.n_kept = keep;
  out.n_areas = data_.n_areas;
  out.n_periods = data_.n_periods;
  out.n_covariates = data_.n_covariates;
  out.n_edges = edges_.count();
  out.variant = spec_.variant;
  out.beta.assign(static_cast<std::size_t>(keep) * data_.n_covariates, 0.0);
  out.tau2.assign(keep, 0.0);
  out.alpha.assign(keep, 0.0);
  if (adaptive()) {
    out.zeta2.assign(keep, 0.0);
    out.w.assign(static_cast<std::size_t>(keep) * edges_.count(), 0.0);
  }
  if (spec_.variant != ModelVariant::AdaptiveIndependent)
    out.rho.assign(keep, 0.0);
  out.phi.assign(static_cast<std::size_t>(keep) * data_.n_cells(), 0.0);
  out.deviance.assign(keep, 0.0);

  int row = 0;
  for (int it = 0; it < cfg_.n_sample; ++it) {
    sweep();
    if (it < cfg_.burnin) {
      if ((it + 1) % cfg_.adapt_interval == 0) adapt_scales();
      if (it + 1 == cfg_.burnin) window_.clear();
    } else {
      if (cfg_.check_stuck && (it + 1 - cfg_.burnin) % cfg_.adapt_interval == 0)
        check_stuck_window();
      if ((it - cfg_.burnin) % cfg_.thin == cfg_.thin - 1 && row < keep)
        record(out, row++);
    }
  }
  out.acceptance = total_;
  out.final_scales = scales_;
  return out;
}

McmcSamples run_chain(const Dataset& d, const ModelSpec& spec,
                      const ChainConfig& cfg,
                      std::optional<EdgeGraph> edge_adjacency) {
  Chain chain(d, spec, cfg, std::move(edge_adjacency));
  return chain.run();
}

}  // namespace stcar
