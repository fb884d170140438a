#include "stcar/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <functional>
#include <set>
#include <string>

#include "stcar/error.hpp"

namespace stcar {

bool SparseSymMatrix::same_pattern(const SparseSymMatrix& other) const {
  return n == other.n && colptr == other.colptr && rowind == other.rowind;
}

void SparseSymMatrix::multiply(std::span<const double> x,
                               std::span<double> y) const {
  for (int i = 0; i < n; ++i) y[i] = diag[i] * x[i];
  for (int c = 0; c < n; ++c)
    for (int t = colptr[c]; t < colptr[c + 1]; ++t) {
      const int r = rowind[t];
      const double v = values[t];
      y[r] += v * x[c];
      y[c] += v * x[r];
    }
}

double SparseSymMatrix::quad_form(std::span<const double> x) const {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += diag[i] * x[i] * x[i];
  double off = 0.0;
  for (int c = 0; c < n; ++c)
    for (int t = colptr[c]; t < colptr[c + 1]; ++t)
      off += values[t] * x[rowind[t]] * x[c];
  return s + 2.0 * off;
}

std::vector<std::tuple<int, int, double>> SparseSymMatrix::triplets() const {
  std::vector<std::tuple<int, int, double>> out;
  out.reserve(static_cast<std::size_t>(n) + rowind.size());
  for (int i = 0; i < n; ++i) out.emplace_back(i, i, diag[i]);
  for (int c = 0; c < n; ++c)
    for (int t = colptr[c]; t < colptr[c + 1]; ++t)
      out.emplace_back(rowind[t], c, values[t]);
  return out;
}

SparseSymMatrix sparse_from_triplets(
    int n, const std::vector<std::tuple<int, int, double>>& entries) {
  if (n < 1) throw_value("sparse_from_triplets: n must be >= 1");
  SparseSymMatrix q;
  q.n = n;
  q.diag.assign(n, 0.0);
  std::vector<std::tuple<int, int, double>> lower;
  std::vector<char> have_diag(n, 0);
  std::set<std::pair<int, int>> seen;
  for (const auto& [i, k, v] : entries) {
    if (i < 0 || i >= n || k < 0 || k >= n)
      throw_value("sparse_from_triplets: index out of range");
    if (i == k) {
      if (have_diag[i]) throw_value("sparse_from_triplets: duplicate diagonal");
      have_diag[i] = 1;
      q.diag[i] = v;
    } else {
      const int r = std::max(i, k), c = std::min(i, k);
      if (!seen.insert({r, c}).second)
        throw_value("sparse_from_triplets: duplicate off-diagonal");
      lower.emplace_back(r, c, v);
    }
  }
  std::sort(lower.begin(), lower.end(), [](const auto& a, const auto& b) {
    return std::make_pair(std::get<1>(a), std::get<0>(a)) <
           std::make_pair(std::get<1>(b), std::get<0>(b));
  });
  q.colptr.assign(n + 1, 0);
  for (const auto& [r, c, v] : lower) ++q.colptr[c + 1];
  for (int c = 0; c < n; ++c) q.colptr[c + 1] += q.colptr[c];
  q.rowind.resize(lower.size());
  q.values.resize(lower.size());
  for (std::size_t t = 0; t < lower.size(); ++t) {
    q.rowind[t] = std::get<0>(lower[t]);
    q.values[t] = std::get<2>(lower[t]);
  }
  return q;
}

namespace {

// Shared pattern builder: strictly-lower CSC of the graph with a slot per
// canonical edge, so value layout is identical across rebuilds.
SparseSymMatrix pattern_from_graph(const AreaGraph& g) {
  SparseSymMatrix q;
  q.n = g.n_areas;
  q.diag.assign(q.n, 0.0);
  q.colptr.assign(q.n + 1, 0);
  for (int c = 0; c < q.n; ++c)
    for (int r : g.neighbors[c])
      if (r > c) ++q.colptr[c + 1];
  for (int c = 0; c < q.n; ++c) q.colptr[c + 1] += q.colptr[c];
  q.rowind.resize(q.colptr[q.n]);
  q.values.assign(q.colptr[q.n], 0.0);
  std::vector<int> pos(q.colptr.begin(), q.colptr.end() - 1);
  for (int c = 0; c < q.n; ++c)
    for (int r : g.neighbors[c])
      if (r > c) q.rowind[pos[c]++] = r;  // neighbors sorted => rows sorted
  return q;
}

}  // namespace

SparseSymMatrix adaptive_precision(const AreaGraph& g, const EdgeSet& es,
                                   std::span<const double> weights,
                                   double eps) {
  if (static_cast<int>(weights.size()) != es.count())
    throw_value("adaptive_precision: weight vector length " +
                std::to_string(weights.size()) + " != edge count " +
                std::to_string(es.count()));
  if (eps <= 0.0) throw_value("adaptive_precision: eps must be > 0");
  for (std::size_t e = 0; e < weights.size(); ++e)
    if (!(weights[e] > 0.0) || weights[e] > 1.0)
      throw_value("adaptive_precision: weight " + std::to_string(e) +
                  " outside (0,1]");
  SparseSymMatrix q = pattern_from_graph(g);
  for (int i = 0; i < q.n; ++i) q.diag[i] = eps;
  std::vector<int> pos(q.colptr.begin(), q.colptr.end() - 1);
  // canonical order (i<k) visits column i's slots in ascending row order
  for (int e = 0; e < es.count(); ++e) {
    const auto [i, k] = es.edges[e];
    const double w = weights[e];
    q.values[pos[i]++] = -w;
    q.diag[i] += w;
    q.diag[k] += w;
  }
  return q;
}

SparseSymMatrix leroux_precision(const AreaGraph& g, double rho,
                                 double ridge) {
  if (rho < 0.0 || rho > 1.0)
    throw_value("leroux_precision: rho outside [0,1]");
  if (ridge < 0.0) throw_value("leroux_precision: ridge must be >= 0");
  SparseSymMatrix q = pattern_from_graph(g);
  for (int i = 0; i < q.n; ++i)
    q.diag[i] = rho * g.degree(i) + (1.0 - rho) + ridge;
  for (auto& v : q.values) v = -rho;
  return q;
}

TemporalPrecision ar1_precision(double alpha, int periods) {
  if (periods < 1) throw_value("ar1_precision: periods must be >= 1");
  if (alpha < 0.0 || alpha >= 1.0)
    throw_value("ar1_precision: alpha outside [0,1)");
  return TemporalPrecision{periods, alpha};
}

std::vector<double> ar1_residuals(std::span<const double> phi, double alpha,
                                  int n, int periods) {
  std::vector<double> u(phi.begin(), phi.end());
  for (int j = periods - 1; j >= 1; --j)
    for (int i = 0; i < n; ++i)
      u[static_cast<std::size_t>(j) * n + i] -=
          alpha * phi[static_cast<std::size_t>(j - 1) * n + i];
  return u;
}

double st_quad_form(std::span<const double> phi, const TemporalPrecision& Z,
                    const SparseSymMatrix& Q) {
  const int n = Q.n, T = Z.periods;
  if (static_cast<int>(phi.size()) != n * T)
    throw_value("st_quad_form: phi length != N*T");
  const std::vector<double> u = ar1_residuals(phi, Z.alpha, n, T);
  double total = 0.0;
  for (int j = 0; j < T; ++j)
    total += Q.quad_form(std::span<const double>(u).subspan(
        static_cast<std::size_t>(j) * n, n));
  return total;
}

namespace {

// Nested-dissection ordering via breadth-first level-set separators.
// Subdomain interiors are eliminated first and separators last, which keeps
// the elimination tree balanced: a local edge change then touches only one
// subtree branch, which is what makes the partial refactorization cheap.
std::vector<int> nested_dissection_order(const SparseSymMatrix& q) {
  const int n = q.n;
  std::vector<std::vector<int>> adj(n);
  for (int c = 0; c < n; ++c)
    for (int t = q.colptr[c]; t < q.colptr[c + 1]; ++t) {
      adj[c].push_back(q.rowind[t]);
      adj[q.rowind[t]].push_back(c);
    }
  std::vector<int> order;
  order.reserve(n);
  std::vector<int> member(n, -1), seen(n, -1), level(n, 0), queue;
  int mepoch = 0, sepoch = 0;

  // BFS restricted to the current subset; fills level[] and returns the
  // visit order (so .back() is a farthest vertex)
  auto bfs_from = [&](int start, int me) -> std::vector<int>& {
    ++sepoch;
    queue.clear();
    queue.push_back(start);
    seen[start] = sepoch;
    level[start] = 0;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      const int u = queue[h];
      for (int v : adj[u])
        if (member[v] == me && seen[v] != sepoch) {
          seen[v] = sepoch;
          level[v] = level[u] + 1;
          queue.push_back(v);
        }
    }
    return queue;
  };

  std::function<void(std::vector<int>)> recurse = [&](std::vector<int> sub) {
    if (static_cast<int>(sub.size()) <= 12) {
      std::sort(sub.begin(), sub.end());
      for (int v : sub) order.push_back(v);
      return;
    }
    const int me = ++mepoch;
    for (int v : sub) member[v] = me;
    const auto& reach = bfs_from(sub[0], me);
    if (reach.size() < sub.size()) {  // disconnected: peel one component
      std::vector<int> comp(reach.begin(), reach.end());
      std::vector<int> rest;
      for (int v : sub)
        if (seen[v] != sepoch) rest.push_back(v);
      recurse(std::move(comp));
      recurse(std::move(rest));
      return;
    }
    // double BFS toward a pseudo-peripheral vertex, then cut at mid level
    const int far = reach.back();
    const auto& reach2 = bfs_from(far, me);
    const int maxlev = level[reach2.back()];
    if (maxlev < 1) {
      std::sort(sub.begin(), sub.end());
      for (int v : sub) order.push_back(v);
      return;
    }
    const int mid = std::max(1, maxlev / 2);
    std::vector<int> a, b, sep;
    for (int v : sub) {
      if (level[v] < mid)
        a.push_back(v);
      else if (level[v] > mid)
        b.push_back(v);
      else
        sep.push_back(v);
    }
    recurse(std::move(a));
    recurse(std::move(b));
    std::sort(sep.begin(), sep.end());
    for (int v : sep) order.push_back(v);
  };

  std::vector<int> all(n);
  for (int v = 0; v < n; ++v) all[v] = v;
  recurse(std::move(all));
  return order;
}

std::shared_ptr<const CholSymbolic> analyze(const SparseSymMatrix& q) {
  auto sym = std::make_shared<CholSymbolic>();
  const int n = q.n;
  sym->n = n;
  sym->perm = nested_dissection_order(q);
  sym->iperm.assign(n, 0);
  for (int p = 0; p < n; ++p) sym->iperm[sym->perm[p]] = p;
  sym->src_colptr = q.colptr;
  sym->src_rowind = q.rowind;

  // permuted lower pattern incl. diagonal, with value sources
  struct Slot {
    int row, col, src;
  };
  std::vector<Slot> slots;
  slots.reserve(static_cast<std::size_t>(n) + q.rowind.size());
  for (int k = 0; k < n; ++k)
    slots.push_back({sym->iperm[k], sym->iperm[k], -(k + 1)});
  for (int c = 0; c < n; ++c)
    for (int t = q.colptr[c]; t < q.colptr[c + 1]; ++t) {
      const int a = sym->iperm[q.rowind[t]], b = sym->iperm[c];
      slots.push_back({std::max(a, b), std::min(a, b), t});
    }
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
    return std::make_pair(a.col, a.row) < std::make_pair(b.col, b.row);
  });
  sym->ap.assign(n + 1, 0);
  for (const Slot& s : slots) ++sym->ap[s.col + 1];
  for (int c = 0; c < n; ++c) sym->ap[c + 1] += sym->ap[c];
  sym->ai.resize(slots.size());
  sym->asrc.resize(slots.size());
  for (std::size_t t = 0; t < slots.size(); ++t) {
    sym->ai[t] = slots[t].row;
    sym->asrc[t] = slots[t].src;
  }

  // strict-lower entries listed by row, for the etree and row subtrees
  std::vector<std::vector<int>> cols_of_row(n);
  for (int c = 0; c < n; ++c)
    for (int t = sym->ap[c]; t < sym->ap[c + 1]; ++t)
      if (sym->ai[t] != c) cols_of_row[sym->ai[t]].push_back(c);

  // elimination tree (Liu), with ancestor path compression
  sym->parent.assign(n, -1);
  std::vector<int> ancestor(n, -1);
  for (int j = 0; j < n; ++j)
    for (int c : cols_of_row[j]) {
      int k = c;
      while (ancestor[k] != -1 && ancestor[k] != j) {
        const int next = ancestor[k];
        ancestor[k] = j;
        k = next;
      }
      if (ancestor[k] == -1) {
        ancestor[k] = j;
        sym->parent[k] = j;
      }
    }

  // pattern of L: walk each row subtree; rows arrive in ascending order
  std::vector<std::vector<int>> lcol(n);
  std::vector<int> mark(n, -1);
  for (int i = 0; i < n; ++i) {
    mark[i] = i;
    for (int c : cols_of_row[i]) {
      int j = c;
      while (mark[j] != i) {
        lcol[j].push_back(i);
        mark[j] = i;
        j = sym->parent[j];
      }
    }
  }
  sym->lp.assign(n + 1, 0);
  for (int j = 0; j < n; ++j) sym->lp[j + 1] = 1 + static_cast<int>(lcol[j].size());
  for (int j = 0; j < n; ++j) sym->lp[j + 1] += sym->lp[j];
  sym->li.resize(sym->lp[n]);
  for (int j = 0; j < n; ++j) {
    int t = sym->lp[j];
    sym->li[t++] = j;
    for (int r : lcol[j]) sym->li[t++] = r;
  }

  // row lists: for each row r, the columns d<r where r appears, with offsets
  std::vector<int> rowcount(n, 0);
  for (int d = 0; d < n; ++d)
    for (int t = sym->lp[d] + 1; t < sym->lp[d + 1]; ++t)
      ++rowcount[sym->li[t]];
  sym->rp.assign(n + 1, 0);
  for (int r = 0; r < n; ++r) sym->rp[r + 1] = sym->rp[r] + rowcount[r];
  sym->rcol.resize(sym->rp[n]);
  sym->roff.resize(sym->rp[n]);
  std::vector<int> fill(sym->rp.begin(), sym->rp.end() - 1);
  for (int d = 0; d < n; ++d)
    for (int t = sym->lp[d] + 1; t < sym->lp[d + 1]; ++t) {
      const int r = sym->li[t];
      sym->rcol[fill[r]] = d;
      sym->roff[fill[r]] = t;
      ++fill[r];
    }
  return sym;
}

void fill_permuted_values(const CholSymbolic& sym, const SparseSymMatrix& q,
                          std::vector<double>& pax) {
  pax.resize(sym.ai.size());
  for (std::size_t t = 0; t < sym.asrc.size(); ++t) {
    const int s = sym.asrc[t];
    pax[t] = (s < 0) ? q.diag[-s - 1] : q.values[s];
  }
}

constexpr double kPivotTol = 1e-14;

// Left-looking recomputation of one column of L.
void compute_column(const CholSymbolic& sym, const std::vector<double>& pax,
                    std::vector<double>& lx, std::vector<double>& work,
                    int j) {
  for (int t = sym.lp[j]; t < sym.lp[j + 1]; ++t) work[sym.li[t]] = 0.0;
  for (int t = sym.ap[j]; t < sym.ap[j + 1]; ++t) work[sym.ai[t]] = pax[t];
  for (int s = sym.rp[j]; s < sym.rp[j + 1]; ++s) {
    const int d = sym.rcol[s];
    const int off = sym.roff[s];  // position of row j within column d
    const double ljd = lx[off];
    for (int t = off; t < sym.lp[d + 1]; ++t) work[sym.li[t]] -= ljd * lx[t];
  }
  const double pivot = work[j];
  if (!(pivot > kPivotTol))
    throw_numerical("cholesky: non-positive pivot at column " +
                    std::to_string(j) + " (area " +
                    std::to_string(sym.perm[j]) + "), value " +
                    std::to_string(pivot));
  const double ljj = std::sqrt(pivot);
  lx[sym.lp[j]] = ljj;
  for (int t = sym.lp[j] + 1; t < sym.lp[j + 1]; ++t)
    lx[t] = work[sym.li[t]] / ljj;
}

}  // namespace

double CholeskyFactor::log_det() const {
  double s = 0.0;
  for (int j = 0; j < sym_->n; ++j) s += std::log(lx_[sym_->lp[j]]);
  return 2.0 * s;
}

std::vector<double> CholeskyFactor::unwhiten(std::span<const double> z) const {
  const int n = sym_->n;
  if (static_cast<int>(z.size()) != n)
    throw_value("unwhiten: input length != dimension");
  std::vector<double> y(z.begin(), z.end());
  for (int j = n - 1; j >= 0; --j) {
    double s = y[j];
    for (int t = sym_->lp[j] + 1; t < sym_->lp[j + 1]; ++t)
      s -= lx_[t] * y[sym_->li[t]];
    y[j] = s / lx_[sym_->lp[j]];
  }
  std::vector<double> x(n);
  for (int p = 0; p < n; ++p) x[sym_->perm[p]] = y[p];
  return x;
}

CholeskyFactor factorize(const SparseSymMatrix& q) {
  CholeskyFactor f;
  f.sym_ = analyze(q);
  std::vector<double> pax;
  fill_permuted_values(*f.sym_, q, pax);
  f.lx_.assign(f.sym_->li.size(), 0.0);
  std::vector<double> work(q.n, 0.0);
  for (int j = 0; j < q.n; ++j)
    compute_column(*f.sym_, pax, f.lx_, work, j);
  return f;
}

namespace {

void check_pattern(const CholSymbolic& sym, const SparseSymMatrix& q) {
  if (q.n != sym.n || q.colptr != sym.src_colptr || q.rowind != sym.src_rowind)
    throw_value("refactorize: sparsity pattern differs from factored matrix");
}

}  // namespace

CholeskyFactor refactorize_full(const CholeskyFactor& f,
                                const SparseSymMatrix& q_new) {
  check_pattern(f.symbolic(), q_new);
  CholeskyFactor out;
  out.sym_ = f.sym_;
  std::vector<double> pax;
  fill_permuted_values(*out.sym_, q_new, pax);
  out.lx_.assign(out.sym_->li.size(), 0.0);
  std::vector<double> work(q_new.n, 0.0);
  for (int j = 0; j < q_new.n; ++j)
    compute_column(*out.sym_, pax, out.lx_, work, j);
  return out;
}

CholeskyFactor refactorize_edges(const CholeskyFactor& f,
                                 const SparseSymMatrix& q_new,
                                 std::span<const std::pair<int, int>> changed) {
  const CholSymbolic& sym = f.symbolic();
  check_pattern(sym, q_new);
  CholeskyFactor out;
  out.sym_ = f.sym_;
  out.lx_ = f.lx_;
  if (changed.empty()) return out;

  // ancestor closure of the changed columns in the elimination tree
  std::vector<char> in_set(sym.n, 0);
  std::vector<int> cols;
  auto climb = [&](int c) {
    while (c != -1 && !in_set[c]) {
      in_set[c] = 1;
      cols.push_back(c);
      c = sym.parent[c];
    }
  };
  for (const auto& [i, k] : changed) {
    if (i < 0 || i >= sym.n || k < 0 || k >= sym.n)
      throw_value("refactorize_edges: area index out of range");
    climb(sym.iperm[i]);
    climb(sym.iperm[k]);
  }
  std::sort(cols.begin(), cols.end());

  // scratch reused across calls; entries are only read for the recomputed
  // columns, which are filled below (compute_column initializes the work
  // slots it touches)
  thread_local std::vector<double> pax, work;
  if (pax.size() < sym.ai.size()) pax.resize(sym.ai.size());
  if (work.size() < static_cast<std::size_t>(sym.n)) work.resize(sym.n);
  for (int j : cols)
    for (int t = sym.ap[j]; t < sym.ap[j + 1]; ++t) {
      const int s = sym.asrc[t];
      pax[t] = (s < 0) ? q_new.diag[-s - 1] : q_new.values[s];
    }
  for (int j : cols) compute_column(sym, pax, out.lx_, work, j);
  return out;
}

double st_gmrf_log_density(std::span<const double> phi, double tau2,
                           const TemporalPrecision& Z,
                           const SparseSymMatrix& Q,
                           const CholeskyFactor& f) {
  if (tau2 <= 0.0) throw_value("st_gmrf_log_density: tau2 must be > 0");
  const int n = Q.n, T = Z.periods;
  if (static_cast<int>(phi.size()) != n * T)
    throw_value("st_gmrf_log_density: phi length != N*T");
  const double quad = st_quad_form(phi, Z, Q);
  constexpr double kLog2Pi = 1.8378770664093454836;
  // N/2 * log|Z| is identically zero for the AR(1) innovation form
  return -0.5 * n * T * (kLog2Pi + std::log(tau2)) + 0.5 * n * Z.log_det() +
         0.5 * T * f.log_det() - 0.5 * quad / tau2;
}

}  // namespace stcar
