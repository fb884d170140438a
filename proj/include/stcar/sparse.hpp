#pragma once

#include <memory>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "stcar/graph.hpp"

namespace stcar {

// Symmetric sparse matrix stored as diagonal plus strictly-lower CSC with
// deterministic ordering. The off-diagonal pattern always mirrors the area
// graph it was built from.
struct SparseSymMatrix {
  int n = 0;
  std::vector<double> diag;
  std::vector<int> colptr;   // n+1
  std::vector<int> rowind;   // rows > col, sorted per column
  std::vector<double> values;

  int nnz_lower() const { return static_cast<int>(rowind.size()); }
  bool same_pattern(const SparseSymMatrix& other) const;

  void multiply(std::span<const double> x, std::span<double> y) const;
  double quad_form(std::span<const double> x) const;
  // (row, col, value) entries of the lower triangle incl. diagonal
  std::vector<std::tuple<int, int, double>> triplets() const;
};

// Test/tool constructor. Off-diagonal triplets give one (i,k) direction;
// symmetry is implied. Duplicate entries are rejected.
SparseSymMatrix sparse_from_triplets(
    int n, const std::vector<std::tuple<int, int, double>>& entries);

// Q(W, eps) = diag(W1) - W + eps*I with W carrying the edge weights in
// canonical order. Weights must lie in (0, 1].
SparseSymMatrix adaptive_precision(const AreaGraph& g, const EdgeSet& es,
                                   std::span<const double> weights,
                                   double eps);

// Leroux precision rho*[diag(W1) - W] + (1-rho)*I + ridge*I on the binary
// graph. ridge defaults to zero; pass a positive ridge when rho may reach 1.
SparseSymMatrix leroux_precision(const AreaGraph& g, double rho,
                                 double ridge = 0.0);

// Tridiagonal AR(1) precision: diagonal (1+a^2, ..., 1+a^2, 1), off-diagonal
// -a. Its determinant is 1 for every alpha.
struct TemporalPrecision {
  int periods = 1;
  double alpha = 0.0;

  double diag(int j) const {
    return (j < periods - 1) ? 1.0 + alpha * alpha : 1.0;
  }
  double offdiag() const { return -alpha; }
  double log_det() const { return 0.0; }
};

TemporalPrecision ar1_precision(double alpha, int periods);

// u_1 = phi_1, u_j = phi_j - alpha*phi_{j-1}: the innovation form of the
// AR(1) chain. phi is time-major (time blocks of length n).
std::vector<double> ar1_residuals(std::span<const double> phi, double alpha,
                                  int n, int periods);

// phi' [Z (x) Q] phi without materializing the Kronecker product; phi is
// time-major with T blocks of length Q.n.
double st_quad_form(std::span<const double> phi, const TemporalPrecision& Z,
                    const SparseSymMatrix& Q);

// Symbolic structure of the factorization: ordering, elimination tree and
// the pattern of L. Computed once per sparsity pattern and shared between
// numeric (re)factorizations.
struct CholSymbolic {
  int n = 0;
  std::vector<int> perm;   // perm[pos] = original index
  std::vector<int> iperm;  // iperm[original] = pos
  // permuted lower pattern of the input incl. diagonal, with value sources:
  // src < 0 encodes diag[-src-1], otherwise an index into values[]
  std::vector<int> ap, ai, asrc;
  std::vector<int> parent;      // elimination tree
  std::vector<int> lp, li;      // pattern of L incl. diagonal, rows sorted
  std::vector<int> rp, rcol, roff;  // per-row: columns d and offset of the row in d
  // pattern identity of the source matrix, for mismatch checks
  std::vector<int> src_colptr, src_rowind;
};

class CholeskyFactor {
 public:
  CholeskyFactor() = default;

  int dimension() const { return sym_ ? sym_->n : 0; }
  double log_det() const;  // 2*sum(log L_ii)

  // maps iid standard normals to a draw from N(0, Q^{-1})
  std::vector<double> unwhiten(std::span<const double> z) const;

  const CholSymbolic& symbolic() const { return *sym_; }
  std::span<const double> values() const { return lx_; }

 private:
  std::shared_ptr<const CholSymbolic> sym_;
  std::vector<double> lx_;

  friend CholeskyFactor factorize(const SparseSymMatrix&);
  friend CholeskyFactor refactorize_full(const CholeskyFactor&,
                                         const SparseSymMatrix&);
  friend CholeskyFactor refactorize_edges(
      const CholeskyFactor&, const SparseSymMatrix&,
      std::span<const std::pair<int, int>>);
};

// Full factorization: fill-reducing ordering, symbolic analysis, numeric
// factorization. P Q P' = L L'.
CholeskyFactor factorize(const SparseSymMatrix& Q);

// Numeric refactorization of a matrix with the identical pattern, reusing
// the symbolic structure.
CholeskyFactor refactorize_full(const CholeskyFactor& f,
                                const SparseSymMatrix& Q_new);

// Refactorization after Q changed only in the entries touched by the given
// area pairs (their off-diagonals and both diagonals). Only the elimination-
// tree ancestors of the changed columns are recomputed; untouched columns
// are carried over bitwise.
CholeskyFactor refactorize_edges(const CholeskyFactor& f,
                                 const SparseSymMatrix& Q_new,
                                 std::span<const std::pair<int, int>> changed);

// Gaussian log-density of the time-major field phi with precision
// (1/tau2) Z (x) Q. The N/2*log|Z| term is identically zero for the AR(1)
// innovation form and is kept only for shape.
double st_gmrf_log_density(std::span<const double> phi, double tau2,
                           const TemporalPrecision& Z,
                           const SparseSymMatrix& Q,
                           const CholeskyFactor& f);

}  // namespace stcar
