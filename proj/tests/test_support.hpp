#pragma once

// Dense reference implementations used as independent oracles in tests.
// Everything here recomputes results from first principles with Eigen and
// never calls into the sparse code paths it is checking.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "stcar/graph.hpp"
#include "stcar/rng.hpp"
#include "stcar/sparse.hpp"

namespace oracle {

using Matrix = Eigen::MatrixXd;
using MatrixLD = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

inline Matrix dense_from_sparse(const stcar::SparseSymMatrix& q) {
  Matrix m = Matrix::Zero(q.n, q.n);
  for (int i = 0; i < q.n; ++i) m(i, i) = q.diag[i];
  for (int c = 0; c < q.n; ++c)
    for (int t = q.colptr[c]; t < q.colptr[c + 1]; ++t) {
      m(q.rowind[t], c) = q.values[t];
      m(c, q.rowind[t]) = q.values[t];
    }
  return m;
}

// log-determinant by eigenvalue sum, in extended precision so the oracle
// stays accurate when the spectrum reaches down to a tiny ridge
inline long double logdet_eigs(const Matrix& m) {
  MatrixLD a = m.cast<long double>();
  Eigen::SelfAdjointEigenSolver<MatrixLD> es(a);
  long double s = 0.0L;
  for (int i = 0; i < a.rows(); ++i) s += std::log(es.eigenvalues()[i]);
  return s;
}

inline Matrix dense_ar1(const stcar::TemporalPrecision& z) {
  Matrix m = Matrix::Zero(z.periods, z.periods);
  for (int j = 0; j < z.periods; ++j) {
    m(j, j) = z.diag(j);
    if (j + 1 < z.periods) {
      m(j, j + 1) = z.offdiag();
      m(j + 1, j) = z.offdiag();
    }
  }
  return m;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Gaussian log-density of x with precision P/tau2, logdet in long double.
inline double mvn_logpdf_precision(const Eigen::VectorXd& x, const Matrix& p,
                                   double tau2) {
  const int n = static_cast<int>(x.size());
  const long double ld = logdet_eigs(p) - n * std::log((long double)tau2);
  const double quad = x.dot(p * x) / tau2;
  return -0.5 * n * std::log(2.0 * M_PI) + 0.5 * static_cast<double>(ld) -
         0.5 * quad;
}

// Connected random graph: random spanning tree plus extra random edges.
inline stcar::AreaGraph random_graph(int n, double extra_edge_factor,
                                     std::mt19937_64& gen) {
  std::vector<std::pair<int, int>> pairs;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), gen);
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> prev(0, i - 1);
    pairs.emplace_back(order[i], order[prev(gen)]);
  }
  const int extra = static_cast<int>(extra_edge_factor * n);
  for (int e = 0; e < extra; ++e) {
    const int a = pick(gen), b = pick(gen);
    if (a != b) pairs.emplace_back(a, b);
  }
  return stcar::build_area_graph(pairs, n);
}

inline std::vector<double> random_weights(int count, std::mt19937_64& gen,
                                          double lo = 0.05, double hi = 0.999) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> w(count);
  for (auto& v : w) v = u(gen);
  return w;
}

// standard normal quantile (Acklam's rational approximation, ~1e-9)
inline double normal_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > phigh) {
    q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// exact truncated-normal draw via inverse CDF
inline double truncated_normal(double mean, double sd, double lo, double hi,
                               stcar::Rng& rng) {
  const double a = normal_cdf((lo - mean) / sd);
  const double b = normal_cdf((hi - mean) / sd);
  const double u = a + (b - a) * rng.uniform();
  return mean + sd * normal_quantile(std::min(std::max(u, 1e-16), 1 - 1e-16));
}

// two-sample Kolmogorov-Smirnov p-value (asymptotic)
inline double ks_two_sample_pvalue(std::vector<double> x,
                                   std::vector<double> y) {
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const std::size_t nx = x.size(), ny = y.size();
  double d = 0.0;
  std::size_t ix = 0, iy = 0;
  while (ix < nx && iy < ny) {
    if (x[ix] <= y[iy])
      ++ix;
    else
      ++iy;
    d = std::max(d, std::abs(static_cast<double>(ix) / nx -
                             static_cast<double>(iy) / ny));
  }
  const double ne = std::sqrt(static_cast<double>(nx) * ny / (nx + ny));
  const double lambda = (ne + 0.12 + 0.11 / ne) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k)
    p += 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::min(std::max(p, 0.0), 1.0);
}

// Monte-Carlo standard error of the mean by batch means.
inline double batch_means_se(const std::vector<double>& x, int n_batches = 50) {
  const std::size_t n = x.size();
  const std::size_t bs = n / n_batches;
  std::vector<double> means;
  for (int b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (std::size_t t = b * bs; t < (b + 1) * bs; ++t) s += x[t];
    means.push_back(s / bs);
  }
  double m = 0.0;
  for (double v : means) m += v;
  m /= means.size();
  double var = 0.0;
  for (double v : means) var += (v - m) * (v - m);
  var /= (means.size() - 1);
  return std::sqrt(var / means.size());
}

}  // namespace oracle
