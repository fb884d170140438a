#include <cmath>
#include <random>

#include "doctest.h"
#include "stcar/error.hpp"
#include "stcar/model.hpp"
#include "test_support.hpp"

using namespace stcar;

namespace {

Dataset toy_dataset(int n_areas, int n_periods, const AreaGraph& g,
                    std::mt19937_64& gen, int p = 0) {
  const int cells = n_areas * n_periods;
  std::vector<double> y(cells), e(cells), x(static_cast<std::size_t>(cells) * p);
  std::uniform_int_distribution<int> yd(0, 20);
  std::uniform_real_distribution<double> ed(5.0, 30.0);
  std::normal_distribution<double> xd;
  for (int c = 0; c < cells; ++c) {
    y[c] = yd(gen);
    e[c] = ed(gen);
    for (int r = 0; r < p; ++r) x[c * p + r] = xd(gen);
  }
  return make_dataset(n_areas, n_periods, y, e, x, p, g);
}

}  // namespace

TEST_CASE("poisson log likelihood basics") {
  const AreaGraph g1 = build_area_graph({{0, 1}}, 2);

  SUBCASE("unit cell value") {
    // 2 areas to satisfy the graph; check the single-cell formula per cell
    Dataset d = make_dataset(2, 1, {1, 1}, {1, 1}, {}, 0, g1);
    const std::vector<double> phi{0.0, 0.0};
    // each cell contributes log Poisson(1; 1) = -1
    CHECK(poisson_log_likelihood(d, {}, phi) == doctest::Approx(-2.0));
  }

  SUBCASE("matches a term-by-term scalar oracle") {
    std::mt19937_64 gen(3);
    const AreaGraph g = build_lattice(2, 2);
    Dataset d = toy_dataset(4, 2, g, gen, 2);
    std::normal_distribution<double> nd;
    const std::vector<double> beta{0.3, -0.2};
    std::vector<double> phi(8);
    for (auto& v : phi) v = 0.3 * nd(gen);
    double expect = 0.0;
    for (int c = 0; c < 8; ++c) {
      const double eta = d.x_at(c, 0) * beta[0] + d.x_at(c, 1) * beta[1] + phi[c];
      const double mean = d.expected[c] * std::exp(eta);
      expect += d.counts[c] * std::log(mean) - mean -
                std::lgamma(d.counts[c] + 1.0);
    }
    const double got = poisson_log_likelihood(d, beta, phi);
    CHECK(got == doctest::Approx(expect).epsilon(1e-12));
  }

  SUBCASE("constant shift identity") {
    std::mt19937_64 gen(5);
    const AreaGraph g = build_lattice(2, 2);
    Dataset d = toy_dataset(4, 3, g, gen);
    std::vector<double> phi(12, 0.1);
    const double c = 0.37;
    std::vector<double> shifted(phi);
    for (auto& v : shifted) v += c;
    double delta_expect = 0.0;
    for (int cell = 0; cell < 12; ++cell)
      delta_expect += d.counts[cell] * c -
                      d.expected[cell] * (std::exp(c) - 1.0) * std::exp(phi[cell]);
    const double delta = poisson_log_likelihood(d, {}, shifted) -
                         poisson_log_likelihood(d, {}, phi);
    CHECK(delta == doctest::Approx(delta_expect).epsilon(1e-10));
  }

  SUBCASE("overflow guard") {
    Dataset d = make_dataset(2, 1, {1, 1}, {1, 1}, {}, 0, g1);
    const std::vector<double> phi{800.0, 0.0};
    CHECK_THROWS_AS(poisson_log_likelihood(d, {}, phi), Error);
  }

  SUBCASE("concave in each phi coordinate (negative second difference)") {
    std::mt19937_64 gen(11);
    const AreaGraph g = build_lattice(2, 2);
    Dataset d = toy_dataset(4, 2, g, gen);
    std::vector<double> phi(8, 0.2);
    const double h = 1e-3;
    for (int c = 0; c < 8; ++c) {
      auto at = [&](double v) {
        std::vector<double> p2(phi);
        p2[c] = v;
        return poisson_log_likelihood(d, {}, p2);
      };
      const double second = at(phi[c] + h) - 2.0 * at(phi[c]) + at(phi[c] - h);
      CHECK(second < 0.0);
    }
  }
}

TEST_CASE("dataset validation") {
  const AreaGraph g = build_area_graph({{0, 1}}, 2);
  CHECK_THROWS_AS(make_dataset(2, 1, {1, -1}, {1, 1}, {}, 0, g), Error);
  CHECK_THROWS_AS(make_dataset(2, 1, {1, 1.5}, {1, 1}, {}, 0, g), Error);
  CHECK_THROWS_AS(make_dataset(2, 1, {1, 1}, {1, 0}, {}, 0, g), Error);
  CHECK_THROWS_AS(make_dataset(2, 1, {1}, {1, 1}, {}, 0, g), Error);
  CHECK_THROWS_AS(make_dataset(3, 1, {1, 1, 1}, {1, 1, 1}, {}, 0, g), Error);
}

TEST_CASE("logit transform") {
  CHECK(logit_inv(0.0) == doctest::Approx(0.5));
  // printed-precision constants for the truncation bounds
  CHECK(std::abs(logit_inv(15.0) - 0.9999997) < 5e-8);
  CHECK(std::abs(logit_inv(-15.0) - 3.06e-7) < 5e-10);
  // w-direction round trip is exact to 1e-12 across the whole range
  for (double w = 1e-7; w < 1.0; w += 0.0097)
    CHECK(logit_inv(logit(w)) == doctest::Approx(w).epsilon(1e-12));
  // v-direction: the round trip conditions like e^|v|, so the attainable
  // absolute error grows toward the truncation bound
  for (double v = -15.0; v <= 15.0; v += 0.37) {
    const double tol = std::max(1e-12, 8.0 * std::exp(std::abs(v)) * 2.3e-16);
    CHECK(std::abs(logit(logit_inv(v)) - v) < tol);
  }
  CHECK_THROWS_AS(logit(0.0), Error);
  CHECK_THROWS_AS(logit(1.0), Error);
  CHECK_THROWS_AS(logit(-0.2), Error);
}

TEST_CASE("boundary prior exponent") {
  const AreaGraph g = build_lattice(3, 3);
  const EdgeSet es = build_edge_set(g);
  const EdgeGraph eg = build_edge_graph(es);
  const int ne = eg.n_edges;

  SUBCASE("at the mode the exponent is zero") {
    const std::vector<double> v(ne, 4.2);
    CHECK(boundary_prior_exponent(v, 2.0, 0.0, 4.2, eg) == 0.0);
  }
  SUBCASE("rho 0 reduces to independent normal kernels") {
    std::mt19937_64 gen(13);
    std::normal_distribution<double> nd(1.0, 2.0);
    std::vector<double> v(ne);
    for (auto& x : v) x = nd(gen);
    const double zeta2 = 1.7, mu = 0.8;
    double expect = 0.0;
    for (double x : v) expect += -(x - mu) * (x - mu) / (2.0 * zeta2);
    CHECK(boundary_prior_exponent(v, zeta2, 0.0, mu, eg) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("rho 1 with a constant field has zero pairwise penalty") {
    const std::vector<double> v(ne, -3.0);
    CHECK(boundary_prior_exponent(v, 1.0, 1.0, 0.0, eg) == 0.0);
  }
  SUBCASE("normalized density matches a dense MVN oracle") {
    std::mt19937_64 gen(17);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> v(ne);
    for (auto& x : v) x = nd(gen);
    const double zeta2 = 1.3, mu = 0.4, rho = 0.6, eps = 1e-7;
    const SparseSymMatrix qe = edge_precision(eg, rho, eps);
    const CholeskyFactor f = factorize(qe);
    const double mine = boundary_prior_log_density(v, zeta2, mu, qe, f);
    Eigen::VectorXd centered(ne);
    for (int e = 0; e < ne; ++e) centered[e] = v[e] - mu;
    const double dense = oracle::mvn_logpdf_precision(
        centered, oracle::dense_from_sparse(qe), zeta2);
    CHECK(mine == doctest::Approx(dense).epsilon(1e-8));
  }
}

TEST_CASE("weight prior curve") {
  SUBCASE("mu 0 is symmetric") {
    const double a = log_weight_prior_density(0.01, 0.0, 10.0);
    const double b = log_weight_prior_density(0.99, 0.0, 10.0);
    CHECK(a == doctest::Approx(b).epsilon(1e-10));
  }
  SUBCASE("mu 15, small zeta concentrates near one") {
    const double near_one = log_weight_prior_density(0.9999999, 15.0, 2.0);
    const double mid = log_weight_prior_density(0.5, 15.0, 2.0);
    CHECK(near_one - mid > std::log(1e6));
  }
  SUBCASE("mu 15, large zeta is bimodal at both ends") {
    const double lo = log_weight_prior_density(1e-6, 15.0, 20.0);
    const double hi = log_weight_prior_density(1.0 - 1e-6, 15.0, 20.0);
    const double mid = log_weight_prior_density(0.5, 15.0, 20.0);
    CHECK(lo > mid);
    CHECK(hi > mid);
  }
  SUBCASE("scaled curve has max 1 and integrates to a finite value") {
    for (auto [mu, zeta] : {std::pair{0.0, 5.0}, {15.0, 2.0}, {15.0, 20.0}}) {
      const auto curve = weight_prior_curve(mu, zeta, 501);
      double maxd = 0.0, integral = 0.0;
      for (const auto& [w, dens] : curve) maxd = std::max(maxd, dens);
      for (std::size_t k = 0; k + 1 < curve.size(); ++k)
        integral += 0.5 * (curve[k].second + curve[k + 1].second) *
                    (curve[k + 1].first - curve[k].first);
      CHECK(maxd == doctest::Approx(1.0));
      CHECK(std::isfinite(integral));
      CHECK(integral > 0.0);
    }
  }
}

TEST_CASE("leroux partial correlation") {
  const AreaGraph g2 = build_area_graph({{0, 1}}, 2);
  CHECK(leroux_partial_correlation(0, 1, 0.0, g2) == 0.0);
  CHECK(leroux_partial_correlation(0, 1, 1.0, g2) == doctest::Approx(1.0));

  // deg(i)=2, deg(k)=3 adjacent at rho 0.5
  const AreaGraph g = build_area_graph(
      {{0, 1}, {0, 2}, {1, 3}, {1, 4}}, 5);
  REQUIRE(g.degree(0) == 2);
  REQUIRE(g.degree(1) == 3);
  CHECK(leroux_partial_correlation(0, 1, 0.5, g) ==
        doctest::Approx(0.5 / std::sqrt(1.5 * 2.0)).epsilon(1e-12));

  SUBCASE("equals the precision-entry formula exactly") {
    std::mt19937_64 gen(19);
    for (int rep = 0; rep < 10; ++rep) {
      const AreaGraph rg = oracle::random_graph(6 + rep, 0.7, gen);
      const EdgeSet es = build_edge_set(rg);
      for (double rho : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const SparseSymMatrix q = leroux_precision(rg, rho);
        const oracle::Matrix qd = oracle::dense_from_sparse(q);
        for (const auto& [i, k] : es.edges) {
          const double via_q = -qd(i, k) / std::sqrt(qd(i, i) * qd(k, k));
          CHECK(leroux_partial_correlation(i, k, rho, rg) == via_q);
        }
      }
    }
  }

  SUBCASE("monotone nondecreasing in rho") {
    const AreaGraph g3 = build_lattice(3, 3);
    double prev = -1.0;
    for (double rho = 0.0; rho <= 1.0; rho += 0.05) {
      const double c = leroux_partial_correlation(0, 1, rho, g3);
      CHECK(c >= prev);
      prev = c;
    }
  }
}

TEST_CASE("expected counts") {
  SUBCASE("single stratum") {
    const auto e = expected_counts(std::vector<double>{100.0}, 1,
                                   std::vector<double>{0.1});
    CHECK(e[0] == doctest::Approx(10.0));
  }
  SUBCASE("two strata") {
    const auto e = expected_counts(std::vector<double>{100.0, 200.0}, 1,
                                   std::vector<double>{0.1, 0.05});
    CHECK(e[0] == doctest::Approx(20.0));
  }
  SUBCASE("zero rates give a zero expected count error") {
    CHECK_THROWS_WITH_AS(
        expected_counts(std::vector<double>{100.0}, 1, std::vector<double>{0.0}),
        doctest::Contains("zero expected count"), Error);
  }
  CHECK_THROWS_AS(
      expected_counts(std::vector<double>{-1.0}, 1, std::vector<double>{0.1}),
      Error);
  CHECK_THROWS_AS(
      expected_counts(std::vector<double>{1.0}, 1, std::vector<double>{1.5}),
      Error);
}

TEST_CASE("model spec validation and variant names") {
  ModelSpec spec;
  spec.validate();
  spec.epsilon = 0.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  CHECK(variant_from_name("global") == ModelVariant::GlobalAR);
  CHECK(variant_from_name("adaptive") == ModelVariant::AdaptiveIndependent);
  CHECK(variant_from_name("adaptive-clustered") ==
        ModelVariant::AdaptiveClustered);
  CHECK_THROWS_AS(variant_from_name("bogus"), Error);
  CHECK(std::string(variant_name(ModelVariant::GlobalAR)) == "global");
}
