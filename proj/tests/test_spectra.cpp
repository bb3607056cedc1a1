#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <boost/math/special_functions/gegenbauer.hpp>
#include <cmath>

#include "error.hpp"
#include "spectra.hpp"

using namespace isoyamabe;

namespace {

// Gegenbauer C_l^{(n-1)/2} solves -(1 - t^2) y'' + n t y' = l (l + n - 1) y; even l has y'(0) = 0.
double gegenbauer_residual(int n, unsigned l, double t) {
  const double alpha = (n - 1) / 2.0;
  const double y = boost::math::gegenbauer(l, alpha, t);
  const double d1 = boost::math::gegenbauer_derivative(l, alpha, t, 1);
  const double d2 = boost::math::gegenbauer_derivative(l, alpha, t, 2);
  return -(1 - t * t) * d2 + n * t * d1 - l * (l + n - 1.0) * y;
}

std::vector<double> oracle_eigenvalues(int n, int count) {
  std::vector<double> mu;
  for (int k = 0; k < count; ++k) {
    const unsigned l = 2u * static_cast<unsigned>(k);
    for (double t : {0.1, 0.4, 0.8}) EXPECT_NEAR(gegenbauer_residual(n, l, t), 0.0, 1e-9);
    if (l > 0) EXPECT_NEAR(boost::math::gegenbauer_derivative(l, (n - 1) / 2.0, 0.0, 1), 0.0, 1e-12);
    mu.push_back(l * (l + n - 1.0));
  }
  return mu;
}

}  // namespace

TEST(Spectrum, HemisphereS2) {
  auto p = make_hemisphere(2);
  auto r = neumann_spectrum(p, build_grid(p, 1024), 3);
  const auto mu = oracle_eigenvalues(2, 3);
  EXPECT_EQ(mu[1], 6.0);
  EXPECT_EQ(mu[2], 20.0);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(r.extrapolated[static_cast<std::size_t>(k)], mu[static_cast<std::size_t>(k)], 1e-5 * std::max(1.0, mu[static_cast<std::size_t>(k)]));
}

TEST(Spectrum, HemisphereS3) {
  auto p = make_hemisphere(3);
  auto r = neumann_spectrum(p, build_grid(p, 1024), 3);
  const auto mu = oracle_eigenvalues(3, 3);
  EXPECT_EQ(mu[1], 8.0);
  EXPECT_NEAR(r.extrapolated[1], 8.0, 1e-4);
  EXPECT_NEAR(r.extrapolated[2], 24.0, 1e-3);
}

TEST(Spectrum, GroundStateIsConstant) {
  for (auto p : {make_hemisphere(3), make_spherical_band(4, -0.3, 0.8), make_cylinder_demo()}) {
    auto r = neumann_spectrum(p, build_grid(p, 256), 2);
    EXPECT_NEAR(r.eigenvalues[0], 0.0, 1e-10) << p.name;
    const auto& v = r.center_vectors[0];
    for (double x : v) EXPECT_NEAR(x, v[0], 1e-10);
  }
}

TEST(Spectrum, OrthonormalAndNondecreasing) {
  auto p = make_spherical_band(3, -0.4, 1.0);
  auto f = assemble(p, build_grid(p, 400));
  auto r = neumann_spectrum(f, 5);
  const std::size_t c0 = f.first_center();
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < r.center_vectors[i].size(); ++k)
        dot += f.mass[c0 + k] * r.center_vectors[i][k] * r.center_vectors[j][k];
      EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-10);
    }
    if (i > 0) {
      // simplicity: gaps exceed discretization error
      EXPECT_GT(r.eigenvalues[i] - r.eigenvalues[i - 1], 10.0 * (r.error_estimate[i] + r.error_estimate[i - 1]));
    }
  }
}

TEST(Spectrum, SecondOrderConvergence) {
  auto p = make_hemisphere(3);
  std::vector<double> err;
  for (int m : {250, 500, 1000}) err.push_back(std::abs(neumann_spectrum(p, build_grid(p, m), 2).eigenvalues[1] - 8.0));
  EXPECT_GE(std::log2(err[0] / err[1]), 1.9);
  EXPECT_GE(std::log2(err[1] / err[2]), 1.9);
}

TEST(Spectrum, RichardsonAt2000Cells) {
  auto p = make_hemisphere(3);
  auto r = neumann_spectrum(p, build_grid(p, 2000), 2);
  EXPECT_NEAR(r.extrapolated[1], 8.0, 8e-5);
  EXPECT_LT(r.error_estimate[1], 1e-3);
}

TEST(Spectrum, EigenfunctionMatchesGegenbauer) {
  auto p = make_hemisphere(3);
  auto f = assemble(p, build_grid(p, 1000));
  auto r = neumann_spectrum(f, 2);
  const auto& v = r.center_vectors[1];
  std::vector<double> g;
  double norm = 0.0;
  const std::size_t c0 = f.first_center();
  for (std::size_t i = 0; i < v.size(); ++i) {
    g.push_back(boost::math::gegenbauer(2u, 1.0, f.grid.centers[i]));
    norm += f.mass[c0 + i] * g.back() * g.back();
  }
  double dev = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) dev = std::max(dev, std::abs(v[i] - g[i] / std::sqrt(norm)));
  EXPECT_LT(dev, 1e-4);
}

TEST(Spectrum, NeumannTraceFluxVanishes) {
  auto p = make_spherical_band(3, -0.5, 0.5);
  auto f = assemble(p, build_grid(p, 200));
  auto r = neumann_spectrum(f, 3);
  for (const auto& gf : r.eigenfunctions) {
    EXPECT_LE(std::abs(f.kappa.front() * (gf.centers.front() - gf.left)), 1e-9);
    EXPECT_LE(std::abs(f.kappa.back() * (gf.centers.back() - gf.right)), 1e-9);
  }
}

TEST(Spectrum, CountTooLarge) {
  auto p = make_hemisphere(3);
  EXPECT_THROW(neumann_spectrum(p, build_grid(p, 32), 40), Error);
}

namespace {

// Dense generalized eigensolve with a tiny regularizing mass on the unknowns
// that carry none in the pencil.
double dense_smallest(const AssembledForms& f, const std::vector<double>& mass, double eps) {
  const auto A = f.energy_matrix();
  const auto n = static_cast<Eigen::Index>(f.size());
  Eigen::MatrixXd Ad = Eigen::MatrixXd::Zero(n, n), Bd = Eigen::MatrixXd::Zero(n, n);
  double scale = 0.0;
  for (double m : mass) scale = std::max(scale, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    Ad(i, i) = A.diag[static_cast<std::size_t>(i)];
    if (i + 1 < n) Ad(i, i + 1) = Ad(i + 1, i) = A.off[static_cast<std::size_t>(i)];
    const double m = mass[static_cast<std::size_t>(i)];
    Bd(i, i) = m > 0 ? m : eps * scale;
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Ad, Bd);
  return es.eigenvalues()(0);
}

}  // namespace

TEST(Probe, HemispherePositiveAndMatchesDenseSolve) {
  auto p = make_hemisphere(3);
  auto f = assemble(p, build_grid(p, 64));
  auto r = conformal_eigen_probe(f);
  EXPECT_GT(r.lambda_dirichlet, 0.0);
  EXPECT_GT(r.lambda_robin, 0.0);
  EXPECT_GT(r.lambda_steklov, 0.0);
  EXPECT_EQ(r.sign, "+");
  EXPECT_TRUE(r.finiteness_certified);
  EXPECT_FALSE(r.possibly_unbounded);
  EXPECT_EQ(r.scope, "radial-restricted");
  // Robin: traces get a vanishing mass
  EXPECT_NEAR(dense_smallest(f, f.mass, 1e-9), r.lambda_robin, 1e-6 * r.lambda_robin);
  // Steklov: centers get a vanishing mass, traces the boundary mass 2(n-1)A
  std::vector<double> bmass(f.size(), 0.0);
  for (std::size_t t : f.trace_indices()) bmass[t] = 2.0 * (f.dim - 1) * f.area[t];
  EXPECT_NEAR(dense_smallest(f, bmass, 1e-9), r.lambda_steklov, 1e-6 * r.lambda_steklov);
  // Robin eigenvalue of the hemisphere with h = 0 is a_n mu_0 + s_g = 6
  EXPECT_NEAR(r.lambda_robin, 6.0, 1e-9);
}

TEST(Probe, ScalarFlatMinimalBoundary) {
  auto p = make_hemisphere(3);
  p.s_g = ScalarCurve::constant(0.0);
  auto r = conformal_eigen_probe(p, build_grid(p, 128));
  EXPECT_NEAR(r.lambda_robin, 0.0, 1e-10);
  EXPECT_TRUE(r.finiteness_certified);
}

TEST(Probe, StronglyNegativeCurvature) {
  auto p = make_spherical_band(3, -0.5, 0.5);
  p.s_g = ScalarCurve::constant(-500.0);
  auto r = conformal_eigen_probe(p, build_grid(p, 128));
  EXPECT_LT(r.lambda_dirichlet, 0.0);
  EXPECT_TRUE(r.possibly_unbounded);
  EXPECT_TRUE(r.steklov_degenerate);
  EXPECT_FALSE(r.finiteness_certified);
}
